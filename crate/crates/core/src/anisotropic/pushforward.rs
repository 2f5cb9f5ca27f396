use super::beltrami::BeltramiMap;
use crate::error::{Error, Result};
use crate::fem::{interior_residual, BoundaryFunction, Conductivity, ScalarField, Sym2};
use crate::geometry::{boundary_frames, Locator, Mesh, Point};
use rayon::prelude::*;

/// Isotropic conductivity σ̃ on the image mesh Θ(Ω) (same connectivity,
/// mapped nodes) with the consistency checks of the transport.
#[derive(Debug, Clone)]
pub struct Pushforward {
    pub image: Mesh,
    /// √det σ ∘ Θ⁻¹ at the image nodes.
    pub sigma_tilde: Conductivity,
    /// DΘ σ DΘᵀ / det DΘ at the image nodes.
    pub matrix_form: Vec<Sym2>,
    /// max ‖matrix_form − σ̃ I‖_F / σ̃.
    pub matrix_discrepancy: f64,
    /// max |σ̃² − det σ(x)| / det σ(x) with σ̃ from the inverted Θ.
    pub det_discrepancy: f64,
    /// max |Θ⁻¹(Θ(x)) − x| over the nodes, relative to the domain diameter.
    pub inversion_error: f64,
}

fn tri_orientation([a, b, c]: [Point; 3]) -> f64 {
    (b - a).cross(c - a)
}

/// DΘ σ DΘᵀ / det DΘ for a real Jacobian `j` (rows are the components of Θ).
pub fn transport_matrix(j: [[f64; 2]; 2], s: Sym2) -> Result<Sym2> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det > 0.0) {
        return Err(Error::Numerical(format!("DΘ is not orientation preserving (det {det:e})")));
    }
    let m = [[s.s11, s.s12], [s.s12, s.s22]];
    let mut js = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            js[r][c] = j[r][0] * m[0][c] + j[r][1] * m[1][c];
        }
    }
    let entry = |r: usize, c: usize| (js[r][0] * j[c][0] + js[r][1] * j[c][1]) / det;
    Ok(Sym2::new(entry(0, 0), entry(0, 1), entry(1, 1)))
}

/// Transports σ through Θ: the image mesh carries the mapped nodes, σ̃ is
/// √det σ read back at Θ⁻¹ of each image node.
pub fn pushforward_conductivity(mesh: &Mesh, sigma: &Conductivity, map: &BeltramiMap) -> Result<Pushforward> {
    if sigma.len() != mesh.num_nodes() {
        return Err(Error::Mismatch(format!(
            "conductivity has {} values, mesh has {} nodes",
            sigma.len(),
            mesh.num_nodes()
        )));
    }
    let image_nodes: Vec<Point> = mesh
        .nodes()
        .iter()
        .map(|&p| {
            let z = map.eval(p);
            Point::new(z.re, z.im)
        })
        .collect();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let before = tri_orientation(mesh.triangle_points(t));
        let after = tri_orientation(tri.map(|i| image_nodes[i]));
        if after * before <= 0.0 {
            return Err(Error::Numerical(format!(
                "Θ folds triangle {t}: the sampled map is not injective at this resolution"
            )));
        }
    }
    let mut arclength = vec![0.0];
    let b = mesh.boundary_nodes();
    for k in 1..b.len() {
        arclength.push(arclength[k - 1] + image_nodes[b[k]].dist(image_nodes[b[k - 1]]));
    }
    let image = Mesh::from_parts(image_nodes.clone(), mesh.triangles().to_vec(), b.to_vec(), arclength)
        .map_err(|e| Error::Numerical(format!("image mesh is invalid: {e}")))?;

    let loc = Locator::new(mesh);
    let root_det: Vec<f64> = (0..mesh.num_nodes()).map(|i| sigma.matrix_at(i).det().sqrt()).collect();
    let diam = mesh.domain().diameter();
    let per_node = image_nodes
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let x = mesh.nodes()[i];
            let pre = map.inverse(q.to_complex()).map_err(|e| {
                Error::Numerical(format!("Θ inversion failed at node {i}: {e}"))
            })?;
            let st = loc.interpolate(&root_det, pre);
            let s = sigma.matrix_at(i);
            let m = transport_matrix(map.jacobian(x), s)?;
            let frob = ((m.s11 - st).powi(2) + 2.0 * m.s12.powi(2) + (m.s22 - st).powi(2)).sqrt() / st;
            let det_err = (st * st - s.det()).abs() / s.det();
            Ok((st, m, frob, det_err, pre.dist(x) / diam))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Pushforward {
        image,
        sigma_tilde: Conductivity::isotropic(per_node.iter().map(|r| r.0).collect())?,
        matrix_form: per_node.iter().map(|r| r.1).collect(),
        matrix_discrepancy: 0.0,
        det_discrepancy: 0.0,
        inversion_error: 0.0,
    };
    for r in &per_node {
        out.matrix_discrepancy = out.matrix_discrepancy.max(r.2);
        out.det_discrepancy = out.det_discrepancy.max(r.3);
        out.inversion_error = out.inversion_error.max(r.4);
    }
    Ok(out)
}

/// Residual of v = u∘Θ⁻¹ (the nodal values of u carried to the image nodes)
/// in the isotropic equation with σ̃.
pub fn composition_residual(push: &Pushforward, u: &ScalarField) -> Result<f64> {
    interior_residual(&push.image, u, &push.sigma_tilde)
}

/// Boundary data carried to Θ(∂Ω), with the per-node stretch |DΘτ|.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedData {
    pub tangential: BoundaryFunction,
    pub flux: BoundaryFunction,
    pub stretch: Vec<f64>,
}

fn stretches(mesh: &Mesh, map: &BeltramiMap) -> Result<Vec<f64>> {
    let frames = boundary_frames(mesh);
    (0..mesh.num_boundary())
        .map(|k| {
            let j = map.jacobian(mesh.boundary_point(k));
            let t = frames.tau[k];
            let s = Point::new(j[0][0] * t.x + j[0][1] * t.y, j[1][0] * t.x + j[1][1] * t.y).norm();
            if s < 1e-8 {
                Err(Error::Numerical(format!("|DΘτ| = {s:e} is degenerate at boundary position {k}")))
            } else {
                Ok(s)
            }
        })
        .collect()
}

fn check_boundary(mesh: &Mesh, f: &BoundaryFunction, what: &str) -> Result<()> {
    if f.len() != mesh.num_boundary() {
        return Err(Error::Mismatch(format!(
            "{what} has {} values, boundary has {} nodes",
            f.len(),
            mesh.num_boundary()
        )));
    }
    Ok(())
}

/// ∂_τu/|DΘτ| and n·σ∇u/|DΘτ| at the mapped boundary nodes.
pub fn pushforward_boundary_data(
    mesh: &Mesh,
    tangential: &BoundaryFunction,
    flux: &BoundaryFunction,
    map: &BeltramiMap,
) -> Result<TransportedData> {
    check_boundary(mesh, tangential, "tangential derivative")?;
    check_boundary(mesh, flux, "flux")?;
    let stretch = stretches(mesh, map)?;
    let scale = |f: &BoundaryFunction| {
        BoundaryFunction::new(f.values().iter().zip(&stretch).map(|(v, s)| v / s).collect())
    };
    Ok(TransportedData {
        tangential: scale(tangential)?,
        flux: scale(flux)?,
        stretch,
    })
}

/// Inverse of [`pushforward_boundary_data`].
pub fn pullback_boundary_data(data: &TransportedData) -> Result<(BoundaryFunction, BoundaryFunction)> {
    if data.tangential.len() != data.stretch.len() || data.flux.len() != data.stretch.len() {
        return Err(Error::Mismatch("transported data and stretch lengths differ".into()));
    }
    let scale = |f: &BoundaryFunction| {
        BoundaryFunction::new(f.values().iter().zip(&data.stretch).map(|(v, s)| v * s).collect())
    };
    Ok((scale(&data.tangential)?, scale(&data.flux)?))
}
