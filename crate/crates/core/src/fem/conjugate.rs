use super::assembly::weighted_boundary_integral;
use super::solve::{NeumannSolver, Normalization};
use super::{Conductivity, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};

/// Relative least-squares misfit above which `u` is not treated as a solution.
const CURL_TOL: f64 = 0.5;

/// σ-harmonic conjugate together with its least-squares misfit.
#[derive(Debug, Clone)]
pub struct ConjugateField {
    pub v: ScalarField,
    /// ‖∇v − (−σ∂₂u, σ∂₁u)‖ / ‖σ∇u‖ over Ω.
    pub residual: f64,
}

/// σ-harmonic conjugate v with ∇v = (−σ∂₂u, σ∂₁u), normalized by
/// ∫_{∂Ω} v dΛ = 0.
pub fn sigma_conjugate(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity) -> Result<ScalarField> {
    Ok(sigma_conjugate_with_residual(mesh, u, sigma)?.v)
}

/// Least-squares fit of a P1 field to the rotated flux, element by element.
/// Fails when the misfit shows that σ∇u is far from divergence free.
pub fn sigma_conjugate_with_residual(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity) -> Result<ConjugateField> {
    u.check_len(mesh)?;
    sigma.check_len(mesh)?;
    sigma.require_isotropic("the σ-harmonic conjugate")?;
    let nt = mesh.triangles().len();
    let rotated: Vec<Point> = (0..nt)
        .map(|t| {
            let g = mesh.gradient(t, u.values());
            let s = sigma.element_scalar(mesh, t);
            Point::new(-s * g.y, s * g.x)
        })
        .collect();
    let mut b = vec![0.0; mesh.num_nodes()];
    for t in 0..nt {
        let area = mesh.triangle_area(t);
        let g = mesh.hat_gradients(t);
        for (i, &node) in mesh.triangles()[t].iter().enumerate() {
            b[node] += area * g[i].dot(rotated[t]);
        }
    }
    let one = Conductivity::constant(mesh, 1.0)?;
    let solver = NeumannSolver::new(mesh, &one)?;
    let v = solver.solve_load(mesh, &b, Normalization::PointZero(0))?;
    let mut v = v.into_values();
    let mean = weighted_boundary_integral(mesh, &vec![1.0; mesh.num_boundary()], &v) / mesh.perimeter();
    for x in &mut v {
        *x -= mean;
    }
    let (mut misfit, mut size) = (0.0, 0.0);
    for t in 0..nt {
        let area = mesh.triangle_area(t);
        let d = mesh.gradient(t, &v) - rotated[t];
        misfit += area * d.dot(d);
        size += area * rotated[t].dot(rotated[t]);
    }
    let residual = if size == 0.0 { 0.0 } else { (misfit / size).sqrt() };
    if residual > CURL_TOL {
        return Err(Error::InvalidInput(format!(
            "rotated flux misfit {residual:.3} exceeds {CURL_TOL}: u does not solve ∇·(σ∇u) = 0"
        )));
    }
    Ok(ConjugateField {
        v: ScalarField::new(v)?,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{normal_derivative, solve_neumann, tangential_derivative, BoundaryFunction};
    use crate::geometry::{triangulate, Domain};

    fn disk(h: f64) -> Mesh {
        triangulate(&Domain::regular(48, 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn conjugate_of_re_z_and_re_z_squared() {
        let m = disk(0.08);
        let s = Conductivity::constant(&m, 1.0).unwrap();
        for (u, v) in [
            (ScalarField::from_fn(&m, |p| p.x), ScalarField::from_fn(&m, |p| p.y)),
            (
                ScalarField::from_fn(&m, |p| p.x * p.x - p.y * p.y),
                ScalarField::from_fn(&m, |p| 2.0 * p.x * p.y),
            ),
        ] {
            let c = sigma_conjugate_with_residual(&m, &u, &s).unwrap();
            let d = c.v.sub(&v).into_values();
            let mean = m.integrate(&d) / m.area();
            let centred: Vec<f64> = d.iter().map(|x| x - mean).collect();
            assert!(m.l2_norm(&centred) < 0.02, "{}", m.l2_norm(&centred));
        }
    }

    #[test]
    fn boundary_transfer_and_double_conjugate() {
        let m = disk(0.08);
        let s = Conductivity::from_fn(&m, |p| 1.0 + 0.5 * (-4.0 * p.dot(p)).exp()).unwrap();
        let g = BoundaryFunction::from_fn(&m, |_, p| p.y.atan2(p.x).cos());
        let u = solve_neumann(&m, &s, &g).unwrap();
        let v = sigma_conjugate(&m, &u, &s).unwrap();
        // ∂ₙu = ∂_τ v / σ
        let dtv = tangential_derivative(&m, &v.trace(&m)).unwrap();
        let sb: Vec<f64> = m.boundary_nodes().iter().map(|&i| s.scalar_at(i)).collect();
        let transfer = BoundaryFunction::new(dtv.values().iter().zip(&sb).map(|(d, s)| d / s).collect()).unwrap();
        let dn = normal_derivative(&m, &u, &s).unwrap();
        assert!(transfer.sub(&dn).l2_norm(&m) < 0.1 * dn.l2_norm(&m));
        // v solves the equation with 1/σ, and its conjugate returns −u + const
        let inv = s.reciprocal().unwrap();
        let w = sigma_conjugate(&m, &v, &inv).unwrap();
        let d: Vec<f64> = w.values().iter().zip(u.values()).map(|(a, b)| a + b).collect();
        let mean = m.integrate(&d) / m.area();
        let centred: Vec<f64> = d.iter().map(|x| x - mean).collect();
        assert!(m.l2_norm(&centred) < 0.05 * u.l2_norm(&m));
    }
}
