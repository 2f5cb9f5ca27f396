use super::{similarity_factorize, ComplexField};
use crate::error::{Error, Result};
use crate::fem::{
    normal_derivative, solve_robin, tangential_derivative, BoundaryFunction, Conductivity, RobinSpec, ScalarField,
};
use crate::geometry::{Mesh, Point};
use crate::quadrature::gauss_legendre;
use serde::Serialize;

/// Floor applied to |Φ| inside the logarithm.
const LOG_FLOOR: f64 = 1e-300;
/// Default probe threshold relative to the boundary size of the data.
const PROBE_RELATIVE_TOL: f64 = 1e-6;

/// ∫_{∂Ω} log|Φ| dΛ, four Gauss points per boundary segment on the linear
/// interpolant of the trace.
pub fn boundary_log_integral(mesh: &Mesh, phi: &ComplexField) -> Result<f64> {
    if phi.len() != mesh.num_nodes() {
        return Err(Error::Mismatch(format!(
            "Φ has {} values, mesh has {} nodes",
            phi.len(),
            mesh.num_nodes()
        )));
    }
    let rule = gauss_legendre(4);
    let trace = phi.trace(mesh);
    let seg = mesh.segment_lengths();
    let nb = trace.len();
    let mut total = 0.0;
    for k in 0..nb {
        let (a, b) = (trace[k], trace[(k + 1) % nb]);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = 0.5 * (1.0 + x);
            let z = a + (b - a) * t;
            total += 0.5 * w * seg[k] * z.norm().max(LOG_FLOOR).ln();
        }
    }
    Ok(total)
}

/// Boundary positions where |v| ≤ tol.
pub fn vanishing_set(v: &BoundaryFunction, tol: f64) -> Vec<bool> {
    v.values().iter().map(|x| x.abs() <= tol).collect()
}

/// Output of [`rolle_zero_set`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolleSet {
    /// Boundary positions, increasing.
    pub nodes: Vec<usize>,
    pub diagnostic: Option<String>,
}

impl RolleSet {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// Nodes of B whose two neighbours are in B and where the centred tangential
/// derivative of v satisfies |∂_τ v| ≤ tol / (local support length).
///
/// `b` is indexed by boundary position. The boundary is closed, so runs wrap.
pub fn rolle_zero_set(mesh: &Mesh, v: &BoundaryFunction, b: &[bool], tol: f64) -> Result<RolleSet> {
    let nb = mesh.num_boundary();
    if v.len() != nb || b.len() != nb {
        return Err(Error::Mismatch(format!(
            "trace has {} values and the subset {} flags for {nb} boundary nodes",
            v.len(),
            b.len()
        )));
    }
    if let Some(k) = (0..nb).find(|&k| b[k] && v.values()[k].abs() > tol) {
        return Err(Error::InvalidInput(format!(
            "|v| = {:e} > tol = {tol:e} at boundary position {k}, which is in B",
            v.values()[k].abs()
        )));
    }
    let dv = tangential_derivative(mesh, v)?;
    let weights = mesh.boundary_weights();
    let mut nodes = Vec::new();
    let mut has_run = false;
    for k in 0..nb {
        let (prev, next) = ((k + nb - 1) % nb, (k + 1) % nb);
        if b[k] && b[prev] && b[next] {
            has_run = true;
            if dv.values()[k].abs() <= tol / weights[k] {
                nodes.push(k);
            }
        }
    }
    let diagnostic = if !has_run {
        Some("B has no three consecutive nodes; isolated zeros carry no arclength".to_string())
    } else if nodes.is_empty() {
        Some("every interior node of B has a large tangential derivative".to_string())
    } else {
        None
    };
    Ok(RolleSet { nodes, diagnostic })
}

/// Boundary and interior norms of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    /// ‖∂_τ u‖_{L²(∂Ω)}
    pub tangential: f64,
    /// ‖∂ₙu‖_{L²(∂Ω)}
    pub normal: f64,
    /// ‖M_α ∇u‖_{L²(∂Ω)} sampled over element centroids in the cone.
    pub maximal: f64,
    /// (Σ_j ‖d^{1/2} ∂_j ∇u‖² + ‖u‖²_{W^{1,2}})^{1/2}
    pub weighted_interior: f64,
}

fn nodal_gradient(mesh: &Mesh, u: &[f64]) -> Vec<Point> {
    let mut acc = vec![Point::new(0.0, 0.0); mesh.num_nodes()];
    let mut weight = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        let g = mesh.gradient(t, u);
        for &i in tri {
            acc[i] = acc[i] + a * g;
            weight[i] += a;
        }
    }
    acc.iter().zip(&weight).map(|(g, w)| (1.0 / w) * *g).collect()
}

/// Norm report for u with aperture `alpha` > 1 in the nontangential cone
/// {x : |x − ξ| < α d(x, ∂Ω)}.
pub fn norm_equivalence_report(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity, alpha: f64) -> Result<NormReport> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("aperture α = {alpha} must exceed 1")));
    }
    let trace = u.trace(mesh);
    let tangential = tangential_derivative(mesh, &trace)?.l2_norm(mesh);
    let normal = normal_derivative(mesh, u, sigma)?.l2_norm(mesh);

    let domain = mesh.domain();
    let nt = mesh.triangles().len();
    let grads: Vec<f64> = (0..nt).map(|t| mesh.gradient(t, u.values()).norm()).collect();
    let cent: Vec<(Point, f64)> = (0..nt)
        .map(|t| {
            let c = mesh.centroid(t);
            (c, domain.distance_to_boundary(c))
        })
        .collect();
    let weights = mesh.boundary_weights();
    let mut maximal = 0.0;
    for (k, &node) in mesh.boundary_nodes().iter().enumerate() {
        let xi = mesh.nodes()[node];
        let mut m: f64 = 0.0;
        for t in 0..nt {
            let (c, d) = cent[t];
            if c.dist(xi) < alpha * d || mesh.triangles()[t].contains(&node) {
                m = m.max(grads[t]);
            }
        }
        maximal += weights[k] * m * m;
    }

    let g = nodal_gradient(mesh, u.values());
    let gx: Vec<f64> = g.iter().map(|p| p.x).collect();
    let gy: Vec<f64> = g.iter().map(|p| p.y).collect();
    let mut hess = 0.0;
    for t in 0..nt {
        let [a, b, c] = mesh.triangle_points(t);
        let d = [0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)]
            .iter()
            .map(|&p| domain.distance_to_boundary(p))
            .sum::<f64>()
            / 3.0;
        let (hx, hy) = (mesh.gradient(t, &gx), mesh.gradient(t, &gy));
        hess += mesh.triangle_area(t) * d * (hx.dot(hx) + hy.dot(hy));
    }
    Ok(NormReport {
        tangential,
        normal,
        maximal: maximal.sqrt(),
        weighted_interior: (hess + u.w12_norm(mesh).powi(2)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Consistent,
    NotApplicable,
    Inconsistent,
}

/// Factorization chain evidence gathered when the probe is triggered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainEvidence {
    pub rolle_nodes: Vec<usize>,
    /// max |Φ| over the Rolle set, 0 when it is empty.
    pub max_phi_on_rolle: f64,
    pub max_phi: f64,
    pub log_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    /// max(|u|, |∂ₙu|) on γ
    pub eps1: f64,
    /// ‖u‖_{W^{1,2}(Ω)}
    pub eps2: f64,
    /// ε₂/ε₁, infinite when ε₁ = 0 < ε₂ and 0 when both vanish.
    pub ratio: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub chain: Option<ChainEvidence>,
}

/// Probes "Cauchy data small on γ ⇒ u small in Ω" for one solution.
///
/// The probe triggers when ε₁ ≤ tol (default 1e-6 times the boundary maximum
/// of max(|u|, |∂ₙu|)). A triggered probe is consistent when ε₂ ≤ tol as well.
/// Chain evidence needs an isotropic σ and is only gathered when triggered.
pub fn continuation_probe(
    mesh: &Mesh,
    u: &ScalarField,
    sigma: &Conductivity,
    gamma: &[bool],
    tol: Option<f64>,
) -> Result<ProbeReport> {
    let nb = mesh.num_boundary();
    if gamma.len() != nb {
        return Err(Error::Mismatch(format!("γ has {} flags for {nb} boundary nodes", gamma.len())));
    }
    if !gamma.iter().any(|&g| g) {
        return Err(Error::DegeneratePartition("γ is empty at mesh resolution".into()));
    }
    let trace = u.trace(mesh);
    let flux = normal_derivative(mesh, u, sigma)?;
    let local: Vec<f64> = trace.values().iter().zip(flux.values()).map(|(a, b)| a.abs().max(b.abs())).collect();
    let scale = local.iter().copied().fold(0.0, f64::max);
    let threshold = match tol {
        Some(t) if t >= 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::InvalidInput(format!("probe tolerance {t} must be finite and nonnegative"))),
        None => PROBE_RELATIVE_TOL * scale,
    };
    let eps1 = (0..nb).filter(|&k| gamma[k]).map(|k| local[k]).fold(0.0, f64::max);
    let eps2 = u.w12_norm(mesh);
    let ratio = if eps2 == 0.0 {
        0.0
    } else if eps1 == 0.0 {
        f64::INFINITY
    } else {
        eps2 / eps1
    };
    if eps2 == 0.0 {
        return Ok(ProbeReport { eps1, eps2, ratio, threshold, verdict: Verdict::Consistent, chain: None });
    }
    if eps1 > threshold {
        return Ok(ProbeReport { eps1, eps2, ratio, threshold, verdict: Verdict::NotApplicable, chain: None });
    }
    let verdict = if eps2 <= threshold { Verdict::Consistent } else { Verdict::Inconsistent };
    let chain = if sigma.is_isotropic() {
        let b: Vec<bool> = (0..nb).map(|k| gamma[k] && trace.values()[k].abs() <= threshold).collect();
        let rolle = rolle_zero_set(mesh, &trace, &b, threshold)?;
        let fact = similarity_factorize(mesh, u, sigma)?;
        let phi_b = fact.phi.trace(mesh);
        Some(ChainEvidence {
            max_phi_on_rolle: rolle.nodes.iter().map(|&k| phi_b[k].norm()).fold(0.0, f64::max),
            max_phi: fact.phi.max_abs(),
            log_integral: boundary_log_integral(mesh, &fact.phi)?,
            rolle_nodes: rolle.nodes,
        })
    } else {
        None
    };
    Ok(ProbeReport { eps1, eps2, ratio, threshold, verdict, chain })
}

/// Probes the family u_k solving the Robin problem with data 2^{−k} g,
/// k = 0, …, levels − 1, all against the default threshold of u₀.
pub fn continuation_family(mesh: &Mesh, spec: &RobinSpec, gamma: &[bool], levels: usize) -> Result<Vec<ProbeReport>> {
    let mut out = Vec::with_capacity(levels);
    let mut tol = None;
    for k in 0..levels {
        let scaled = spec.with_g(spec.g.scaled(0.5f64.powi(k as i32)));
        let u = solve_robin(&scaled, mesh)?;
        let report = continuation_probe(mesh, &u, &spec.sigma, gamma, tol)?;
        tol.get_or_insert(report.threshold);
        out.push(report);
    }
    Ok(out)
}
