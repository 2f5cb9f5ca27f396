use super::{Mesh, Point};

/// Unit tangent, outward unit normal and arclength quadrature weight at every
/// boundary node, indexed by boundary position.
#[derive(Debug, Clone)]
pub struct BoundaryFrame {
    pub tau: Vec<Point>,
    pub normal: Vec<Point>,
    pub weights: Vec<f64>,
}

impl BoundaryFrame {
    /// 𝔱 = τ₁ + iτ₂ at boundary position `k`.
    pub fn tangent_complex(&self, k: usize) -> num_complex::Complex64 {
        self.tau[k].to_complex()
    }

    /// 𝔫 = n₁ + in₂ at boundary position `k`.
    pub fn normal_complex(&self, k: usize) -> num_complex::Complex64 {
        self.normal[k].to_complex()
    }
}

/// Per-node frames: the tangent is the normalized sum of the adjacent edge
/// directions (the angle bisector at corners), the normal is the tangent
/// rotated by -π/2, and the weight is half the adjacent segment lengths.
pub fn boundary_frames(mesh: &Mesh) -> BoundaryFrame {
    let nb = mesh.num_boundary();
    let seg = mesh.segment_lengths();
    let mut tau = Vec::with_capacity(nb);
    let mut normal = Vec::with_capacity(nb);
    let mut weights = Vec::with_capacity(nb);
    for k in 0..nb {
        let prev = (k + nb - 1) % nb;
        let next = (k + 1) % nb;
        let p = mesh.boundary_point(k);
        let d_in = (p - mesh.boundary_point(prev)).normalized();
        let d_out = (mesh.boundary_point(next) - p).normalized();
        let t = (d_in + d_out).normalized();
        tau.push(t);
        normal.push(Point::new(t.y, -t.x));
        weights.push(0.5 * (seg[prev] + seg[k]));
    }
    BoundaryFrame { tau, normal, weights }
}
