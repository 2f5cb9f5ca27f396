use super::Mesh;
use crate::error::{Error, Result};

/// Boundary partition ∂Ω = Γ ∪ Γ₀ at mesh resolution.
///
/// Each boundary node owns the arc between the midpoints of its two adjacent
/// segments; Γ is a union of such node-support arcs and Γ₀ is the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    in_gamma: Vec<bool>,
    gamma: Vec<(f64, f64)>,
    gamma0: Vec<(f64, f64)>,
    weights: Vec<f64>,
    perimeter: f64,
}

impl BoundaryPartition {
    /// Builds a partition from an explicit node membership (indexed by
    /// boundary position).
    pub fn from_nodes(mesh: &Mesh, in_gamma: Vec<bool>) -> Result<Self> {
        if in_gamma.len() != mesh.num_boundary() {
            return Err(Error::Mismatch(format!(
                "{} membership flags for {} boundary nodes",
                in_gamma.len(),
                mesh.num_boundary()
            )));
        }
        let weights = support_weights(mesh);
        let lg: f64 = weights.iter().zip(&in_gamma).filter(|(_, &g)| g).map(|(w, _)| w).sum();
        let perimeter: f64 = weights.iter().sum();
        if lg <= 0.0 {
            return Err(Error::DegeneratePartition("Γ is empty at mesh resolution".into()));
        }
        if lg >= perimeter || in_gamma.iter().all(|&g| g) {
            return Err(Error::DegeneratePartition("Γ₀ is empty at mesh resolution".into()));
        }
        let starts = support_starts(mesh);
        let gamma = runs(&in_gamma, true, &starts, perimeter);
        let gamma0 = runs(&in_gamma, false, &starts, perimeter);
        Ok(BoundaryPartition {
            in_gamma,
            gamma,
            gamma0,
            weights,
            perimeter,
        })
    }

    /// Partition whose Γ holds the boundary nodes selected by `pred`
    /// (called with boundary position and point).
    pub fn from_predicate(
        mesh: &Mesh,
        pred: impl Fn(usize, super::Point) -> bool,
    ) -> Result<Self> {
        let flags = (0..mesh.num_boundary())
            .map(|k| pred(k, mesh.boundary_point(k)))
            .collect();
        Self::from_nodes(mesh, flags)
    }

    /// Whether boundary position `k` belongs to Γ.
    pub fn in_gamma(&self, k: usize) -> bool {
        self.in_gamma[k]
    }

    pub fn gamma_flags(&self) -> &[bool] {
        &self.in_gamma
    }

    pub fn gamma_nodes(&self) -> Vec<usize> {
        (0..self.in_gamma.len()).filter(|&k| self.in_gamma[k]).collect()
    }

    pub fn gamma0_nodes(&self) -> Vec<usize> {
        (0..self.in_gamma.len()).filter(|&k| !self.in_gamma[k]).collect()
    }

    /// Snapped Γ arcs `[start, end)`, `0 ≤ start < perimeter`, `end` may exceed the
    /// perimeter when the arc wraps through the origin.
    pub fn gamma_arcs(&self) -> &[(f64, f64)] {
        &self.gamma
    }

    pub fn gamma0_arcs(&self) -> &[(f64, f64)] {
        &self.gamma0
    }

    /// Λ(Γ).
    pub fn gamma_length(&self) -> f64 {
        self.measure(true)
    }

    /// Λ(Γ₀).
    pub fn gamma0_length(&self) -> f64 {
        self.measure(false)
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn len(&self) -> usize {
        self.in_gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_gamma.is_empty()
    }

    fn measure(&self, which: bool) -> f64 {
        self.weights
            .iter()
            .zip(&self.in_gamma)
            .filter(|(_, &g)| g == which)
            .map(|(w, _)| w)
            .sum()
    }
}

fn support_weights(mesh: &Mesh) -> Vec<f64> {
    mesh.boundary_weights()
}

/// Start of each node-support arc (midpoint of the preceding segment),
/// node 0's start is negative.
fn support_starts(mesh: &Mesh) -> Vec<f64> {
    let seg = mesh.segment_lengths();
    let s = mesh.arclength();
    let nb = seg.len();
    (0..nb).map(|k| s[k] - 0.5 * seg[(k + nb - 1) % nb]).collect()
}

fn runs(flags: &[bool], which: bool, starts: &[f64], perimeter: f64) -> Vec<(f64, f64)> {
    let nb = flags.len();
    // begin at a position where the run status changes so wrap-around runs stay whole
    let first = (0..nb)
        .find(|&k| flags[k] == which && flags[(k + nb - 1) % nb] != which)
        .unwrap_or(0);
    let mut arcs = Vec::new();
    let mut k = 0;
    while k < nb {
        let i = (first + k) % nb;
        if flags[i] == which && (k == 0 || flags[(i + nb - 1) % nb] != which) {
            let mut len = 0;
            while len < nb && flags[(i + len) % nb] == which {
                len += 1;
            }
            let start = starts[i].rem_euclid(perimeter);
            let end_idx = (i + len) % nb;
            let mut end = starts[end_idx].rem_euclid(perimeter);
            while end <= start {
                end += perimeter;
            }
            arcs.push((start, end));
            k += len;
        } else {
            k += 1;
        }
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    arcs
}

/// Partitions the boundary: Γ is the union of `gamma_spans` (arclength
/// intervals `[a, b)`) snapped to node-support boundaries, Γ₀ the complement.
///
/// Each endpoint snaps to the nearest support boundary, ties toward the
/// smaller arclength. A span may wrap through the origin by giving `b`
/// larger than the perimeter.
pub fn partition_boundary(mesh: &Mesh, gamma_spans: &[(f64, f64)]) -> Result<BoundaryPartition> {
    let perimeter = mesh.perimeter();
    let mut total = 0.0;
    for &(a, b) in gamma_spans {
        if !(a >= 0.0 && a < perimeter && b > a && b - a <= perimeter) {
            return Err(Error::DegeneratePartition(format!(
                "span [{a}, {b}) is not an arc of [0, {perimeter})"
            )));
        }
        total += b - a;
    }
    let mut sorted: Vec<_> = gamma_spans.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in sorted.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::DegeneratePartition(format!(
                "spans [{}, {}) and [{}, {}) overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    if let (Some(first), Some(last)) = (sorted.first(), sorted.last()) {
        if last.1 > perimeter && last.1 - perimeter > first.0 {
            return Err(Error::DegeneratePartition("wrapping span overlaps the first span".into()));
        }
    }
    if !(total > 0.0) {
        return Err(Error::DegeneratePartition("Λ(Γ) = 0".into()));
    }
    if total >= perimeter {
        return Err(Error::DegeneratePartition("Λ(Γ₀) = 0".into()));
    }

    let starts = support_starts(mesh);
    let nb = starts.len();
    // candidate snap points, extended one period on each side
    let mut cuts: Vec<f64> = Vec::with_capacity(3 * nb + 1);
    for shift in [-perimeter, 0.0, perimeter, 2.0 * perimeter] {
        cuts.extend(starts.iter().map(|&c| c + shift));
    }
    cuts.sort_by(f64::total_cmp);
    let snap = |x: f64| -> f64 {
        let mut best = cuts[0];
        for &c in &cuts {
            let (d, db) = ((c - x).abs(), (best - x).abs());
            if d < db || (d == db && c < best) {
                best = c;
            }
        }
        best
    };

    let s = mesh.arclength();
    let mut flags = vec![false; nb];
    for &(a, b) in &sorted {
        let (sa, sb) = (snap(a), snap(b));
        for k in 0..nb {
            for shift in [-perimeter, 0.0, perimeter] {
                let x = s[k] + shift;
                if x >= sa && x < sb {
                    flags[k] = true;
                }
            }
        }
    }
    BoundaryPartition::from_nodes(mesh, flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};
    use approx::assert_relative_eq;

    fn square_mesh() -> Mesh {
        triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.125).unwrap()
    }

    #[test]
    fn half_split() {
        let m = square_mesh();
        let p = partition_boundary(&m, &[(0.0, 2.0)]).unwrap();
        assert_relative_eq!(p.gamma_length(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(p.gamma0_length(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn full_span_is_degenerate() {
        let m = square_mesh();
        assert!(matches!(
            partition_boundary(&m, &[(0.0, 4.0)]),
            Err(Error::DegeneratePartition(_))
        ));
    }

    #[test]
    fn disconnected_gamma() {
        let m = square_mesh();
        let p = partition_boundary(&m, &[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_relative_eq!(p.gamma_length(), 2.0, epsilon = 1e-12);
        assert_eq!(p.gamma_arcs().len(), 2);
        assert_eq!(p.gamma0_arcs().len(), 2);
    }

    #[test]
    fn snapping_is_idempotent() {
        let m = triangulate(&Domain::regular(40, 1.0).unwrap(), 0.1).unwrap();
        let p = partition_boundary(&m, &[(0.37, 1.91), (3.3, 4.05)]).unwrap();
        let again = partition_boundary(&m, p.gamma_arcs()).unwrap();
        assert_eq!(p.gamma_flags(), again.gamma_flags());
    }

    #[test]
    fn overlapping_spans_rejected() {
        let m = square_mesh();
        assert!(partition_boundary(&m, &[(0.0, 1.5), (1.0, 2.0)]).is_err());
    }
}
