use super::{Domain, Point};
use crate::error::{Error, Result};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

/// Conforming P1 triangulation of a polygonal domain.
///
/// The boundary loop is ordered counterclockwise starting at polygon vertex 0.
/// Meshes produced by [`triangulate`] list the boundary nodes first, so node
/// `i < num_boundary()` sits at boundary position `i`.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    arclength: Vec<f64>,
    boundary_pos: Vec<Option<usize>>,
    h: f64,
}

impl Mesh {
    /// Assembles a mesh from raw parts, validating the invariants.
    ///
    /// The polygon is recovered from the boundary loop by dropping collinear
    /// boundary nodes; boundary node 0 must be a polygon corner.
    pub fn from_parts(
        nodes: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary: Vec<usize>,
        arclength: Vec<f64>,
    ) -> Result<Self> {
        if boundary.len() < 3 || boundary.len() != arclength.len() {
            return Err(Error::InvalidMesh(
                "boundary loop needs ≥ 3 nodes and one arclength per node".into(),
            ));
        }
        for t in &mut triangles {
            if t.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t:?} references a missing node")));
            }
            let a = tri_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if a < 0.0 {
                t.swap(1, 2);
            } else if a == 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t:?} has zero area")));
            }
        }
        for w in arclength.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidMesh(
                    "boundary arclength must increase strictly".into(),
                ));
            }
        }
        let mut boundary_pos = vec![None; nodes.len()];
        for (k, &i) in boundary.iter().enumerate() {
            if i >= nodes.len() || boundary_pos[i].is_some() {
                return Err(Error::InvalidMesh(format!("bad boundary node index {i}")));
            }
            boundary_pos[i] = Some(k);
        }
        let nb = boundary.len();
        let mut corners = Vec::new();
        for k in 0..nb {
            let prev = nodes[boundary[(k + nb - 1) % nb]];
            let cur = nodes[boundary[k]];
            let next = nodes[boundary[(k + 1) % nb]];
            let turn = (cur - prev).normalized().cross((next - cur).normalized());
            if turn.abs() > 1e-10 || k == 0 {
                corners.push(cur);
            }
        }
        let loop_area: f64 = (0..nb)
            .map(|k| nodes[boundary[k]].cross(nodes[boundary[(k + 1) % nb]]))
            .sum();
        if loop_area <= 0.0 {
            return Err(Error::InvalidMesh("boundary loop must be counterclockwise".into()));
        }
        let domain = Domain::new(corners)?;
        let mut edge_count = std::collections::HashMap::new();
        for t in &triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        for k in 0..nb {
            let (a, b) = (boundary[k], boundary[(k + 1) % nb]);
            if edge_count.get(&(a.min(b), a.max(b))) != Some(&1) {
                return Err(Error::InvalidMesh(format!(
                    "boundary segment {a}-{b} is not the edge of exactly one triangle"
                )));
            }
        }
        let h = max_diameter(&nodes, &triangles);
        Ok(Mesh {
            domain,
            nodes,
            triangles,
            boundary,
            arclength,
            boundary_pos,
            h,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary node indices, counterclockwise from polygon vertex 0.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// Arclength coordinate of each boundary node.
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    /// Position of `node` in the boundary loop, if it is a boundary node.
    pub fn boundary_position(&self, node: usize) -> Option<usize> {
        self.boundary_pos[node]
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn perimeter(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Boundary point of boundary position `k`.
    pub fn boundary_point(&self, k: usize) -> Point {
        self.nodes[self.boundary[k]]
    }

    /// Length of boundary segment `k`, joining positions `k` and `k + 1`.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let nb = self.boundary.len();
        (0..nb)
            .map(|k| self.boundary_point(k).dist(self.boundary_point((k + 1) % nb)))
            .collect()
    }

    /// Length of each node's support arc (half of each adjacent segment).
    pub fn boundary_weights(&self) -> Vec<f64> {
        let seg = self.segment_lengths();
        let nb = seg.len();
        (0..nb).map(|k| 0.5 * (seg[(k + nb - 1) % nb] + seg[k])).collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        tri_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        (1.0 / 3.0) * (a + b + c)
    }

    /// Gradients of the three P1 hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangle_points(t);
        let twice = 2.0 * tri_area(a, b, c);
        [
            (1.0 / twice) * (c - b).perp(),
            (1.0 / twice) * (a - c).perp(),
            (1.0 / twice) * (b - a).perp(),
        ]
    }

    /// Gradient of the P1 interpolant of nodal `values` on triangle `t`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> Point {
        let g = self.hat_gradients(t);
        let [a, b, c] = self.triangles[t];
        values[a] * g[0] + values[b] * g[1] + values[c] * g[2]
    }

    /// Lumped (row-sum) mass of each node: one third of the adjacent triangle areas.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t) / 3.0;
            for &i in &self.triangles[t] {
                m[i] += a;
            }
        }
        m
    }

    /// ∫_Ω u for a nodal P1 field.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangles[t];
                self.triangle_area(t) * (values[a] + values[b] + values[c]) / 3.0
            })
            .sum()
    }

    /// Exact L² norm of a nodal P1 field.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.l2_inner(values, values).sqrt()
    }

    /// Exact L² inner product of two nodal P1 fields.
    pub fn l2_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangles[t];
                let (ua, ub, uc) = (u[a], u[b], u[c]);
                let (va, vb, vc) = (v[a], v[b], v[c]);
                let s = ua * va + ub * vb + uc * vc;
                let cross = (ua + ub + uc) * (va + vb + vc);
                self.triangle_area(t) * (s + cross) / 12.0
            })
            .sum()
    }
}

pub(crate) fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

fn max_diameter(nodes: &[Point], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|&[a, b, c]| {
            let (pa, pb, pc) = (nodes[a], nodes[b], nodes[c]);
            pa.dist(pb).max(pb.dist(pc)).max(pc.dist(pa))
        })
        .fold(0.0, f64::max)
}

/// Triangulates `domain` with target element size `h_target`.
///
/// Polygon edges are split uniformly into segments no longer than `h_target`,
/// the interior is seeded with a triangular lattice of spacing `h_target`
/// centred on the polygon centroid, and the point set is triangulated by a
/// constrained Delaunay triangulation with the boundary segments as
/// constraints.
pub fn triangulate(domain: &Domain, h_target: f64) -> Result<Mesh> {
    let shortest = domain.shortest_edge();
    if !(h_target > 0.0) || !h_target.is_finite() {
        return Err(Error::InvalidInput(format!("h_target must be positive, got {h_target}")));
    }
    if h_target > shortest * (1.0 + 1e-9) {
        return Err(Error::MeshTooCoarse {
            h_target,
            max_feasible: shortest,
        });
    }

    let mut points: Vec<Point> = Vec::new();
    let mut arclength = Vec::new();
    let mut s = 0.0;
    for i in 0..domain.len() {
        let (a, b) = domain.edge(i);
        let len = a.dist(b);
        let k = (len / h_target - 1e-9).ceil().max(1.0) as usize;
        for j in 0..k {
            let t = j as f64 / k as f64;
            points.push(a + t * (b - a));
            arclength.push(s + t * len);
        }
        s += len;
    }
    let nb = points.len();

    let c = domain.centroid();
    let (lo, hi) = domain.bounding_box();
    let dy = h_target * 3f64.sqrt() / 2.0;
    let jmin = ((lo.y - c.y) / dy).floor() as i64 - 1;
    let jmax = ((hi.y - c.y) / dy).ceil() as i64 + 1;
    let imin = ((lo.x - c.x) / h_target).floor() as i64 - 1;
    let imax = ((hi.x - c.x) / h_target).ceil() as i64 + 1;
    let clearance = 0.5 * h_target;
    for j in jmin..=jmax {
        let shift = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        for i in imin..=imax {
            let p = Point::new(c.x + (i as f64 + shift) * h_target, c.y + j as f64 * dy);
            if domain.contains(p) && domain.distance_to_boundary(p) >= clearance {
                points.push(p);
            }
        }
    }

    let vertices: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let edges: Vec<[usize; 2]> = (0..nb).map(|k| [k, (k + 1) % nb]).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(vertices, edges)
        .map_err(|e| Error::InvalidMesh(format!("triangulation failed: {e:?}")))?;

    let lookup: std::collections::HashMap<(u64, u64), usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.x.to_bits(), p.y.to_bits()), i))
        .collect();
    let mut index_of = vec![usize::MAX; cdt.num_vertices()];
    for v in cdt.vertices() {
        let pos = v.position();
        index_of[v.fix().index()] = *lookup
            .get(&(pos.x.to_bits(), pos.y.to_bits()))
            .ok_or_else(|| Error::InvalidMesh("triangulation introduced a vertex".into()))?;
    }
    if cdt.num_vertices() != points.len() {
        return Err(Error::InvalidMesh("duplicate points in triangulation input".into()));
    }

    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        let vs = f.vertices();
        let tri = [
            index_of[vs[0].fix().index()],
            index_of[vs[1].fix().index()],
            index_of[vs[2].fix().index()],
        ];
        let (pa, pb, pc) = (points[tri[0]], points[tri[1]], points[tri[2]]);
        let centroid = (1.0 / 3.0) * (pa + pb + pc);
        // slivers spanning three collinear boundary nodes come from rounding
        if domain.contains(centroid) && tri_area(pa, pb, pc) > 1e-10 * h_target * h_target {
            triangles.push(tri);
        }
    }

    Mesh::from_parts(points, triangles, (0..nb).collect(), arclength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_polygon;
    use approx::assert_relative_eq;

    fn square() -> Domain {
        Domain::rectangle(1.0, 1.0).unwrap()
    }

    #[test]
    fn square_coarse_mesh() {
        let m = triangulate(&square(), 0.5).unwrap();
        assert!(m.triangles().len() >= 8);
        assert_relative_eq!(m.area(), 1.0, epsilon = 1e-10);
        assert!(m.h() <= 1.0 + 1e-12);
        assert_eq!(m.perimeter(), 4.0);
    }

    #[test]
    fn triangle_count_scales_with_inverse_square_h() {
        let coarse = triangulate(&square(), 0.5).unwrap().triangles().len() as f64;
        let fine = triangulate(&square(), 0.1).unwrap().triangles().len() as f64;
        let ratio = fine / coarse;
        // (0.5 / 0.1)^2 = 25, lattice rounding near the boundary moves it a bit
        assert!(ratio > 12.0 && ratio < 40.0, "ratio {ratio}");
    }

    #[test]
    fn l_shape_area() {
        let d = build_polygon(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 0.5),
            (0.5, 0.5),
            (0.5, 1.0),
            (0.0, 1.0),
        ])
        .unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        assert_relative_eq!(m.area(), 0.75, epsilon = 1e-10);
        for t in 0..m.triangles().len() {
            assert!(m.triangle_area(t) > 0.0);
            assert!(d.contains(m.centroid(t)));
        }
    }

    #[test]
    fn too_coarse_names_feasible_size() {
        match triangulate(&square(), 2.0) {
            Err(Error::MeshTooCoarse { max_feasible, .. }) => assert_eq!(max_feasible, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn element_diameter_within_twice_target() {
        for h in [0.25, 0.1, 0.05] {
            let m = triangulate(&square(), h).unwrap();
            assert!(m.h() <= 2.0 * h, "h = {h}: max diameter {}", m.h());
        }
        let disk = Domain::regular(64, 1.0).unwrap();
        let m = triangulate(&disk, 0.09).unwrap();
        assert!(m.h() <= 0.18);
    }

    #[test]
    fn boundary_loop_is_counterclockwise_from_vertex_zero() {
        let m = triangulate(&square(), 0.25).unwrap();
        assert_eq!(m.boundary_point(0), Point::new(0.0, 0.0));
        assert_eq!(m.boundary_point(1), Point::new(0.25, 0.0));
        let s = m.arclength();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(m.num_boundary(), 16);
    }

    #[test]
    fn hat_gradients_reproduce_linear_fields() {
        let m = triangulate(&square(), 0.2).unwrap();
        let u: Vec<f64> = m.nodes().iter().map(|p| 2.0 * p.x - 3.0 * p.y + 1.0).collect();
        for t in 0..m.triangles().len() {
            let g = m.gradient(t, &u);
            assert_relative_eq!(g.x, 2.0, epsilon = 1e-10);
            assert_relative_eq!(g.y, -3.0, epsilon = 1e-10);
        }
        assert_relative_eq!(m.integrate(&vec![1.0; m.num_nodes()]), 1.0, epsilon = 1e-12);
        let x: Vec<f64> = m.nodes().iter().map(|p| p.x).collect();
        assert_relative_eq!(m.l2_norm(&x), (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }
}
