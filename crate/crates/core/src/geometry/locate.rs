use super::{segment_distance, Mesh, Point};

/// Bucket index over the triangles of a mesh for point location and P1
/// interpolation.
#[derive(Debug, Clone)]
pub struct Locator<'a> {
    mesh: &'a Mesh,
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

fn barycentric(p: Point, [a, b, c]: [Point; 3]) -> [f64; 3] {
    let area2 = (b - a).cross(c - a);
    let l0 = (b - p).cross(c - p) / area2;
    let l1 = (c - p).cross(a - p) / area2;
    [l0, l1, 1.0 - l0 - l1]
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = (mesh.nodes()[0], mesh.nodes()[0]);
        for p in mesh.nodes() {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let side = (hi.x - lo.x).max(hi.y - lo.y);
        let target = ((mesh.triangles().len() as f64).sqrt().ceil() as usize).max(1);
        let cell = (side / target as f64).max(mesh.h()).max(f64::MIN_POSITIVE);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, _) in mesh.triangles().iter().enumerate() {
            let pts = mesh.triangle_points(t);
            let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
            let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.y), b.max(p.y)));
            let (i0, i1) = (((x0 - lo.x) / cell) as usize, (((x1 - lo.x) / cell) as usize).min(nx - 1));
            let (j0, j1) = (((y0 - lo.y) / cell) as usize, (((y1 - lo.y) / cell) as usize).min(ny - 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Locator { mesh, lo, cell, nx, ny, buckets }
    }

    /// Triangle containing `p` with its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let fx = (p.x - self.lo.x) / self.cell;
        let fy = (p.y - self.lo.y) / self.cell;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        self.buckets[j * self.nx + i].iter().find_map(|&t| {
            let l = barycentric(p, self.mesh.triangle_points(t));
            (l.iter().all(|&v| v >= -1e-12)).then_some((t, l))
        })
    }

    /// Like [`Locator::locate`], but points outside the mesh are projected
    /// onto the closest triangle.
    pub fn locate_nearest(&self, p: Point) -> (usize, [f64; 3]) {
        if let Some(hit) = self.locate(p) {
            return hit;
        }
        let mut best = (f64::INFINITY, 0usize, Point::new(0.0, 0.0));
        for t in 0..self.mesh.triangles().len() {
            let pts = self.mesh.triangle_points(t);
            for e in 0..3 {
                let (a, b) = (pts[e], pts[(e + 1) % 3]);
                let (d, s) = segment_distance(p, a, b);
                if d < best.0 {
                    best = (d, t, a + s * (b - a));
                }
            }
        }
        let l = barycentric(best.2, self.mesh.triangle_points(best.1)).map(|v| v.max(0.0));
        let sum: f64 = l.iter().sum();
        (best.1, l.map(|v| v / sum))
    }

    /// P1 interpolant of nodal `values` at `p`, projecting outside points.
    pub fn interpolate(&self, values: &[f64], p: Point) -> f64 {
        let (t, l) = self.locate_nearest(p);
        let tri = self.mesh.triangles()[t];
        l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};
    use approx::assert_relative_eq;

    #[test]
    fn linear_functions_interpolate_exactly() {
        let m = triangulate(&Domain::regular(12, 1.0).unwrap(), 0.2).unwrap();
        let loc = Locator::new(&m);
        let f: Vec<f64> = m.nodes().iter().map(|p| 3.0 * p.x - p.y + 1.0).collect();
        for p in [Point::new(0.1, 0.2), Point::new(-0.7, 0.3), Point::new(0.0, -0.9)] {
            assert!(loc.locate(p).is_some());
            assert_relative_eq!(loc.interpolate(&f, p), 3.0 * p.x - p.y + 1.0, epsilon = 1e-12);
        }
        for &p in m.nodes() {
            assert!(loc.locate(p).is_some());
        }
    }

    #[test]
    fn outside_points_project_to_the_boundary() {
        let m = triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.25).unwrap();
        let loc = Locator::new(&m);
        assert!(loc.locate(Point::new(1.5, 0.5)).is_none());
        let f: Vec<f64> = m.nodes().iter().map(|p| p.y).collect();
        assert_relative_eq!(loc.interpolate(&f, Point::new(1.5, 0.3)), 0.3, epsilon = 1e-12);
    }
}
