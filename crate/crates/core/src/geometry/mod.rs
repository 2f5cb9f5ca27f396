//! Polygonal domains, their triangulations, boundary frames and the
//! measurable boundary partition ∂Ω = Γ ∪ Γ₀.

mod frame;
mod locate;
mod mesh;
mod meshio;
mod partition;

pub use frame::{boundary_frames, BoundaryFrame};
pub use locate::Locator;
pub use mesh::{triangulate, Mesh};
pub use meshio::{read_mesh, write_mesh};
pub use partition::{partition_boundary, BoundaryPartition};

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Rotation by +π/2.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn to_complex(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.x, self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point::new(self * p.x, self * p.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// A simple, counterclockwise polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    vertices: Vec<Point>,
}

/// Builds a [`Domain`] from a vertex list, correcting clockwise input.
pub fn build_polygon<P: Into<Point> + Copy>(vertices: &[P]) -> Result<Domain> {
    Domain::new(vertices.iter().map(|&p| p.into()).collect())
}

impl Domain {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        let n = vertices.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i].dist(vertices[j]) == 0.0 {
                return Err(Error::RepeatedVertex(i, j));
            }
        }
        if signed_area(&vertices) < 0.0 {
            // keep vertex 0 as the arclength origin
            vertices[1..].reverse();
        }
        check_simple(&vertices)?;
        if signed_area(&vertices).abs() == 0.0 {
            return Err(Error::InvalidInput("polygon has zero area".into()));
        }
        Ok(Domain { vertices })
    }

    /// Regular `n`-gon inscribed in the circle of given radius, first vertex on
    /// the positive real axis.
    pub fn regular(n: usize, radius: f64) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Point::new(radius * t.cos(), radius * t.sin())
            })
            .collect();
        Domain::new(pts)
    }

    /// Axis-aligned rectangle `[0, w] × [0, h]`.
    pub fn rectangle(w: f64, h: f64) -> Result<Self> {
        Domain::new(vec![
            Point::new(0.0, 0.0),
            Point::new(w, 0.0),
            Point::new(w, h),
            Point::new(0.0, h),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1` (cyclically).
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                a.dist(b)
            })
            .collect()
    }

    pub fn shortest_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (a, b) = self.edge(i);
            let c = a.cross(b);
            cx += (a.x + b.x) * c;
            cy += (a.y + b.y) * c;
        }
        let a6 = 6.0 * self.area();
        Point::new(cx / a6, cy / a6)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        d
    }

    /// Interior test by crossing number; points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = self.bounding_box();
        if self.distance_to_boundary(p) < 1e-14 * lo.dist(hi) {
            return true;
        }
        let mut inside = false;
        let n = self.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Exact Euclidean distance to the polygon boundary.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                segment_distance(p, a, b).0
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Closest point of the polygon boundary to `p`.
    pub fn closest_boundary_point(&self, p: Point) -> Point {
        let mut best = (f64::INFINITY, p);
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let (d, t) = segment_distance(p, a, b);
            if d < best.0 {
                best = (d, a + t * (b - a));
            }
        }
        best.1
    }

    /// Point at arclength `s` measured counterclockwise from vertex 0.
    pub fn point_at(&self, s: f64) -> Point {
        let perim = self.perimeter();
        let mut s = s.rem_euclid(perim);
        for (i, len) in self.edge_lengths().into_iter().enumerate() {
            if s <= len || i + 1 == self.len() {
                let (a, b) = self.edge(i);
                return a + (s / len).min(1.0) * (b - a);
            }
            s -= len;
        }
        unreachable!()
    }

    /// Arclength coordinate of the boundary point closest to `p`.
    pub fn arclength_of(&self, p: Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let mut offset = 0.0;
        for (i, len) in self.edge_lengths().into_iter().enumerate() {
            let (a, b) = self.edge(i);
            let (d, t) = segment_distance(p, a, b);
            if d < best.0 {
                best = (d, offset + t * len);
            }
            offset += len;
        }
        best.1
    }

    /// Interior angle at each vertex, in radians.
    pub fn interior_angles(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let prev = self.vertices[(i + n - 1) % n];
                let cur = self.vertices[i];
                let next = self.vertices[(i + 1) % n];
                let d_in = cur - prev;
                let d_out = next - cur;
                let turn = d_in.cross(d_out).atan2(d_in.dot(d_out));
                PI - turn
            })
            .collect()
    }

    /// Returns a copy scaled about the origin.
    pub fn scaled(&self, factor: f64) -> Domain {
        Domain {
            vertices: self.vertices.iter().map(|&p| factor * p).collect(),
        }
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Distance from `p` to segment `ab` and the clamped parameter of the foot point.
pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    };
    ((a + t * d).dist(p), t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn check_simple(v: &[Point]) -> Result<()> {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex is fine; folding back onto the previous edge is not
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(p, shared, q) == 0.0 && (p - shared).dot(q - shared) > 0.0 {
                    return Err(Error::SelfIntersecting { edge_a: i, edge_b: j });
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Err(Error::SelfIntersecting { edge_a: i, edge_b: j });
            }
        }
    }
    Ok(())
}
