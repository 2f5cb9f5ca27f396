use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::fmt::Write as _;
use std::sync::Arc;

/// Uniform n × n cell-centred grid on the square [x0, x0 + n·dx] × [y0, y0 + n·dx].
/// Point (i, j) sits at (x0 + (i + ½)dx, y0 + (j + ½)dx), stored row-major
/// (index j·n + i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeltramiGrid {
    origin: Point,
    spacing: f64,
    n: usize,
}

impl BeltramiGrid {
    pub fn new(origin: Point, spacing: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidInput(format!("grid resolution {n} is below 8")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() || !origin.x.is_finite() || !origin.y.is_finite() {
            return Err(Error::InvalidInput(format!("bad grid geometry: origin {origin:?}, spacing {spacing}")));
        }
        Ok(BeltramiGrid { origin, spacing, n })
    }

    /// Square box twice the size of the bounding box of `domain`, same centre.
    pub fn covering(domain: &Domain, n: usize) -> Result<Self> {
        let (lo, hi) = domain.bounding_box();
        let side = 2.0 * (hi.x - lo.x).max(hi.y - lo.y);
        let c = 0.5 * (lo + hi);
        BeltramiGrid::new(Point::new(c.x - 0.5 * side, c.y - 0.5 * side), side / n as f64, n)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn side(&self) -> f64 {
        self.spacing * self.n as f64
    }

    pub fn center(&self) -> Point {
        let h = 0.5 * self.side();
        Point::new(self.origin.x + h, self.origin.y + h)
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.spacing,
            self.origin.y + (j as f64 + 0.5) * self.spacing,
        )
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.point(k % self.n, k / self.n)).collect()
    }

    /// Fractional grid coordinates (i, j) of `p`.
    pub fn coords(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.spacing - 0.5,
            (p.y - self.origin.y) / self.spacing - 0.5,
        )
    }

    /// True when `p` lies inside the hull of the grid points, where bilinear
    /// interpolation is defined.
    pub fn covers(&self, p: Point) -> bool {
        let (x, y) = self.coords(p);
        let top = (self.n - 1) as f64;
        (0.0..=top).contains(&x) && (0.0..=top).contains(&y)
    }
}

/// Complex values on a [`BeltramiGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: BeltramiGrid,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn new(grid: BeltramiGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite grid value at index {k}")));
        }
        Ok(GridField { grid, values })
    }

    pub fn from_fn(grid: BeltramiGrid, f: impl Fn(Point) -> Complex64) -> Self {
        GridField {
            values: grid.points().into_iter().map(f).collect(),
            grid,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.grid.n + i]
    }

    /// Bilinear interpolation with the cell and its local coordinates,
    /// clamped to the grid hull.
    fn cell(&self, p: Point) -> (usize, usize, f64, f64) {
        let (x, y) = self.grid.coords(p);
        let top = (self.grid.n - 2) as f64;
        let (fi, fj) = (x.floor().clamp(0.0, top), y.floor().clamp(0.0, top));
        (fi as usize, fj as usize, x - fi, y - fj)
    }

    pub fn interpolate(&self, p: Point) -> Complex64 {
        let (i, j, s, t) = self.cell(p);
        (1.0 - s) * (1.0 - t) * self.at(i, j)
            + s * (1.0 - t) * self.at(i + 1, j)
            + (1.0 - s) * t * self.at(i, j + 1)
            + s * t * self.at(i + 1, j + 1)
    }

    /// Bilinear interpolant with its x and y derivatives.
    pub fn interpolate_with_gradient(&self, p: Point) -> (Complex64, Complex64, Complex64) {
        let (i, j, s, t) = self.cell(p);
        let (a, b, c, d) = (self.at(i, j), self.at(i + 1, j), self.at(i, j + 1), self.at(i + 1, j + 1));
        let v = (1.0 - s) * (1.0 - t) * a + s * (1.0 - t) * b + (1.0 - s) * t * c + s * t * d;
        let dx = ((1.0 - t) * (b - a) + t * (d - c)) / self.grid.spacing;
        let dy = ((1.0 - s) * (c - a) + s * (d - b)) / self.grid.spacing;
        (v, dx, dy)
    }

    /// Text matrix: a `grid x0 y0 spacing n` header, then n rows of
    /// 2n numbers (re im pairs), row j holding points (0..n, j).
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = format!("grid {:.17e} {:.17e} {:.17e} {}\n", g.origin.x, g.origin.y, g.spacing, g.n);
        for row in self.values.chunks(g.n) {
            let line: Vec<String> = row.iter().map(|z| format!("{:.17e} {:.17e}", z.re, z.im)).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let field = read_block(&mut lines)?;
        if let Some((i, _)) = lines.next() {
            return Err(Error::Parse { line: i + 1, message: "trailing content after the grid block".into() });
        }
        Ok(field)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line: line + 1, message: message.into() }
}

/// Reads one header-plus-rows block from an iterator of (line index, text).
pub(crate) fn read_block<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<GridField> {
    let (i, header) = lines.next().ok_or_else(|| parse_err(0, "missing grid header"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "grid" {
        return Err(parse_err(i, "expected `grid x0 y0 spacing n`"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(i, format!("bad number `{s}`")));
    let n: usize = parts[4].parse().map_err(|_| parse_err(i, format!("bad resolution `{}`", parts[4])))?;
    let grid = BeltramiGrid::new(Point::new(num(parts[1])?, num(parts[2])?), num(parts[3])?, n)
        .map_err(|e| parse_err(i, e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..n {
        let (i, row) = lines.next().ok_or_else(|| parse_err(i, format!("expected {n} rows")))?;
        let nums: Vec<f64> = row
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(i, format!("bad number `{s}`"))))
            .collect::<Result<_>>()?;
        if nums.len() != 2 * n {
            return Err(parse_err(i, format!("expected {} numbers, found {}", 2 * n, nums.len())));
        }
        values.extend(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])));
    }
    GridField::new(grid, values)
}

/// 2D FFTs of a fixed square size, rows in parallel.
pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn pass(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        data.par_chunks_mut(n).for_each(|row| plan.process(row));
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        t.par_chunks_mut(n).enumerate().for_each(|(i, col)| {
            for (j, c) in col.iter_mut().enumerate() {
                *c = data[j * n + i];
            }
        });
        t.par_chunks_mut(n).for_each(|col| plan.process(col));
        data.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, r) in row.iter_mut().enumerate() {
                *r = t[i * n + j];
            }
        });
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.pass(data, &self.fwd.clone());
    }

    /// Inverse transform including the 1/n² normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.pass(data, &self.inv.clone());
        let s = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|z| *z *= s);
    }
}
