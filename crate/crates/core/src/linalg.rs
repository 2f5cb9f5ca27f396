//! Sparse symmetric solvers and small dense helpers used by the FEM code.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};
use std::collections::VecDeque;

/// Square sparse matrix assembled from triplets (duplicates are summed).
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    csr: CsrMatrix<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut coo = CooMatrix::new(n, n);
        for &(i, j, v) in triplets {
            coo.push(i, j, v);
        }
        SparseMatrix {
            csr: CsrMatrix::from(&coo),
        }
    }

    pub fn n(&self) -> usize {
        self.csr.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let offsets = self.csr.row_offsets();
        let cols = self.csr.col_indices();
        let vals = self.csr.values();
        (0..self.n())
            .map(|i| {
                (offsets[i]..offsets[i + 1])
                    .map(|k| vals[k] * x[cols[k]])
                    .sum()
            })
            .collect()
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let offsets = self.csr.row_offsets();
        let cols = self.csr.col_indices();
        let vals = self.csr.values();
        (0..self.n())
            .map(|i| {
                (offsets[i]..offsets[i + 1])
                    .filter(|&k| cols[k] == i)
                    .map(|k| vals[k])
                    .sum()
            })
            .collect()
    }

    /// Rows and columns whose `keep` flag is set, in order.
    pub fn submatrix(&self, keep: &[bool]) -> (SparseMatrix, Vec<usize>) {
        let mut new_index = vec![usize::MAX; self.n()];
        let mut kept = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_index[i] = kept.len();
                kept.push(i);
            }
        }
        let offsets = self.csr.row_offsets();
        let cols = self.csr.col_indices();
        let vals = self.csr.values();
        let mut triplets = Vec::new();
        for &i in &kept {
            for k in offsets[i]..offsets[i + 1] {
                let j = cols[k];
                if keep[j] {
                    triplets.push((new_index[i], new_index[j], vals[k]));
                }
            }
        }
        (SparseMatrix::from_triplets(kept.len(), &triplets), kept)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let offsets = self.csr.row_offsets();
        let cols = self.csr.col_indices();
        (0..self.n())
            .map(|i| {
                (offsets[i]..offsets[i + 1])
                    .map(|k| cols[k])
                    .filter(|&j| j != i)
                    .collect()
            })
            .collect()
    }

    fn permuted_csc(&self, perm: &[usize], inv: &[usize]) -> CscMatrix<f64> {
        let offsets = self.csr.row_offsets();
        let cols = self.csr.col_indices();
        let vals = self.csr.values();
        let mut coo = CooMatrix::new(self.n(), self.n());
        for new_i in 0..self.n() {
            let i = perm[new_i];
            for k in offsets[i]..offsets[i + 1] {
                coo.push(new_i, inv[cols[k]], vals[k]);
            }
        }
        CscMatrix::from(&coo)
    }
}

/// Reverse Cuthill–McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| adj[i].len());
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let mut queue = VecDeque::from([seed]);
        visited[seed] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| adj[w].len());
            for w in next {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// How a symmetric positive definite solve was carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub relative_residual: f64,
    pub used_fallback: bool,
}

/// Cholesky factor of a symmetric positive definite sparse matrix, stored in
/// reverse Cuthill–McKee order.
pub struct SpdFactor {
    matrix: SparseMatrix,
    perm: Vec<usize>,
    chol: Option<CscCholesky<f64>>,
}

impl SpdFactor {
    /// Factors `a`. A failed Cholesky factorization (the matrix is not
    /// numerically SPD) is reported, so callers can decide whether the
    /// iterative fallback is acceptable.
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(&a.adjacency());
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let csc = a.permuted_csc(&perm, &inv);
        let chol = CscCholesky::factor(&csc)
            .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e}")))?;
        Ok(SpdFactor {
            matrix: a.clone(),
            perm,
            chol: Some(chol),
        })
    }

    /// Factor object that only runs preconditioned CG.
    fn iterative(a: &SparseMatrix) -> Self {
        SpdFactor {
            matrix: a.clone(),
            perm: (0..a.n()).collect(),
            chol: None,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
        let n = self.matrix.n();
        let x = match &self.chol {
            Some(chol) => {
                let pb = DMatrix::from_iterator(n, 1, self.perm.iter().map(|&i| b[i]));
                let px = chol.solve(&pb);
                let mut x = vec![0.0; n];
                for (new, &old) in self.perm.iter().enumerate() {
                    x[old] = px[(new, 0)];
                }
                x
            }
            None => conjugate_gradient(&self.matrix, b, 1e-12, 20 * n + 100)?,
        };
        let r = residual(&self.matrix, &x, b);
        Ok((
            x,
            SolveInfo {
                relative_residual: r,
                used_fallback: self.chol.is_none(),
            },
        ))
    }
}

/// Solves `a x = b` for SPD `a`: sparse Cholesky first, Jacobi-preconditioned
/// CG if the factorization breaks down.
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
    match SpdFactor::new(a) {
        Ok(f) => f.solve(b),
        Err(_) => SpdFactor::iterative(a).solve(b),
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let nb = norm(b);
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Solver("non-positive diagonal entry; matrix is not SPD".into()));
    }
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver("CG breakdown: matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm(&r) / bnorm,
    })
}

/// Solves a cyclic (periodic) tridiagonal system with sub-diagonal `lower`,
/// diagonal `diag` and super-diagonal `upper`; row `i` couples `i - 1`, `i`, `i + 1`
/// modulo n. `lower[0]` couples row 0 with n - 1, `upper[n-1]` row n - 1 with 0.
pub fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    // Sherman–Morrison on A = T + u vᵀ
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= upper[n - 1] * lower[0] / gamma;
    let x = thomas(&lower[1..], &d, &upper[..n - 1], rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = upper[n - 1];
    let z = thomas(&lower[1..], &d, &upper[..n - 1], &u);
    let v0 = 1.0;
    let vn = lower[0] / gamma;
    let factor = (v0 * x[0] + vn * x[n - 1]) / (1.0 + v0 * z[0] + vn * z[n - 1]);
    x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, &t)
    }

    #[test]
    fn cholesky_and_cg_agree() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let (x, info) = solve_spd(&a, &b).unwrap();
        assert!(info.relative_residual < 1e-12);
        assert!(!info.used_fallback);
        let y = conjugate_gradient(&a, &b, 1e-13, 1000).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert_relative_eq!(p, q, epsilon = 1e-9);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(SpdFactor::new(&a).is_err());
        assert!(solve_spd(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(30);
        let mut p = reverse_cuthill_mckee(&a.adjacency());
        p.sort();
        assert_eq!(p, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn cyclic_tridiagonal_matches_dense() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| 0.1 + 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| 0.2 - 0.01 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs);
        for i in 0..n {
            let r = lower[i] * x[(i + n - 1) % n] + diag[i] * x[i] + upper[i] * x[(i + 1) % n];
            assert_relative_eq!(r, rhs[i], epsilon = 1e-12);
        }
    }
}
