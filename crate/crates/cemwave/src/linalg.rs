//! Sparse and dense linear algebra shared by assembly, basis construction
//! and time stepping. Sparse storage is plain CSR over real entries; heavy
//! factorizations go through faer.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

use crate::{Error, Result};

/// Real CSR matrix. All assembled operators are real symmetric; symmetry is
/// a property of the values, not the storage.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets, summing duplicates. Entries that cancel to zero
    /// are kept; the sparsity pattern is decided by the triplet list alone.
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = trips.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; nrows];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for i in 0..nrows {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            out[r] = acc;
        }
    }

    pub fn matvec_complex(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for r in 0..self.nrows {
            let mut acc = Complex64::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]] * self.vals[k];
            }
            out[r] = acc;
        }
    }

    /// u^H M v for complex coefficient vectors.
    pub fn quad_form_complex(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for r in 0..self.nrows {
            let mut row = Complex64::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += v[self.col_idx[k]] * self.vals[k];
            }
            acc += u[r].conj() * row;
        }
        acc
    }

    pub fn quad_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.nrows {
            let mut row = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * v[self.col_idx[k]];
            }
            acc += u[r] * row;
        }
        acc
    }

    /// out += scale * (row `c` of self) applied as a column; valid for
    /// symmetric matrices where column c equals row c.
    pub fn axpy_sym_col(&self, c: usize, scale: f64, out: &mut [f64]) {
        for k in self.row_ptr[c]..self.row_ptr[c + 1] {
            out[self.col_idx[k]] += scale * self.vals[k];
        }
    }

    pub fn axpy_sym_col_complex(&self, c: usize, scale: Complex64, out: &mut [Complex64]) {
        for k in self.row_ptr[c]..self.row_ptr[c + 1] {
            out[self.col_idx[k]] += scale * self.vals[k];
        }
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out
    }

    /// Principal submatrix on `keep` (sorted global indices).
    pub fn gather(&self, keep: &[usize]) -> CsrMatrix {
        let mut local_of = vec![usize::MAX; self.ncols];
        for (loc, &g) in keep.iter().enumerate() {
            local_of[g] = loc;
        }
        let mut trips = Vec::new();
        for (loc_r, &g_r) in keep.iter().enumerate() {
            for k in self.row_ptr[g_r]..self.row_ptr[g_r + 1] {
                let lc = local_of[self.col_idx[k]];
                if lc != usize::MAX {
                    trips.push((loc_r, lc, self.vals[k]));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), keep.len(), &trips)
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        // dense-free check: for each (r, c, v) find (c, r) by binary search
        let mut worst = 0.0_f64;
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let seg = &self.col_idx[self.row_ptr[c]..self.row_ptr[c + 1]];
                let tv = match seg.binary_search(&r) {
                    Ok(p) => self.vals[self.row_ptr[c] + p],
                    Err(_) => 0.0,
                };
                worst = worst.max((self.vals[k] - tv).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.vals[k];
            }
        }
        m
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut trips = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                trips.push(Triplet::new(r, self.col_idx[k], self.vals[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::Singular(format!("sparse conversion failed: {e:?}")))
    }

    /// alpha*self + beta*other as a complex sparse matrix (union pattern).
    pub fn complex_combination(
        &self,
        alpha: Complex64,
        other: &CsrMatrix,
        beta: Complex64,
    ) -> Result<SparseColMat<usize, Complex64>> {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut trips = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                trips.push(Triplet::new(r, self.col_idx[k], alpha * self.vals[k]));
            }
            for k in other.row_ptr[r]..other.row_ptr[r + 1] {
                trips.push(Triplet::new(r, other.col_idx[k], beta * other.vals[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::Singular(format!("sparse combination failed: {e:?}")))
    }
}

/// Sparse vector over global dofs: sorted indices, matching values.
#[derive(Debug, Clone)]
pub struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &v)| v * dense[i])
            .sum()
    }

    pub fn dot_dense_complex(&self, dense: &[Complex64]) -> Complex64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &v)| dense[i] * v)
            .sum()
    }

    pub fn scatter_into_complex(&self, scale: Complex64, out: &mut [Complex64]) {
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            out[i] += scale * v;
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            out[i] = v;
        }
        out
    }
}

/// Eigendecomposition of the symmetric pencil (A, S) with S positive
/// definite: returns ascending eigenvalues and S-orthonormal eigenvectors
/// as columns. Reduction is by the inverse square root of S, which also
/// diagnoses a non-PD S.
pub fn sym_eig_pencil(a: &Mat<f64>, s: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    assert_eq!(s.nrows(), n);
    let s_evd = s
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Singular(format!("weight eigendecomposition failed: {e:?}")))?;
    let sig = s_evd.S();
    let u = s_evd.U();
    let sig_max = (0..n).map(|i| sig[i]).fold(0.0_f64, f64::max);
    if sig_max <= 0.0 || (0..n).any(|i| sig[i] <= 1e-12 * sig_max) {
        return Err(Error::Singular(
            "weight matrix is not positive definite".into(),
        ));
    }
    // T = U * Sigma^{-1/2}; B = T^T A T is symmetric with the pencil spectrum
    let t = Mat::from_fn(n, n, |i, j| u[(i, j)] / sig[j].sqrt());
    let b = t.transpose() * a * &t;
    let b = Mat::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
    let b_evd = b
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Singular(format!("reduced eigendecomposition failed: {e:?}")))?;
    let lam = b_evd.S();
    let y = b_evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lam[i].partial_cmp(&lam[j]).unwrap());
    let lambdas: Vec<f64> = order.iter().map(|&i| lam[i]).collect();
    let mut phi = Mat::zeros(n, n);
    for (col_out, &col_in) in order.iter().enumerate() {
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += t[(i, k)] * y[(k, col_in)];
            }
            phi[(i, col_out)] = acc;
        }
    }
    // deterministic sign: largest-magnitude entry made positive
    for c in 0..n {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for i in 0..n {
            let a = phi[(i, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if phi[(best, c)] < 0.0 {
            for i in 0..n {
                phi[(i, c)] = -phi[(i, c)];
            }
        }
    }
    Ok((lambdas, phi))
}

/// Least squares fit of log(err) = log(c) + m*log(theta) over (m, err) rows
/// with err > floor; returns theta. Rows at or below the floor are treated
/// as converged and excluded.
pub fn fit_geometric_rate(rows: &[(usize, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(_, e)| e > floor)
        .map(|&(m, e)| (m as f64, e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    Some(slope.exp())
}
