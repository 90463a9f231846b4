//! Per-coarse-element spectral spaces. On each coarse element K_j the
//! pencil a_j(phi, v) = lambda s_j(phi, v) is restricted with no boundary
//! condition (full local space) and solved densely; the first l eigenpairs
//! span the auxiliary space, the (l+1)-th eigenvalue feeds the global
//! Lambda. Auxiliary functions are zero-extended, so they live in the
//! broken space and all s-products against them are element-local.

use rayon::prelude::*;

use crate::assembly::{restrict, AssembledOperator, BoundaryCondition};
use crate::grid::{extract_patch, PeriodicGrid};
use crate::linalg::sym_eig_pencil;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LocalEigenSet {
    pub j: usize,
    /// Global dofs of K_j, sorted; eigenvectors are coefficients on these.
    pub dofs: Vec<usize>,
    /// l+1 ascending eigenvalues; the last one is the first discarded.
    pub lambdas: Vec<f64>,
    /// l retained eigenvectors, s-orthonormal on the element.
    pub vectors: Vec<Vec<f64>>,
    /// q_i = S_j phi_i (element-local weighted mass applied); these realize
    /// every s-product against the auxiliary basis: s_j(phi_i, v) = q_i . v.
    pub weighted: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct AuxiliarySpace {
    pub sets: Vec<LocalEigenSet>,
    pub l: usize,
    /// Lambda = min_j lambda_j^{l+1}.
    pub lambda: f64,
}

pub fn solve_local_eigenproblem(
    grid: &PeriodicGrid,
    a_op: &AssembledOperator,
    s_op: &AssembledOperator,
    j: usize,
    l: usize,
) -> Result<LocalEigenSet> {
    let patch = extract_patch(grid, j, 0)?;
    let n_loc = patch.n_dofs();
    if l < 1 || l + 1 > n_loc {
        return Err(Error::EigenSolve {
            element: j,
            reason: format!("need 1 <= l and l+1 <= {n_loc}, got l = {l}"),
        });
    }
    let a_j = restrict(a_op, grid, &patch, BoundaryCondition::None)?;
    let s_j = restrict(s_op, grid, &patch, BoundaryCondition::None)?;
    let (lambdas, phi) = sym_eig_pencil(&a_j.mat.to_dense(), &s_j.mat.to_dense())
        .map_err(|e| Error::EigenSolve {
            element: j,
            reason: e.to_string(),
        })?;
    let mut vectors = Vec::with_capacity(l);
    let mut weighted = Vec::with_capacity(l);
    for i in 0..l {
        let v: Vec<f64> = (0..n_loc).map(|p| phi[(p, i)]).collect();
        let mut q = vec![0.0; n_loc];
        s_j.mat.matvec(&v, &mut q);
        vectors.push(v);
        weighted.push(q);
    }
    Ok(LocalEigenSet {
        j,
        dofs: patch.dofs,
        lambdas: lambdas[..=l].to_vec(),
        vectors,
        weighted,
    })
}

/// Solve all element eigenproblems; deterministic order by element index.
pub fn build_auxiliary_space(
    grid: &PeriodicGrid,
    a_op: &AssembledOperator,
    s_op: &AssembledOperator,
    l: usize,
) -> Result<AuxiliarySpace> {
    let sets: Vec<LocalEigenSet> = (0..grid.n_coarse())
        .into_par_iter()
        .map(|j| solve_local_eigenproblem(grid, a_op, s_op, j, l))
        .collect::<Result<_>>()?;
    let lambda = sets
        .iter()
        .map(|s| *s.lambdas.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    Ok(AuxiliarySpace { sets, l, lambda })
}

pub fn compute_lambda(aux: &AuxiliarySpace) -> f64 {
    aux.sets
        .iter()
        .map(|s| *s.lambdas.last().unwrap())
        .fold(f64::INFINITY, f64::min)
}

/// A field of the broken space: one coefficient block per coarse element,
/// on that element's dofs. Zero blocks are simply absent.
#[derive(Debug, Clone)]
pub struct BrokenField {
    /// (element, coefficients on the element's dof list)
    pub pieces: Vec<(usize, Vec<f64>)>,
}

/// The s-orthogonal projection onto the auxiliary space. Output lives in
/// the broken space; its coefficients in the auxiliary basis are the primary
/// representation since the s-norm is then a plain Euclidean norm.
pub struct Projection<'a> {
    pub aux: &'a AuxiliarySpace,
}

pub fn build_projection(aux: &AuxiliarySpace) -> Projection<'_> {
    Projection { aux }
}

impl<'a> Projection<'a> {
    /// Coefficients c_{j,i} = s_j(phi_j^i, v) for a conforming fine field.
    pub fn coefficients(&self, v: &[f64]) -> Vec<Vec<f64>> {
        self.aux
            .sets
            .iter()
            .map(|set| {
                set.weighted
                    .iter()
                    .map(|q| {
                        q.iter()
                            .zip(&set.dofs)
                            .map(|(&qv, &g)| qv * v[g])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Same, for a broken field.
    pub fn coefficients_broken(&self, w: &BrokenField) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self
            .aux
            .sets
            .iter()
            .map(|s| vec![0.0; s.vectors.len()])
            .collect();
        for (j, piece) in &w.pieces {
            let set = &self.aux.sets[*j];
            debug_assert_eq!(piece.len(), set.dofs.len());
            for (i, q) in set.weighted.iter().enumerate() {
                out[*j][i] = q.iter().zip(piece).map(|(&a, &b)| a * b).sum();
            }
        }
        out
    }

    /// Reconstruct the broken field sum_i c_{j,i} phi_j^i per element.
    pub fn reconstruct(&self, coeffs: &[Vec<f64>]) -> BrokenField {
        let pieces = self
            .aux
            .sets
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| c.iter().any(|x| *x != 0.0))
            .map(|(set, c)| {
                let mut piece = vec![0.0; set.dofs.len()];
                for (ci, phi) in c.iter().zip(&set.vectors) {
                    for (p, &ph) in phi.iter().enumerate() {
                        piece[p] += ci * ph;
                    }
                }
                (set.j, piece)
            })
            .collect();
        BrokenField { pieces }
    }

    /// pi(v) as a broken field.
    pub fn apply(&self, v: &[f64]) -> BrokenField {
        self.reconstruct(&self.coefficients(v))
    }

    /// ||pi v||_s^2 from coefficients (s-orthonormal basis).
    pub fn s_norm_sq(coeffs: &[Vec<f64>]) -> f64 {
        coeffs.iter().flatten().map(|c| c * c).sum()
    }
}
