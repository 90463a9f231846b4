//! Localized multiscale basis functions. Each basis function minimizes the
//! a-energy subject to a relaxation penalty on the projected part, which
//! turns into one sparse SPD-plus-low-rank system per oversampled patch:
//! (A_p + W W^T) psi = q, with W holding the weighted auxiliary vectors of
//! every coarse element inside the patch and zero trace on the patch rim.
//! The low rank structure is exploited with a Woodbury split so only A_p is
//! factored; W^T A_p^{-1} W stays dense and tiny.

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu as SparseLu;
use rayon::prelude::*;

use crate::assembly::{restrict, AssembledOperator, BoundaryCondition};
use crate::auxspace::AuxiliarySpace;
use crate::grid::{extract_patch, Patch, PeriodicGrid};
use crate::linalg::{fit_geometric_rate, CsrMatrix, SparseVec};
use crate::{Error, Result};

/// Materialize A_p^{-1} W only while it fits; beyond this the solver makes a
/// second factored pass per column instead (the full-cover case at scale).
const Z_BUDGET_BYTES: usize = 64 << 20;

#[derive(Debug, Clone)]
pub struct MultiscaleSpace {
    /// Oversampling layers used for every patch.
    pub m: usize,
    /// Eigenpairs kept per coarse element.
    pub l: usize,
    /// Spectral gap constant of the auxiliary space this was built from.
    pub lambda: f64,
    /// Fine dofs (length of every basis column).
    pub n_dofs: usize,
    /// Basis columns over global fine dofs; column j*l + i belongs to
    /// coarse element j, mode i, and vanishes outside its patch interior.
    pub basis: Vec<SparseVec>,
    /// Owner coarse element of each column.
    pub owners: Vec<usize>,
    /// Reduced bilinear forms, exactly symmetric by construction.
    pub a_ms: Mat<f64>,
    pub m_ms: Mat<f64>,
}

impl MultiscaleSpace {
    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    /// One column scattered to a dense fine-grid vector.
    pub fn column_dense(&self, col: usize) -> Vec<f64> {
        self.basis[col].to_dense(self.n_dofs)
    }
}

/// Shared per-patch state: the factored interior operator, the low-rank
/// block, and the small dense Woodbury kernel G = I + W^T A_p^{-1} W.
struct PatchSolver {
    patch: Patch,
    /// Global dof of each interior slot.
    interior: Vec<usize>,
    lu: SparseLu<usize, f64>,
    /// Columns of W over interior slots, ordered (member element, mode).
    w_cols: Vec<SparseVec>,
    col_id: Vec<(usize, usize)>,
    g_lu: PartialPivLu<f64>,
    z: Option<Mat<f64>>,
}

impl PatchSolver {
    fn build(
        grid: &PeriodicGrid,
        a_op: &AssembledOperator,
        aux: &AuxiliarySpace,
        j: usize,
        m: usize,
        z_budget: usize,
    ) -> Result<Self> {
        let fail = |reason: String| Error::BasisSolve {
            element: j,
            mode: 0,
            reason,
        };
        let patch = extract_patch(grid, j, m)?;
        let n = patch.n_interior();
        if n == 0 {
            return Err(fail(format!("patch ({j}, {m}) has no interior dofs")));
        }
        let a_p = restrict(a_op, grid, &patch, BoundaryCondition::ZeroTrace)?;
        let lu = a_p
            .mat
            .to_faer()?
            .sp_lu()
            .map_err(|e| fail(format!("patch operator factorization failed: {e:?}")))?;

        // slot_of_local inverts interior_local
        let mut slot_of_local = vec![usize::MAX; patch.n_dofs()];
        for (s, &loc) in patch.interior_local.iter().enumerate() {
            slot_of_local[loc] = s;
        }
        let interior = patch.interior_global();

        let l = aux.l;
        let mut w_cols = Vec::with_capacity(patch.coarse_members.len() * l);
        let mut col_id = Vec::with_capacity(patch.coarse_members.len() * l);
        for &member in &patch.coarse_members {
            let set = &aux.sets[member];
            for (i, q) in set.weighted.iter().enumerate() {
                let mut idx = Vec::with_capacity(q.len());
                let mut val = Vec::with_capacity(q.len());
                for (&g, &qv) in set.dofs.iter().zip(q) {
                    let loc = patch.local_of_global[g];
                    debug_assert!(loc >= 0, "auxiliary dof outside its patch");
                    let s = slot_of_local[loc as usize];
                    if s != usize::MAX {
                        idx.push(s);
                        val.push(qv);
                    }
                }
                w_cols.push(SparseVec { idx, val });
                col_id.push((member, i));
            }
        }

        let k = w_cols.len();
        let materialize = n.saturating_mul(k).saturating_mul(8) <= z_budget;
        let mut g = Mat::<f64>::zeros(k, k);
        let z = if materialize {
            let mut b = Mat::<f64>::zeros(n, k);
            for (c, w) in w_cols.iter().enumerate() {
                for (&s, &v) in w.idx.iter().zip(&w.val) {
                    b[(s, c)] = v;
                }
            }
            let z = lu.solve(&b);
            for c in 0..k {
                let zc: Vec<f64> = (0..n).map(|p| z[(p, c)]).collect();
                for (r, w) in w_cols.iter().enumerate() {
                    g[(r, c)] = w.dot_dense(&zc);
                }
                g[(c, c)] += 1.0;
            }
            Some(z)
        } else {
            let mut b = Mat::<f64>::zeros(n, 1);
            for (c, w) in w_cols.iter().enumerate() {
                for (&s, &v) in w.idx.iter().zip(&w.val) {
                    b[(s, 0)] = v;
                }
                let zc_mat = lu.solve(&b);
                let zc: Vec<f64> = (0..n).map(|p| zc_mat[(p, 0)]).collect();
                for (r, w_r) in w_cols.iter().enumerate() {
                    g[(r, c)] = w_r.dot_dense(&zc);
                }
                g[(c, c)] += 1.0;
                for &s in &w.idx {
                    b[(s, 0)] = 0.0;
                }
            }
            None
        };
        let g_lu = g.partial_piv_lu();
        Ok(PatchSolver {
            patch,
            interior,
            lu,
            w_cols,
            col_id,
            g_lu,
            z,
        })
    }

    /// Solve (A_p + W W^T) psi = q_{center,i} for each requested mode.
    /// Returns dense interior-slot vectors in mode order.
    fn solve_modes(&self, center: usize, modes: &[usize]) -> Result<Vec<Vec<f64>>> {
        let n = self.interior.len();
        let k = self.w_cols.len();
        let nm = modes.len();
        let mut b = Mat::<f64>::zeros(n, nm);
        for (t, &i) in modes.iter().enumerate() {
            let c0 = self
                .col_id
                .iter()
                .position(|&id| id == (center, i))
                .ok_or_else(|| Error::BasisSolve {
                    element: center,
                    mode: i,
                    reason: "mode index out of range for auxiliary space".into(),
                })?;
            let w = &self.w_cols[c0];
            for (&s, &v) in w.idx.iter().zip(&w.val) {
                b[(s, t)] = v;
            }
        }
        let y = self.lu.solve(&b);
        let mut t_small = Mat::<f64>::zeros(k, nm);
        for t in 0..nm {
            let yc: Vec<f64> = (0..n).map(|p| y[(p, t)]).collect();
            for (c, w) in self.w_cols.iter().enumerate() {
                t_small[(c, t)] = w.dot_dense(&yc);
            }
        }
        let coef = self.g_lu.solve(&t_small);
        let mut out: Vec<Vec<f64>> = (0..nm).map(|t| (0..n).map(|p| y[(p, t)]).collect()).collect();
        match &self.z {
            Some(z) => {
                let corr = z * &coef;
                for (t, col) in out.iter_mut().enumerate() {
                    for (p, x) in col.iter_mut().enumerate() {
                        *x -= corr[(p, t)];
                    }
                }
            }
            None => {
                let mut b1 = Mat::<f64>::zeros(n, 1);
                for (c, w) in self.w_cols.iter().enumerate() {
                    for (&s, &v) in w.idx.iter().zip(&w.val) {
                        b1[(s, 0)] = v;
                    }
                    let zc = self.lu.solve(&b1);
                    for (t, col) in out.iter_mut().enumerate() {
                        let tc = coef[(c, t)];
                        if tc != 0.0 {
                            for (p, x) in col.iter_mut().enumerate() {
                                *x -= tc * zc[(p, 0)];
                            }
                        }
                    }
                    for &s in &w.idx {
                        b1[(s, 0)] = 0.0;
                    }
                }
            }
        }
        Ok(out)
    }

    fn to_global(&self, slots: &[f64]) -> SparseVec {
        SparseVec {
            idx: self.interior.clone(),
            val: slots.to_vec(),
        }
    }
}

/// One localized basis function psi_{j,m}^i over global fine dofs,
/// identically zero outside the patch interior.
pub fn solve_cem_basis(
    grid: &PeriodicGrid,
    a_op: &AssembledOperator,
    s_op: &AssembledOperator,
    aux: &AuxiliarySpace,
    j: usize,
    i: usize,
    m: usize,
) -> Result<SparseVec> {
    check_weight(grid, s_op)?;
    let ps = PatchSolver::build(grid, a_op, aux, j, m, Z_BUDGET_BYTES)?;
    let sols = ps.solve_modes(j, &[i])?;
    Ok(ps.to_global(&sols[0]))
}

/// The idealized (non-localized) basis functions of one coarse element:
/// the patch is all of Omega, no boundary rows are dropped. Returned dense.
pub fn solve_global_basis(
    grid: &PeriodicGrid,
    a_op: &AssembledOperator,
    s_op: &AssembledOperator,
    aux: &AuxiliarySpace,
    j: usize,
) -> Result<Vec<Vec<f64>>> {
    check_weight(grid, s_op)?;
    let m_full = grid.nc_axis(0).max(if grid.dim() > 1 { grid.nc_axis(1) } else { 0 });
    let ps = PatchSolver::build(grid, a_op, aux, j, m_full, Z_BUDGET_BYTES)?;
    debug_assert!(ps.patch.full_cover);
    let modes: Vec<usize> = (0..aux.l).collect();
    let slots = ps.solve_modes(j, &modes)?;
    Ok(slots
        .iter()
        .map(|s| ps.to_global(s).to_dense(grid.n_dofs()))
        .collect())
}

fn check_weight(grid: &PeriodicGrid, s_op: &AssembledOperator) -> Result<()> {
    if s_op.grid_sig != (grid.dim(), grid.n_dofs()) {
        return Err(Error::Mismatch(
            "weight operator was not assembled on this grid".into(),
        ));
    }
    Ok(())
}

/// Oversampling layer count from the coarse resolution: m grows like
/// (2/3) log2 of the per-axis element count, rounded up. Experiment tables
/// may pin their own m; this is only the default.
pub fn default_oversampling(grid: &PeriodicGrid) -> usize {
    let n = (0..grid.dim()).map(|k| grid.nc_axis(k)).max().unwrap();
    ((2.0 / 3.0) * (n as f64).log2() - 1e-9).ceil().max(1.0) as usize
}

pub fn build_multiscale_space(
    grid: &PeriodicGrid,
    a_op: &AssembledOperator,
    s_op: &AssembledOperator,
    m_op: &AssembledOperator,
    aux: &AuxiliarySpace,
    m: usize,
) -> Result<MultiscaleSpace> {
    check_weight(grid, s_op)?;
    if m_op.grid_sig != (grid.dim(), grid.n_dofs()) {
        return Err(Error::Mismatch(
            "mass operator was not assembled on this grid".into(),
        ));
    }
    let l = aux.l;
    let modes: Vec<usize> = (0..l).collect();
    let per_elem: Vec<Vec<SparseVec>> = (0..grid.n_coarse())
        .into_par_iter()
        .map(|j| {
            let ps = PatchSolver::build(grid, a_op, aux, j, m, Z_BUDGET_BYTES)?;
            let slots = ps.solve_modes(j, &modes)?;
            Ok(slots.iter().map(|s| ps.to_global(s)).collect())
        })
        .collect::<Result<_>>()?;
    let mut basis = Vec::with_capacity(grid.n_coarse() * l);
    let mut owners = Vec::with_capacity(grid.n_coarse() * l);
    for (j, cols) in per_elem.into_iter().enumerate() {
        for col in cols {
            basis.push(col);
            owners.push(j);
        }
    }
    let a_ms = reduced_operator(grid, &a_op.mat, &basis, &owners, m);
    let m_ms = reduced_operator(grid, &m_op.mat, &basis, &owners, m);
    Ok(MultiscaleSpace {
        m,
        l,
        lambda: aux.lambda,
        n_dofs: grid.n_dofs(),
        basis,
        owners,
        a_ms,
        m_ms,
    })
}

/// P^T Op P with the pair loop pruned to overlapping patches. Two patches of
/// radius m can only share dofs when their centers sit within 2m+1 coarse
/// layers. Filled on the lower triangle and mirrored, so the result is
/// exactly symmetric.
fn reduced_operator(
    grid: &PeriodicGrid,
    op: &CsrMatrix,
    basis: &[SparseVec],
    owners: &[usize],
    m: usize,
) -> Mat<f64> {
    let k = basis.len();
    let reach = 2 * m + 1;
    let mut out = Mat::<f64>::zeros(k, k);
    let mut y = vec![0.0; op.ncols];
    let mut touched: Vec<usize> = Vec::new();
    for c in 0..k {
        let psi = &basis[c];
        for (&row_i, &v) in psi.idx.iter().zip(&psi.val) {
            let (cols, vals) = op.row(row_i);
            for (&col, &av) in cols.iter().zip(vals) {
                y[col] += av * v;
                touched.push(col);
            }
        }
        for p in 0..=c {
            if coarse_within(grid, owners[p], owners[c], reach) {
                let val = basis[p].dot_dense(&y);
                out[(p, c)] = val;
                out[(c, p)] = val;
            }
        }
        for &t in &touched {
            y[t] = 0.0;
        }
        touched.clear();
    }
    out
}

/// Periodic Chebyshev distance between coarse elements is at most `d`.
fn coarse_within(grid: &PeriodicGrid, j1: usize, j2: usize, d: usize) -> bool {
    let a = grid.coarse_coords(j1);
    let b = grid.coarse_coords(j2);
    for ax in 0..grid.dim() {
        let n = grid.nc_axis(ax);
        let diff = a[ax].abs_diff(b[ax]);
        if diff.min(n - diff) > d {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct DecayStudy {
    pub j: usize,
    pub i: usize,
    /// (oversampling layers, a-norm error against the global function).
    pub rows: Vec<(usize, f64)>,
    /// Least-squares geometric rate of the rows above the noise floor;
    /// None when fewer than two rows carry signal.
    pub theta_hat: Option<f64>,
}

/// Localization error sweep for one basis function: solve at every m in
/// m_list, measure the a-norm distance to the global (full cover) function,
/// and fit the geometric decay rate.
pub fn decay_study(
    grid: &PeriodicGrid,
    a_op: &AssembledOperator,
    s_op: &AssembledOperator,
    aux: &AuxiliarySpace,
    j: usize,
    i: usize,
    m_list: &[usize],
) -> Result<DecayStudy> {
    let global = solve_global_basis(grid, a_op, s_op, aux, j)?;
    let psi_g = &global[i];
    let norm_g = a_op.mat.quad_form(psi_g, psi_g).max(0.0).sqrt();
    let mut ms: Vec<usize> = m_list.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut rows = Vec::with_capacity(ms.len());
    for &m in &ms {
        let psi_m = solve_cem_basis(grid, a_op, s_op, aux, j, i, m)?.to_dense(grid.n_dofs());
        let d: Vec<f64> = psi_g.iter().zip(&psi_m).map(|(a, b)| a - b).collect();
        let err = a_op.mat.quad_form(&d, &d).max(0.0).sqrt();
        rows.push((m, err));
    }
    let theta_hat = fit_geometric_rate(&rows, 1e-12 * norm_g.max(1e-300));
    Ok(DecayStudy {
        j,
        i,
        rows,
        theta_hat,
    })
}
