//! Fine-grid conforming FEM assembly on the periodic mesh: P1 segments in
//! 1D, Q1 quads in 2D. Element matrices are kept alongside the assembled
//! global matrix so restrictions can re-assemble over any element subset;
//! on an eigenproblem element the restriction with no boundary condition is
//! then a true integral over that element, not a principal submatrix.

use std::io::Write as IoWrite;

use crate::grid::{Patch, PeriodicGrid};
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    StiffnessScaled,
    PotentialMass,
    WeightedMass,
    L2Mass,
    HamiltonianA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Element-wise constant 12 eps^2 / H^2, the experiments' default.
    Constant,
    /// mu(x) = sum_k 1/2 eps^2 |grad eta_k(x)|^2 over the owning coarse
    /// element's Lagrange bases.
    ExactLagrange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    ZeroTrace,
    None,
}

/// Per-fine-element dense matrix, nv x nv stored row-major in a fixed slab.
#[derive(Debug, Clone, Copy)]
pub struct ElemMat(pub [f64; 16]);

#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub kind: OperatorKind,
    pub mat: CsrMatrix,
    pub eps: Option<f64>,
    pub weight_mode: Option<WeightMode>,
    /// Empty on restricted operators; restriction needs the parent's.
    pub elem_mats: Vec<ElemMat>,
    /// (dim, dofs) fingerprint of the owning grid, 0 dim marks restricted.
    pub grid_sig: (usize, usize),
}

/// Gauss-Legendre points and weights on [0,1].
pub fn gauss_01(order: usize) -> Vec<(f64, f64)> {
    let half = 0.5;
    match order.max(1) {
        1 => vec![(0.5, 1.0)],
        2 => {
            let d = half / 3.0_f64.sqrt();
            vec![(half - d, half), (half + d, half)]
        }
        3 => {
            let d = half * (3.0_f64 / 5.0).sqrt();
            vec![
                (half - d, 5.0 / 18.0),
                (half, 8.0 / 18.0),
                (half + d, 5.0 / 18.0),
            ]
        }
        4 => {
            let a = half * 0.3399810435848563;
            let b = half * 0.8611363115940526;
            let wa = half * 0.6521451548625461;
            let wb = half * 0.3478548451374538;
            vec![(half - b, wb), (half - a, wa), (half + a, wa), (half + b, wb)]
        }
        _ => {
            let a = half * 0.5384693101056831;
            let b = half * 0.9061798459386640;
            let wa = half * 0.4786286704993665;
            let wb = half * 0.2369268850561891;
            let w0 = half * 0.5688888888888889;
            vec![
                (half - b, wb),
                (half - a, wa),
                (half, w0),
                (half + a, wa),
                (half + b, wb),
            ]
        }
    }
}

/// Q1/P1 shape values at a reference point, counterclockwise node order.
fn shape_values(d: usize, xi: f64, eta: f64, out: &mut [f64; 4]) {
    if d == 1 {
        out[0] = 1.0 - xi;
        out[1] = xi;
    } else {
        out[0] = (1.0 - xi) * (1.0 - eta);
        out[1] = xi * (1.0 - eta);
        out[2] = xi * eta;
        out[3] = (1.0 - xi) * eta;
    }
}

/// Physical-space shape gradients; constant metric on an axis-aligned cell.
fn shape_gradients(d: usize, xi: f64, eta: f64, hx: f64, hy: f64, out: &mut [[f64; 2]; 4]) {
    if d == 1 {
        out[0] = [-1.0 / hx, 0.0];
        out[1] = [1.0 / hx, 0.0];
    } else {
        out[0] = [-(1.0 - eta) / hx, -(1.0 - xi) / hy];
        out[1] = [(1.0 - eta) / hx, -xi / hy];
        out[2] = [eta / hx, xi / hy];
        out[3] = [-eta / hx, (1.0 - xi) / hy];
    }
}

/// Tensor quadrature points on the reference cell: (xi, eta, weight), with
/// eta pinned to 0 and the y-weight to 1 in 1D.
fn ref_quad(d: usize, order: usize) -> Vec<(f64, f64, f64)> {
    let q = gauss_01(order);
    if d == 1 {
        q.iter().map(|&(x, w)| (x, 0.0, w)).collect()
    } else {
        let mut out = Vec::with_capacity(q.len() * q.len());
        for &(y, wy) in &q {
            for &(x, wx) in &q {
                out.push((x, y, wx * wy));
            }
        }
        out
    }
}

fn assemble_elementwise<F>(grid: &PeriodicGrid, mut elem_matrix: F) -> (CsrMatrix, Vec<ElemMat>)
where
    F: FnMut(usize) -> ElemMat,
{
    let nv = grid.nodes_per_elem();
    let n = grid.n_dofs();
    let ne = grid.n_fine_elems();
    let mut elem_mats = Vec::with_capacity(ne);
    let mut trips = Vec::with_capacity(ne * nv * nv);
    for e in 0..ne {
        let em = elem_matrix(e);
        let (nodes, _) = grid.fine_elem_nodes(e);
        for a in 0..nv {
            for b in 0..nv {
                trips.push((nodes[a], nodes[b], em.0[a * 4 + b]));
            }
        }
        elem_mats.push(em);
    }
    (CsrMatrix::from_triplets(n, n, &trips), elem_mats)
}

/// 1/2 eps^2 (grad u, grad v).
pub fn assemble_stiffness(grid: &PeriodicGrid, eps: f64) -> Result<AssembledOperator> {
    if !(eps > 0.0) {
        return Err(Error::Assembly("eps must be positive".into()));
    }
    let d = grid.dim();
    let (hx, hy) = (grid.fine_h(0), if d == 2 { grid.fine_h(1) } else { 1.0 });
    let jac = if d == 1 { hx } else { hx * hy };
    let quad = ref_quad(d, 2);
    let nv = grid.nodes_per_elem();
    let factor = 0.5 * eps * eps;
    // identical on every element of the uniform mesh
    let mut proto = ElemMat([0.0; 16]);
    let mut grads = [[0.0; 2]; 4];
    for &(xi, eta, w) in &quad {
        shape_gradients(d, xi, eta, hx, hy, &mut grads);
        for a in 0..nv {
            for b in a..nv {
                let g = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                let inc = factor * w * jac * g;
                proto.0[a * 4 + b] += inc;
                if b != a {
                    proto.0[b * 4 + a] += inc;
                }
            }
        }
    }
    let (mat, elem_mats) = assemble_elementwise(grid, |_| proto);
    Ok(AssembledOperator {
        kind: OperatorKind::StiffnessScaled,
        mat,
        eps: Some(eps),
        weight_mode: None,
        elem_mats,
        grid_sig: (grid.dim(), grid.n_dofs()),
    })
}

/// (grad u, grad v) without scaling, for the H1 norm.
pub fn assemble_unit_stiffness(grid: &PeriodicGrid) -> Result<AssembledOperator> {
    let eps_for_unit = std::f64::consts::SQRT_2; // 1/2 eps^2 = 1
    let mut op = assemble_stiffness(grid, eps_for_unit)?;
    op.eps = None;
    Ok(op)
}

/// (V u, v) with per-element tensor Gauss quadrature.
pub fn assemble_potential_mass<F>(
    grid: &PeriodicGrid,
    potential: F,
    quad_order: usize,
) -> Result<AssembledOperator>
where
    F: Fn([f64; 2]) -> f64,
{
    let d = grid.dim();
    let (hx, hy) = (grid.fine_h(0), if d == 2 { grid.fine_h(1) } else { 1.0 });
    let jac = if d == 1 { hx } else { hx * hy };
    let quad = ref_quad(d, quad_order);
    let nv = grid.nodes_per_elem();
    let mut vals = [0.0f64; 4];
    let mut bad: Option<[f64; 2]> = None;
    let (mat, elem_mats) = assemble_elementwise(grid, |e| {
        let orig = grid.fine_elem_origin(e);
        let mut em = ElemMat([0.0; 16]);
        for &(xi, eta, w) in &quad {
            let x = [orig[0] + xi * hx, orig[1] + eta * hy];
            let v = potential(x);
            if !v.is_finite() && bad.is_none() {
                bad = Some(x);
            }
            shape_values(d, xi, eta, &mut vals);
            // fill the upper triangle and mirror so symmetry is exact
            for a in 0..nv {
                for b in a..nv {
                    let inc = v * w * jac * vals[a] * vals[b];
                    em.0[a * 4 + b] += inc;
                    if b != a {
                        em.0[b * 4 + a] += inc;
                    }
                }
            }
        }
        em
    });
    if let Some(x) = bad {
        return Err(Error::Assembly(format!(
            "potential not finite at quadrature point ({}, {})",
            x[0], x[1]
        )));
    }
    Ok(AssembledOperator {
        kind: OperatorKind::PotentialMass,
        mat,
        eps: None,
        weight_mode: None,
        elem_mats,
        grid_sig: (grid.dim(), grid.n_dofs()),
    })
}

/// Plain L2 mass.
pub fn l2_mass(grid: &PeriodicGrid) -> Result<AssembledOperator> {
    let mut op = assemble_potential_mass(grid, |_| 1.0, 2)?;
    op.kind = OperatorKind::L2Mass;
    Ok(op)
}

/// Weighted mass for the local spectral problems. Constant mode uses
/// 12 eps^2 H^-2 per coarse element; exact mode integrates the sum of
/// squared coarse Lagrange gradients.
pub fn assemble_weighted_mass(
    grid: &PeriodicGrid,
    mode: WeightMode,
    eps: f64,
) -> Result<AssembledOperator> {
    if !(eps > 0.0) {
        return Err(Error::Assembly("eps must be positive".into()));
    }
    let d = grid.dim();
    let (hx, hy) = (grid.fine_h(0), if d == 2 { grid.fine_h(1) } else { 1.0 });
    let (chx, chy) = (
        grid.coarse_h(0),
        if d == 2 { grid.coarse_h(1) } else { 1.0 },
    );
    let jac = if d == 1 { hx } else { hx * hy };
    let quad = ref_quad(d, 2);
    let nv = grid.nodes_per_elem();
    let mut vals = [0.0f64; 4];
    let h_elem = grid.coarse_h_max();
    let constant_mu = 12.0 * eps * eps / (h_elem * h_elem);
    let (mat, elem_mats) = assemble_elementwise(grid, |e| {
        let orig = grid.fine_elem_origin(e);
        let j = grid.owner_of_fine_elem(e);
        let [jx, jy] = grid.coarse_coords(j);
        let cx0 = grid.lo()[0] + jx as f64 * chx;
        let cy0 = grid.lo()[1] + jy as f64 * chy;
        let mut em = ElemMat([0.0; 16]);
        for &(xi, eta, w) in &quad {
            let x = [orig[0] + xi * hx, orig[1] + eta * hy];
            let mu = match mode {
                WeightMode::Constant => constant_mu,
                WeightMode::ExactLagrange => {
                    // local coordinates inside the owning coarse element
                    let cxi = (x[0] - cx0) / chx;
                    let ceta = (x[1] - cy0) / chy;
                    let mut grads = [[0.0; 2]; 4];
                    shape_gradients(d, cxi, ceta, chx, chy, &mut grads);
                    let sum_sq: f64 = grads[..nv]
                        .iter()
                        .map(|g| g[0] * g[0] + g[1] * g[1])
                        .sum();
                    0.5 * eps * eps * sum_sq
                }
            };
            shape_values(d, xi, eta, &mut vals);
            for a in 0..nv {
                for b in a..nv {
                    let inc = mu * w * jac * vals[a] * vals[b];
                    em.0[a * 4 + b] += inc;
                    if b != a {
                        em.0[b * 4 + a] += inc;
                    }
                }
            }
        }
        em
    });
    Ok(AssembledOperator {
        kind: OperatorKind::WeightedMass,
        mat,
        eps: Some(eps),
        weight_mode: Some(mode),
        elem_mats,
        grid_sig: (grid.dim(), grid.n_dofs()),
    })
}

/// a-form operator: scaled stiffness plus potential mass. The inputs must
/// come from the same grid.
pub fn hamiltonian(stiffness: &AssembledOperator, potential: &AssembledOperator) -> Result<AssembledOperator> {
    if stiffness.grid_sig != potential.grid_sig {
        return Err(Error::Mismatch("operators from different grids".into()));
    }
    if stiffness.kind != OperatorKind::StiffnessScaled || potential.kind != OperatorKind::PotentialMass {
        return Err(Error::Mismatch("hamiltonian needs stiffness and potential mass".into()));
    }
    // same assembly loop, same pattern
    assert_eq!(stiffness.mat.col_idx, potential.mat.col_idx);
    let mut mat = stiffness.mat.clone();
    for (v, w) in mat.vals.iter_mut().zip(&potential.mat.vals) {
        *v += w;
    }
    let elem_mats = stiffness
        .elem_mats
        .iter()
        .zip(&potential.elem_mats)
        .map(|(a, b)| {
            let mut m = [0.0; 16];
            for i in 0..16 {
                m[i] = a.0[i] + b.0[i];
            }
            ElemMat(m)
        })
        .collect();
    Ok(AssembledOperator {
        kind: OperatorKind::HamiltonianA,
        mat,
        eps: stiffness.eps,
        weight_mode: None,
        elem_mats,
        grid_sig: stiffness.grid_sig,
    })
}

/// Restriction to a patch: re-assembles the element matrices over the
/// patch's fine elements. With `ZeroTrace` the rows and columns of the
/// patch-boundary dofs are dropped (dof order then follows
/// `patch.interior_local`); with `None` all patch dofs are kept.
pub fn restrict(
    op: &AssembledOperator,
    grid: &PeriodicGrid,
    patch: &Patch,
    bc: BoundaryCondition,
) -> Result<AssembledOperator> {
    if op.grid_sig != (grid.dim(), grid.n_dofs()) {
        return Err(Error::Mismatch(
            "operator was not assembled on this grid".into(),
        ));
    }
    if op.elem_mats.len() != grid.n_fine_elems() {
        return Err(Error::Mismatch("operator lacks element matrices".into()));
    }
    let nv = grid.nodes_per_elem();
    let keep: Vec<usize> = match bc {
        BoundaryCondition::None => (0..patch.n_dofs()).collect(),
        BoundaryCondition::ZeroTrace => patch.interior_local.clone(),
    };
    let mut slot_of_local = vec![usize::MAX; patch.n_dofs()];
    for (slot, &loc) in keep.iter().enumerate() {
        slot_of_local[loc] = slot;
    }
    let mut trips = Vec::with_capacity(patch.fine_elements.len() * nv * nv);
    for &e in &patch.fine_elements {
        let em = &op.elem_mats[e];
        let (nodes, _) = grid.fine_elem_nodes(e);
        for a in 0..nv {
            let la = patch.local_of_global[nodes[a]];
            debug_assert!(la >= 0);
            let sa = slot_of_local[la as usize];
            if sa == usize::MAX {
                continue;
            }
            for b in 0..nv {
                let lb = patch.local_of_global[nodes[b]];
                let sb = slot_of_local[lb as usize];
                if sb != usize::MAX {
                    trips.push((sa, sb, em.0[a * 4 + b]));
                }
            }
        }
    }
    Ok(AssembledOperator {
        kind: op.kind,
        mat: CsrMatrix::from_triplets(keep.len(), keep.len(), &trips),
        eps: op.eps,
        weight_mode: op.weight_mode,
        elem_mats: Vec::new(),
        grid_sig: (0, keep.len()),
    })
}

impl AssembledOperator {
    pub fn n(&self) -> usize {
        self.mat.nrows
    }

    /// Coordinate-format text dump: one "row col value" line per entry.
    pub fn dump_coo<W: IoWrite>(&self, w: &mut W) -> std::io::Result<()> {
        for r in 0..self.mat.nrows {
            let (cols, vals) = self.mat.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", r, c, v)?;
            }
        }
        Ok(())
    }
}
