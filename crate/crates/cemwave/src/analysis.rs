//! Observables and error metrics. Relative errors are measured through the
//! assembled quadratic forms: L2 via the mass matrix, H1 via mass plus the
//! unscaled stiffness, and the energy norm via the Hamiltonian operator.

use num_complex::Complex64;

use crate::assembly::{assemble_potential_mass, assemble_stiffness, AssembledOperator};
use crate::evolve::{Space, WaveField};
use crate::grid::PeriodicGrid;
use crate::{Error, Result};

/// Nodal position density |u_p|^2.
pub fn position_density(u: &WaveField) -> Vec<f64> {
    u.data.iter().map(|z| z.norm_sqr()).collect()
}

/// Element-averaged energy density (eps^2/2)|grad u|^2 + V|u|^2, evaluated
/// with the same quadrature the operators use, so the element sum weighted
/// by element volume reproduces u^H A u identically.
pub fn energy_density<F>(
    grid: &PeriodicGrid,
    u: &WaveField,
    eps: f64,
    potential: F,
    quad_order: usize,
) -> Result<Vec<f64>>
where
    F: Fn([f64; 2]) -> f64,
{
    if u.space != Space::Fine || u.n() != grid.n_dofs() {
        return Err(Error::Mismatch(
            "energy density expects a fine field on the given grid".into(),
        ));
    }
    let k_op = assemble_stiffness(grid, eps)?;
    let p_op = assemble_potential_mass(grid, potential, quad_order)?;
    let nv = grid.nodes_per_elem();
    let vol: f64 = (0..grid.dim()).map(|ax| grid.fine_h(ax)).product();
    let mut out = Vec::with_capacity(grid.n_fine_elems());
    for e in 0..grid.n_fine_elems() {
        let (nodes, _) = grid.fine_elem_nodes(e);
        let mut acc = 0.0;
        for a in 0..nv {
            for b in 0..nv {
                let w = k_op.elem_mats[e].0[a * 4 + b] + p_op.elem_mats[e].0[a * 4 + b];
                acc += (u.data[nodes[a]].conj() * u.data[nodes[b]]).re * w;
            }
        }
        out.push(acc / vol);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct ErrorReport {
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_a: f64,
    /// Run metadata, filled by the caller that knows the setup.
    pub h_coarse: f64,
    pub h_fine: f64,
    pub m: usize,
    pub l: usize,
    pub eps: f64,
    pub delta: Option<f64>,
    pub upsilon: Option<f64>,
    pub dt: f64,
}

/// Relative errors of u_test against u_ref on one grid. The H1 form is the
/// plain Sobolev one (mass plus unit stiffness); the a-norm uses the scaled
/// Hamiltonian and is reported separately.
pub fn relative_errors(
    u_test: &WaveField,
    u_ref: &WaveField,
    m_op: &AssembledOperator,
    unit_k_op: &AssembledOperator,
    a_op: &AssembledOperator,
) -> Result<ErrorReport> {
    let n = m_op.n();
    if u_test.n() != n || u_ref.n() != n || u_test.space != Space::Fine || u_ref.space != Space::Fine
    {
        return Err(Error::Mismatch(
            "error evaluation expects two fine fields on the operators' grid".into(),
        ));
    }
    let d: Vec<Complex64> = u_test
        .data
        .iter()
        .zip(&u_ref.data)
        .map(|(a, b)| a - b)
        .collect();
    let quad = |op: &AssembledOperator, v: &[Complex64]| op.mat.quad_form_complex(v, v).re;
    let ref_l2 = quad(m_op, &u_ref.data);
    if ref_l2 <= 0.0 {
        return Err(Error::Problem(
            "reference field has zero L2 norm; relative errors undefined".into(),
        ));
    }
    let ref_h1 = ref_l2 + quad(unit_k_op, &u_ref.data);
    let ref_a = quad(a_op, &u_ref.data).abs();
    let d_l2 = quad(m_op, &d).max(0.0);
    let d_h1 = (quad(m_op, &d) + quad(unit_k_op, &d)).max(0.0);
    let d_a = quad(a_op, &d).abs();
    Ok(ErrorReport {
        err_l2: (d_l2 / ref_l2).sqrt(),
        err_h1: (d_h1 / ref_h1).sqrt(),
        err_a: if ref_a > 0.0 { (d_a / ref_a).sqrt() } else { 0.0 },
        ..Default::default()
    })
}

/// Observed orders from a refinement sweep: order_k = log of successive
/// error ratios over the log of the H ratio (log2 of the error ratio when
/// H halves). H must decrease strictly.
pub fn convergence_order(rows: &[(f64, f64)]) -> Result<Vec<f64>> {
    for w in rows.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::Config(format!(
                "grid sizes must decrease strictly, got {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    for &(h, e) in rows {
        if !(h > 0.0) || !(e > 0.0) || !e.is_finite() {
            return Err(Error::Config(format!(
                "orders need positive finite entries, got ({h}, {e})"
            )));
        }
    }
    Ok(rows
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect())
}
