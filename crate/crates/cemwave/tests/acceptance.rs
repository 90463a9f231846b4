//! End-to-end acceptance suite. Each test checks one numbered contract and
//! prints exactly one `ACCEPTANCE <n> PASS|FAIL` line; tolerances are pinned
//! here, not read from anywhere else. The sweep-based checks (6-9) rerun the
//! built-in parameter studies and take minutes; everything else is seconds.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use cemwave::{
    assemble_potential_mass, assemble_stiffness, assemble_weighted_mass, build_auxiliary_space,
    build_grid, build_multiscale_space, decay_study, elliptic_project, extract_patch, hamiltonian,
    l2_mass, make_initial_data, make_potential, prolong, restrict, run_cn, run_table,
    sample_initial, solve_cem_basis, solve_global_basis, solve_local_eigenproblem,
    AssembledOperator, BoundaryCondition, CnStepper, EvolutionConfig, InitialKind,
    MultiscaleSpace, PeriodicGrid, PotentialKind, RunArtifacts, Space, TableId, WaveField,
    WeightMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Evaluate `body`, print the verdict line, then fail the test on any
/// recorded violation (or rethrow a panic from inside the body).
///
/// The verdict goes straight to the process stdout: the harness captures the
/// `println!` machinery for passing tests, and the PASS lines must survive.
fn criterion<F>(n: usize, body: F)
where
    F: FnOnce() -> Vec<String>,
{
    use std::io::Write;
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let pass = matches!(&outcome, Ok(fails) if fails.is_empty());
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "ACCEPTANCE {n} {}", if pass { "PASS" } else { "FAIL" });
    let _ = out.flush();
    match outcome {
        Ok(fails) => assert!(fails.is_empty(), "criterion {n}: {}", fails.join("; ")),
        Err(p) => std::panic::resume_unwind(p),
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cemwave-acceptance-{name}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

struct Pipe {
    grid: PeriodicGrid,
    a: AssembledOperator,
    s: AssembledOperator,
    mass: AssembledOperator,
    ms: MultiscaleSpace,
    u0: WaveField,
}

/// Full assembly pipeline for one catalog problem at desk scale.
fn pipeline(kind: PotentialKind, eps: f64, nc: usize, r: usize, l: usize, m: usize) -> Pipe {
    let pot = make_potential(kind).unwrap();
    let dim = match pot.kind {
        PotentialKind::Checkerboard2d { .. }
        | PotentialKind::Inclusions2d { .. }
        | PotentialKind::FromCells => 2,
        _ => 1,
    };
    let grid = if dim == 1 {
        build_grid(1, &[0.0], &[2.0], &[nc], &[r]).unwrap()
    } else {
        build_grid(2, &[0.0, 0.0], &[1.0, 1.0], &[nc, nc], &[r, r]).unwrap()
    };
    let k = assemble_stiffness(&grid, eps).unwrap();
    let pc = pot.clone();
    let v = assemble_potential_mass(&grid, move |x| pc.eval(x), 3).unwrap();
    let a = hamiltonian(&k, &v).unwrap();
    let s = assemble_weighted_mass(&grid, WeightMode::Constant, eps).unwrap();
    let mass = l2_mass(&grid).unwrap();
    let aux = build_auxiliary_space(&grid, &a, &s, l).unwrap();
    let ms = build_multiscale_space(&grid, &a, &s, &mass, &aux, m).unwrap();
    let init = make_initial_data(
        if dim == 1 { InitialKind::Wkb1d } else { InitialKind::Gaussian2d },
        eps,
    )
    .unwrap();
    let u0 = sample_initial(&grid, &init);
    Pipe { grid, a, s, mass, ms, u0 }
}

fn catalog() -> Vec<(&'static str, Pipe)> {
    vec![
        ("smooth-1d", pipeline(PotentialKind::Smooth1d, 0.25, 8, 4, 2, 2)),
        (
            "two-scale-1d",
            pipeline(
                PotentialKind::TwoScale1d { delta1: 0.25, delta2: 0.1 },
                0.25,
                16,
                4,
                2,
                2,
            ),
        ),
        (
            "checkerboard-2d",
            pipeline(
                PotentialKind::Checkerboard2d { delta1: 0.25, delta2: 0.125 },
                0.25,
                6,
                4,
                2,
                2,
            ),
        ),
        (
            "inclusions-2d",
            pipeline(
                PotentialKind::Inclusions2d {
                    upsilon: 100.0,
                    seed: 7,
                    cells: (6, 6),
                    fraction: 0.25,
                },
                0.25,
                6,
                4,
                2,
                2,
            ),
        ),
        ("constant", pipeline(PotentialKind::Constant { value: 1.0 }, 0.5, 6, 3, 2, 2)),
    ]
}

// --------------------------------------------------------------------------
// 1. Crank-Nicolson conserves discrete mass and energy exactly (to rounding)
//    on every catalog problem, in both the fine and the reduced space.
// --------------------------------------------------------------------------
#[test]
fn criterion_01_conservation_on_every_catalog_problem() {
    const TOL: f64 = 1e-11;
    criterion(1, || {
        let mut fails = Vec::new();
        for (name, p) in catalog() {
            let cfg = EvolutionConfig::new(0.01, 0.1, Space::Fine).unwrap().with_snapshots(1);
            let st = CnStepper::new_fine(&p.mass, &p.a, p.u0.eps, cfg.dt).unwrap();
            let fine = run_cn(&cfg, &st, p.u0.clone()).unwrap();

            let red0 = elliptic_project(&p.u0, &p.ms, &p.a).unwrap();
            let cfg = EvolutionConfig::new(0.01, 0.1, Space::Reduced).unwrap().with_snapshots(1);
            let st = CnStepper::new_reduced(&p.ms, p.u0.eps, cfg.dt).unwrap();
            let red = run_cn(&cfg, &st, red0).unwrap();

            for (space, drift) in [
                ("fine mass", fine.mass_drift),
                ("fine energy", fine.energy_drift),
                ("reduced mass", red.mass_drift),
                ("reduced energy", red.energy_drift),
            ] {
                if !(drift <= TOL) {
                    fails.push(format!("{name}: {space} drift {drift:.3e} > {TOL:.0e}"));
                }
            }
        }
        fails
    });
}

// --------------------------------------------------------------------------
// 2. Every retained local eigenpair satisfies its pencil equation and the
//    s-orthonormality to 1e-10; on constant-coefficient elements the lowest
//    eigenvalue equals V0 H^2 / (12 eps^2) to 1e-12 (the constant mode).
// --------------------------------------------------------------------------
#[test]
fn criterion_02_local_eigensolver_correctness() {
    const TOL_EIG: f64 = 1e-10;
    const TOL_CONST: f64 = 1e-12;
    criterion(2, || {
        let mut fails = Vec::new();
        let probs = [
            ("two-scale-1d", pipeline(PotentialKind::TwoScale1d { delta1: 0.25, delta2: 0.1 }, 0.25, 16, 4, 3, 1)),
            ("checkerboard-2d", pipeline(PotentialKind::Checkerboard2d { delta1: 0.25, delta2: 0.125 }, 0.25, 6, 4, 3, 1)),
        ];
        for (name, p) in &probs {
            for j in 0..p.grid.n_coarse() {
                let set = solve_local_eigenproblem(&p.grid, &p.a, &p.s, j, 3).unwrap();
                let patch = extract_patch(&p.grid, j, 0).unwrap();
                let a_j = restrict(&p.a, &p.grid, &patch, BoundaryCondition::None).unwrap();
                let n = patch.n_dofs();
                let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
                for i in 0..set.vectors.len() {
                    let phi = &set.vectors[i];
                    let lam = set.lambdas[i];
                    let mut av = vec![0.0; n];
                    a_j.mat.matvec(phi, &mut av);
                    let res: Vec<f64> = av
                        .iter()
                        .zip(&set.weighted[i])
                        .map(|(a, q)| a - lam * q)
                        .collect();
                    let scale = l2(&av) + lam.abs() * l2(&set.weighted[i]);
                    let rel = l2(&res) / scale.max(1e-300);
                    if !(rel <= TOL_EIG) {
                        fails.push(format!("{name} elem {j} mode {i}: residual {rel:.3e}"));
                    }
                    for k in 0..set.vectors.len() {
                        let d = if i == k { 1.0 } else { 0.0 };
                        let g: f64 = phi.iter().zip(&set.weighted[k]).map(|(a, b)| a * b).sum();
                        if !((g - d).abs() <= TOL_EIG) {
                            fails.push(format!(
                                "{name} elem {j}: s-orthonormality ({i},{k}) off by {:.3e}",
                                (g - d).abs()
                            ));
                        }
                    }
                }
            }
        }

        // constant-coefficient oracle: A_j = V0 M_j, S_j = mu M_j with
        // mu = 12 eps^2 / H^2, so the whole spectrum collapses to V0/mu.
        let (v0, eps) = (2.0, 0.4);
        let p = pipeline(PotentialKind::Constant { value: v0 }, eps, 4, 3, 2, 1);
        let h = p.grid.coarse_h_max();
        let expected = v0 * h * h / (12.0 * eps * eps);
        for j in 0..p.grid.n_coarse() {
            let set = solve_local_eigenproblem(&p.grid, &p.a, &p.s, j, 2).unwrap();
            let rel = (set.lambdas[0] - expected).abs() / expected;
            if !(rel <= TOL_CONST) {
                fails.push(format!(
                    "constant elem {j}: lambda_0 = {} vs {expected} (rel {rel:.3e})",
                    set.lambdas[0]
                ));
            }
        }
        fails
    });
}

// --------------------------------------------------------------------------
// 3. Spectral projection inequality: ||v - pi v||_s^2 <= ||v||_a^2 / lambda
//    with lambda the first discarded eigenvalue, for 100 random local fields
//    on every element. Holds by eigen-expansion whenever V >= 0 (all catalog
//    2D problems and the smooth 1D one; the sign-indefinite two-scale
//    potential is excluded since its a-form is not a norm).
// --------------------------------------------------------------------------
#[test]
fn criterion_03_projection_inequality_on_random_fields() {
    const FIELDS: usize = 100;
    criterion(3, || {
        let mut fails = Vec::new();
        let probs = [
            ("smooth-1d", pipeline(PotentialKind::Smooth1d, 0.25, 8, 4, 2, 1)),
            ("checkerboard-2d", pipeline(PotentialKind::Checkerboard2d { delta1: 0.25, delta2: 0.125 }, 0.25, 4, 4, 2, 1)),
            ("inclusions-2d", pipeline(PotentialKind::Inclusions2d { upsilon: 1e3, seed: 7, cells: (4, 4), fraction: 0.25 }, 0.25, 4, 4, 2, 1)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0x1ebe);
        for (name, p) in &probs {
            for j in 0..p.grid.n_coarse() {
                let set = solve_local_eigenproblem(&p.grid, &p.a, &p.s, j, 2).unwrap();
                let patch = extract_patch(&p.grid, j, 0).unwrap();
                let a_j = restrict(&p.a, &p.grid, &patch, BoundaryCondition::None).unwrap();
                let s_j = restrict(&p.s, &p.grid, &patch, BoundaryCondition::None).unwrap();
                let n = patch.n_dofs();
                let lambda = *set.lambdas.last().unwrap();
                let mut worst = 0.0f64;
                for _ in 0..FIELDS {
                    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let mut d = v.clone();
                    for (phi, q) in set.vectors.iter().zip(&set.weighted) {
                        let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                        for (dp, ph) in d.iter_mut().zip(phi) {
                            *dp -= c * ph;
                        }
                    }
                    let lhs = s_j.mat.quad_form(&d, &d);
                    let rhs = a_j.mat.quad_form(&v, &v) / lambda;
                    if lhs > rhs * (1.0 + 1e-12) + 1e-14 {
                        worst = worst.max(lhs / rhs);
                    }
                }
                if worst > 0.0 {
                    fails.push(format!("{name} elem {j}: violation ratio {worst:.6}"));
                }
            }
        }
        fails
    });
}

// --------------------------------------------------------------------------
// 4. Localization: full-cover patches reproduce the globally supported basis
//    to 1e-10 in the a-norm, and on the checkerboard problem at eps = 1/8,
//    H = 1/20 the localization error decays strictly in m with a fitted
//    geometric rate below 1, inside a two-minute budget.
// --------------------------------------------------------------------------
#[test]
fn criterion_04_localization_decay() {
    const TOL_ORACLE: f64 = 1e-10;
    criterion(4, || {
        let mut fails = Vec::new();

        // (a) exactness once the patch covers the whole domain
        let p = pipeline(PotentialKind::Checkerboard2d { delta1: 0.5, delta2: 0.25 }, 0.3, 4, 3, 2, 2);
        let aux = build_auxiliary_space(&p.grid, &p.a, &p.s, 2).unwrap();
        for j in 0..p.grid.n_coarse() {
            let global = solve_global_basis(&p.grid, &p.a, &p.s, &aux, j).unwrap();
            for (i, psi_g) in global.iter().enumerate() {
                assert!(extract_patch(&p.grid, j, 2).unwrap().full_cover);
                let psi_m = solve_cem_basis(&p.grid, &p.a, &p.s, &aux, j, i, 2)
                    .unwrap()
                    .to_dense(p.grid.n_dofs());
                let d: Vec<f64> = psi_g.iter().zip(&psi_m).map(|(a, b)| a - b).collect();
                let err = p.a.mat.quad_form(&d, &d).max(0.0).sqrt();
                let norm = p.a.mat.quad_form(psi_g, psi_g).max(0.0).sqrt();
                if !(err <= TOL_ORACLE * norm) {
                    fails.push(format!("full-cover basis ({j},{i}) differs: {:.3e}", err / norm));
                }
            }
        }

        // (b) geometric decay on the oscillatory checkerboard
        let t0 = Instant::now();
        let eps = 0.125;
        let grid = build_grid(2, &[0.0, 0.0], &[1.0, 1.0], &[20, 20], &[5, 5]).unwrap();
        let pot = make_potential(PotentialKind::Checkerboard2d { delta1: 0.125, delta2: 1.0 / 16.0 }).unwrap();
        let k = assemble_stiffness(&grid, eps).unwrap();
        let pc = pot.clone();
        let v = assemble_potential_mass(&grid, move |x| pc.eval(x), 3).unwrap();
        let a = hamiltonian(&k, &v).unwrap();
        let s = assemble_weighted_mass(&grid, WeightMode::Constant, eps).unwrap();
        let aux = build_auxiliary_space(&grid, &a, &s, 3).unwrap();
        let j = grid.coarse_index(10, 10);
        let study = decay_study(&grid, &a, &s, &aux, j, 0, &[1, 2, 3, 4]).unwrap();
        let elapsed = t0.elapsed().as_secs_f64();

        for w in study.rows.windows(2) {
            if !(w[1].1 < w[0].1) {
                fails.push(format!(
                    "decay not strict: err(m={}) = {:.3e} vs err(m={}) = {:.3e}",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        match study.theta_hat {
            Some(th) if th < 1.0 => {}
            Some(th) => fails.push(format!("fitted rate {th:.3} >= 1")),
            None => fails.push("no fitted decay rate".into()),
        }
        if elapsed > 120.0 {
            fails.push(format!("decay study took {elapsed:.0}s > 120s"));
        }
        fails
    });
}

// --------------------------------------------------------------------------
// 5. Full-space oracle: with every local mode retained and full-cover
//    patches on a 16-node 1D grid, the reduced Crank-Nicolson trajectory
//    matches the fine one at T = 0.1 to 1e-10 in relative L2.
// --------------------------------------------------------------------------
#[test]
fn criterion_05_full_space_trajectory_equality() {
    const TOL: f64 = 1e-10;
    criterion(5, || {
        let mut fails = Vec::new();
        let eps = 0.5;
        // A generic (asymmetric) potential: mirror-symmetric ones make the
        // stacked constraint vectors rank-deficient, so the nominally
        // complete reduced space would NOT span the fine space and the
        // oracle's premise would not hold.
        let grid = build_grid(1, &[0.0], &[2.0], &[4], &[4]).unwrap();
        let k = assemble_stiffness(&grid, eps).unwrap();
        let v = assemble_potential_mass(&grid, |x| 1.5 + (3.0 * x[0]).sin(), 3).unwrap();
        let a = hamiltonian(&k, &v).unwrap();
        let s = assemble_weighted_mass(&grid, WeightMode::Constant, eps).unwrap();
        let mass = l2_mass(&grid).unwrap();
        let aux = build_auxiliary_space(&grid, &a, &s, 4).unwrap();
        let ms = build_multiscale_space(&grid, &a, &s, &mass, &aux, 2).unwrap();
        assert_eq!(grid.n_dofs(), 16);
        assert_eq!(ms.n_basis(), 16, "reduced space must span the fine space");
        assert!(extract_patch(&grid, 0, 2).unwrap().full_cover);
        let init = make_initial_data(InitialKind::Wkb1d, eps).unwrap();
        let u0 = sample_initial(&grid, &init);

        let cfg = EvolutionConfig::new(0.02, 0.1, Space::Fine).unwrap();
        let st = CnStepper::new_fine(&mass, &a, eps, cfg.dt).unwrap();
        let fine = run_cn(&cfg, &st, u0.clone()).unwrap();

        let red0 = elliptic_project(&u0, &ms, &a).unwrap();
        let cfg = EvolutionConfig::new(0.02, 0.1, Space::Reduced).unwrap();
        let st = CnStepper::new_reduced(&ms, eps, cfg.dt).unwrap();
        let red = run_cn(&cfg, &st, red0).unwrap();
        let lifted = prolong(&ms, red.final_field()).unwrap();

        let d: Vec<_> = lifted
            .data
            .iter()
            .zip(&fine.final_field().data)
            .map(|(a, b)| a - b)
            .collect();
        let err = mass.mat.quad_form_complex(&d, &d).re.max(0.0).sqrt();
        let norm = mass
            .mat
            .quad_form_complex(&fine.final_field().data, &fine.final_field().data)
            .re
            .sqrt();
        if !(err <= TOL * norm) {
            fails.push(format!("relative L2 gap {:.3e} > {TOL:.0e}", err / norm));
        }
        fails
    });
}

/// Pull (err_l2, err_h1) rows out of sweep artifacts.
fn errors_of(arts: &[RunArtifacts]) -> Vec<(f64, f64)> {
    arts.iter().map(|a| (a.report.err_l2, a.report.err_h1)).collect()
}

fn check_orders(arts: &[RunArtifacts], min_l2: f64, min_h1: f64, fails: &mut Vec<String>) {
    for a in &arts[1..] {
        match (a.order_l2, a.order_h1) {
            (Some(ol2), Some(oh1)) => {
                if !(ol2 >= min_l2) {
                    fails.push(format!("{}: L2 order {ol2:.2} < {min_l2}", a.plan.id));
                }
                if !(oh1 >= min_h1) {
                    fails.push(format!("{}: H1 order {oh1:.2} < {min_h1}", a.plan.id));
                }
            }
            _ => fails.push(format!("{}: missing convergence order", a.plan.id)),
        }
    }
}

// --------------------------------------------------------------------------
// 6. Coarse-space convergence sweep at eps = 1/8 (checkerboard, l = 3,
//    fine 1/200, H = 1/10 -> 1/40 with m = 2 -> 4): L2 order >= 1.8, H1
//    order >= 0.8, and absolute errors within 3x of the pinned reference values.
// --------------------------------------------------------------------------
#[test]
fn criterion_06_checkerboard_convergence_eps_8th() {
    // pinned reference errors for the three grids
    const PIN_L2: [f64; 3] = [3.856e-2, 8.717e-3, 1.831e-3];
    const PIN_H1: [f64; 3] = [1.651e-1, 7.067e-2, 2.325e-2];
    criterion(6, || {
        let mut fails = Vec::new();
        let arts = run_table(TableId::Table4, Some(&scratch("t4")), None).unwrap();
        assert_eq!(arts.len(), 3);
        check_orders(&arts, 1.8, 0.8, &mut fails);
        for (row, ((el2, eh1), (pl2, ph1))) in
            errors_of(&arts).iter().zip(PIN_L2.iter().zip(&PIN_H1)).enumerate()
        {
            for (what, e, pin) in [("L2", el2, pl2), ("H1", eh1, ph1)] {
                let ratio = e / pin;
                if !(ratio <= 3.0 && ratio >= 1.0 / 3.0) {
                    fails.push(format!("row {row}: {what} error {e:.3e} is {ratio:.2}x the reference"));
                }
            }
        }
        let wall: f64 = arts.iter().map(|a| a.wall_seconds).sum();
        println!("  (sweep wall time {wall:.0}s)");
        fails
    });
}

// --------------------------------------------------------------------------
// 7. Same sweep at eps = 1/32: L2 order >= 1.8 and H1 order >= 0.7.
//
// Known shortfall, kept honest: the first refinement pair (H = 1/10 -> 1/20)
// does not reach these orders. At H = 1/10 the L2-OPTIMAL representation of
// the evolved state inside the coarse space is already ~27% off (measured by
// a direct Gram solve), and widening the patches does not move it — the
// localized and global spaces agree there to four digits. The error sits on
// the space's representation floor until H = 1/40 resolves the data (2.0e-2,
// final-pair orders 3.7/2.8). The thresholds stay pinned; this criterion
// FAILs by design rather than bending the target.
// --------------------------------------------------------------------------
#[test]
fn criterion_07_checkerboard_convergence_eps_32nd() {
    criterion(7, || {
        let mut fails = Vec::new();
        let arts = run_table(TableId::Table5, Some(&scratch("t5")), None).unwrap();
        assert_eq!(arts.len(), 3);
        check_orders(&arts, 1.8, 0.7, &mut fails);
        fails
    });
}

// --------------------------------------------------------------------------
// 8. Contrast robustness: over four decades of contrast the relative L2
//    error varies by less than 10x and stays below 5e-3.
// --------------------------------------------------------------------------
#[test]
fn criterion_08_contrast_robustness() {
    criterion(8, || {
        let mut fails = Vec::new();
        let arts = run_table(TableId::Table7, Some(&scratch("t7")), None).unwrap();
        assert_eq!(arts.len(), 4);
        let errs: Vec<f64> = arts.iter().map(|a| a.report.err_l2).collect();
        let (lo, hi) = errs.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
        if !(hi / lo < 10.0) {
            fails.push(format!("errors vary {:.1}x across the contrast sweep: {errs:?}", hi / lo));
        }
        if !(hi < 5e-3) {
            fails.push(format!("largest error {hi:.3e} >= 5e-3"));
        }
        fails
    });
}

// --------------------------------------------------------------------------
// 9. eps-robustness in 1D: with H and dt scaled like eps^(5/4), the error
//    against the refined reference never grows by more than 10x as eps
//    halves.
// --------------------------------------------------------------------------
#[test]
fn criterion_09_eps_robustness_under_scaled_refinement() {
    criterion(9, || {
        let mut fails = Vec::new();
        let arts = run_table(TableId::Table1, Some(&scratch("t1")), None).unwrap();
        assert_eq!(arts.len(), 3);
        let errs: Vec<f64> = arts.iter().map(|a| a.report.err_l2).collect();
        for (k, w) in errs.windows(2).enumerate() {
            if !(w[1] <= 10.0 * w[0]) {
                fails.push(format!(
                    "error grew {:.1}x when eps halved (step {k}): {errs:?}",
                    w[1] / w[0]
                ));
            }
        }
        fails
    });
}

// --------------------------------------------------------------------------
// 10. Determinism: rerunning a built-in sweep reproduces the CSV exactly,
//     wall-time column aside.
// --------------------------------------------------------------------------
#[test]
fn criterion_10_sweeps_are_deterministic() {
    criterion(10, || {
        let mut fails = Vec::new();
        let dirs = [scratch("det-a"), scratch("det-b")];
        for d in &dirs {
            run_table(TableId::Table2, Some(d), None).unwrap();
        }
        let strip = |path: PathBuf| -> Vec<String> {
            std::fs::read_to_string(path)
                .unwrap()
                .lines()
                .map(|l| {
                    let mut f: Vec<&str> = l.split(',').collect();
                    f.pop(); // wall seconds
                    f.join(",")
                })
                .collect()
        };
        let a = strip(dirs[0].join("table2.csv"));
        let b = strip(dirs[1].join("table2.csv"));
        if a != b {
            for (la, lb) in a.iter().zip(&b) {
                if la != lb {
                    fails.push(format!("CSV rows differ: {la} vs {lb}"));
                }
            }
            if a.len() != b.len() {
                fails.push(format!("row counts differ: {} vs {}", a.len(), b.len()));
            }
        }
        fails
    });
}
