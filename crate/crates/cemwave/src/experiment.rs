//! Config-driven experiment runner. A TOML config (or a built-in sweep)
//! resolves into a [`ResolvedPlan`] with every implicit choice made
//! explicit; the plan drives grid -> operators -> auxiliary space ->
//! multiscale space -> Crank-Nicolson evolution against a reference, and
//! the results land as CSV rows, optional field dumps, and a manifest.
//!
//! Reference trajectories are memoized per sweep: rows that share the same
//! fine problem (identical fine grid, potential, and step count) reuse one
//! CN-FEM solve, which is what makes the H-refinement sweeps affordable.

use std::collections::HashMap;
use std::fmt::Write as FmtWrite;
use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{relative_errors, ErrorReport};
use crate::assembly::{
    assemble_potential_mass, assemble_stiffness, assemble_unit_stiffness, assemble_weighted_mass,
    hamiltonian, l2_mass, AssembledOperator, WeightMode,
};
use crate::auxspace::{build_auxiliary_space, AuxiliarySpace};
use crate::cembasis::{build_multiscale_space, decay_study, default_oversampling, DecayStudy};
use crate::evolve::{
    elliptic_project, prolong, run_cn, sample_initial, write_field, CnStepper, EvolutionConfig,
    Space, WaveField,
};
use crate::grid::{build_grid, PeriodicGrid};
use crate::problems::{
    make_initial_data, make_potential, parse_cell_map, potential_from_cells, InitialData,
    InitialKind, Potential, PotentialKind,
};
use crate::{Error, Result};

/// Quadrature order used for every experiment-level assembly.
const QUAD_ORDER: usize = 3;

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub space: SpaceSection,
    pub time: TimeSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    /// smooth1d | twoscale1d | checkerboard2d | inclusions2d | constant | cells
    pub kind: String,
    pub eps: f64,
    #[serde(default)]
    pub delta1: Option<f64>,
    #[serde(default)]
    pub delta2: Option<f64>,
    #[serde(default)]
    pub upsilon: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub cells: Option<[usize; 2]>,
    #[serde(default)]
    pub fraction: Option<f64>,
    #[serde(default)]
    pub value: Option<f64>,
    /// Path to a plain-text cell map (kind = "cells").
    #[serde(default)]
    pub map: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Coarse elements per axis; length fixes the dimension for kinds that
    /// allow both.
    pub coarse: Vec<usize>,
    /// Fine cells per coarse element per axis.
    pub refine: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    /// Eigenfunctions kept per coarse element.
    pub modes: usize,
    #[serde(default = "Oversample::auto")]
    pub oversample: Oversample,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// same-grid | refined
    #[serde(default = "ReferenceSection::default_policy")]
    pub policy: String,
    #[serde(default = "ReferenceSection::default_factor")]
    pub space_factor: usize,
    #[serde(default = "ReferenceSection::default_factor")]
    pub time_factor: usize,
}

impl ReferenceSection {
    fn default_policy() -> String {
        "same-grid".into()
    }
    fn default_factor() -> usize {
        4
    }
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            policy: Self::default_policy(),
            space_factor: Self::default_factor(),
            time_factor: Self::default_factor(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// CSV file name (relative to the output directory).
    #[serde(default)]
    pub csv: Option<String>,
    /// Dump the multiscale solution every this many steps; 0 disables dumps.
    #[serde(default)]
    pub fields_every: usize,
}

/// Oversampling layers: an explicit count or the growth rule
/// ceil(2/3 * log2(domain-side / H)).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Oversample {
    Layers(usize),
    Rule(String),
}

impl Oversample {
    fn auto() -> Self {
        Oversample::Rule("auto".into())
    }

    fn resolve(&self, grid: &PeriodicGrid) -> Result<usize> {
        match self {
            Oversample::Layers(m) => Ok(*m),
            Oversample::Rule(s) if s == "auto" => Ok(default_oversampling(grid)),
            Oversample::Rule(s) => Err(Error::Config(format!(
                "oversample must be an integer or \"auto\", got \"{s}\""
            ))),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

// ---------------------------------------------------------------------------
// Plan resolution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefPolicy {
    SameGrid,
    Refined,
}

/// Fully resolved run: every value concrete, echoed verbatim into the
/// manifest and the dry-run listing.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedPlan {
    pub id: String,
    pub kind: String,
    pub dim: usize,
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub coarse: Vec<usize>,
    pub refine: usize,
    pub h_coarse: f64,
    pub h_fine: f64,
    pub modes: usize,
    pub oversample: usize,
    pub t_final: f64,
    /// Adjusted to divide t_final exactly.
    pub dt: f64,
    pub n_steps: usize,
    pub reference: RefPolicy,
    pub ref_space_factor: usize,
    pub ref_time_factor: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    pub fields_every: usize,
    pub warnings: Vec<String>,
}

fn kind_dim(kind: &str) -> Result<usize> {
    match kind {
        "smooth1d" | "twoscale1d" => Ok(1),
        "checkerboard2d" | "inclusions2d" | "cells" => Ok(2),
        // dimension comes from the grid section
        "constant" => Ok(0),
        other => Err(Error::Config(format!("unknown problem kind \"{other}\""))),
    }
}

fn domain_box(dim: usize) -> ([f64; 2], [f64; 2]) {
    // 1D problems live on [0,2], 2D on the unit square.
    if dim == 1 {
        ([0.0, 0.0], [2.0, 0.0])
    } else {
        ([0.0, 0.0], [1.0, 1.0])
    }
}

pub fn resolve_plan(id: &str, cfg: &ExperimentConfig) -> Result<ResolvedPlan> {
    let p = &cfg.problem;
    let declared = kind_dim(&p.kind)?;
    let dim = if declared == 0 { cfg.grid.coarse.len() } else { declared };
    if !(dim == 1 || dim == 2) {
        return Err(Error::Config(format!(
            "grid.coarse must list 1 or 2 axes, got {}",
            cfg.grid.coarse.len()
        )));
    }
    if cfg.grid.coarse.len() != dim {
        return Err(Error::Config(format!(
            "problem kind \"{}\" is {dim}D but grid.coarse lists {} axes",
            p.kind,
            cfg.grid.coarse.len()
        )));
    }
    if cfg.grid.refine == 0 {
        return Err(Error::Config("grid.refine must be at least 1".into()));
    }
    if cfg.space.modes == 0 {
        return Err(Error::Config("space.modes must be at least 1".into()));
    }
    match p.kind.as_str() {
        "twoscale1d" | "checkerboard2d" => {
            if p.delta1.is_none() || p.delta2.is_none() {
                return Err(Error::Config(format!(
                    "kind \"{}\" needs problem.delta1 and problem.delta2",
                    p.kind
                )));
            }
        }
        "inclusions2d" => {
            if p.upsilon.is_none() {
                return Err(Error::Config("inclusions2d needs problem.upsilon".into()));
            }
        }
        "cells" => {
            if p.map.is_none() {
                return Err(Error::Config("kind \"cells\" needs problem.map".into()));
            }
        }
        _ => {}
    }
    let reference = match cfg.reference.policy.as_str() {
        "same-grid" => RefPolicy::SameGrid,
        "refined" => RefPolicy::Refined,
        other => {
            return Err(Error::Config(format!(
                "reference.policy must be \"same-grid\" or \"refined\", got \"{other}\""
            )))
        }
    };
    if reference == RefPolicy::Refined && (cfg.reference.space_factor == 0 || cfg.reference.time_factor == 0)
    {
        return Err(Error::Config("refinement factors must be at least 1".into()));
    }

    let (lo, hi) = domain_box(dim);
    let refine = vec![cfg.grid.refine; dim];
    let grid = build_grid(dim, &lo[..dim], &hi[..dim], &cfg.grid.coarse, &refine)?;
    let oversample = cfg.space.oversample.resolve(&grid)?;
    let time = EvolutionConfig::new(cfg.time.dt, cfg.time.t_final, Space::Reduced)?;

    // Seed is always echoed for the seeded kind so the layout is reproducible
    // from any output file alone.
    let seed = match p.kind.as_str() {
        "inclusions2d" => Some(p.seed.unwrap_or(7)),
        _ => p.seed,
    };
    let cells = match p.kind.as_str() {
        "inclusions2d" => Some(p.cells.unwrap_or([20, 20])),
        _ => p.cells,
    };
    let fraction = match p.kind.as_str() {
        "inclusions2d" => Some(p.fraction.unwrap_or(0.25)),
        _ => p.fraction,
    };

    let mut plan = ResolvedPlan {
        id: id.to_string(),
        kind: p.kind.clone(),
        dim,
        eps: p.eps,
        delta1: p.delta1,
        delta2: p.delta2,
        upsilon: p.upsilon,
        seed,
        cells,
        fraction,
        value: p.value,
        map: p.map.clone(),
        domain_lo: lo[..dim].to_vec(),
        domain_hi: hi[..dim].to_vec(),
        coarse: cfg.grid.coarse.clone(),
        refine: cfg.grid.refine,
        h_coarse: grid.coarse_h_max(),
        h_fine: grid.fine_h_max(),
        modes: cfg.space.modes,
        oversample,
        t_final: cfg.time.t_final,
        dt: time.dt,
        n_steps: time.n_steps,
        reference,
        ref_space_factor: cfg.reference.space_factor,
        ref_time_factor: cfg.reference.time_factor,
        csv: cfg.output.csv.clone(),
        fields_every: cfg.output.fields_every,
        warnings: Vec::new(),
    };
    collect_warnings(&mut plan)?;
    Ok(plan)
}

/// Non-fatal setup checks: the run proceeds, the plan records what is
/// under-resolved.
fn collect_warnings(plan: &mut ResolvedPlan) -> Result<()> {
    let pot = potential_of(plan)?;
    let mut fine_scale = plan.eps;
    if let Some(d) = pot.delta {
        fine_scale = fine_scale.min(d);
    }
    if plan.h_fine > fine_scale / 4.0 + 1e-12 {
        plan.warnings.push(format!(
            "fine mesh h = {:.6} exceeds min(eps, delta)/4 = {:.6}; the wave/potential scale is under-resolved",
            plan.h_fine,
            fine_scale / 4.0
        ));
    }
    if plan.kind == "checkerboard2d" {
        // the jumps sit on the quadrant lines at 1/2; they must land on fine faces
        if plan.coarse.iter().any(|&nc| (nc * plan.refine) % 2 != 0) {
            plan.warnings.push(
                "quadrant interfaces at 1/2 fall inside fine elements on an odd fine grid".into(),
            );
        }
        for d in [plan.delta1.unwrap(), plan.delta2.unwrap()] {
            let ratio = d / plan.h_fine;
            if (ratio - ratio.round()).abs() > 1e-9 {
                plan.warnings.push(format!(
                    "oscillation period {d} is not an integer multiple of h = {:.6}; quadrature integrates misaligned periods",
                    plan.h_fine
                ));
            }
        }
    }
    if plan.kind == "inclusions2d" {
        let c = plan.cells.unwrap();
        let nx = plan.coarse[0] * plan.refine;
        let ny = plan.coarse[1] * plan.refine;
        if nx % c[0] != 0 || ny % c[1] != 0 {
            plan.warnings.push(format!(
                "inclusion lattice {}x{} does not align with the {nx}x{ny} fine grid",
                c[0], c[1]
            ));
        }
    }
    Ok(())
}

fn grid_of(plan: &ResolvedPlan) -> Result<PeriodicGrid> {
    let refine = vec![plan.refine; plan.dim];
    build_grid(
        plan.dim,
        &plan.domain_lo,
        &plan.domain_hi,
        &plan.coarse,
        &refine,
    )
}

fn potential_of(plan: &ResolvedPlan) -> Result<Potential> {
    match plan.kind.as_str() {
        "smooth1d" => make_potential(PotentialKind::Smooth1d),
        "twoscale1d" => make_potential(PotentialKind::TwoScale1d {
            delta1: plan.delta1.unwrap(),
            delta2: plan.delta2.unwrap(),
        }),
        "checkerboard2d" => make_potential(PotentialKind::Checkerboard2d {
            delta1: plan.delta1.unwrap(),
            delta2: plan.delta2.unwrap(),
        }),
        "inclusions2d" => make_potential(PotentialKind::Inclusions2d {
            upsilon: plan.upsilon.unwrap(),
            seed: plan.seed.unwrap(),
            cells: {
                let c = plan.cells.unwrap();
                (c[0], c[1])
            },
            fraction: plan.fraction.unwrap(),
        }),
        "constant" => make_potential(PotentialKind::Constant {
            value: plan.value.unwrap_or(1.0),
        }),
        "cells" => {
            let text = fs::read_to_string(plan.map.as_ref().unwrap())?;
            let lattice = parse_cell_map(&text)?;
            let lo = [plan.domain_lo[0], *plan.domain_lo.get(1).unwrap_or(&0.0)];
            let hi = [plan.domain_hi[0], *plan.domain_hi.get(1).unwrap_or(&0.0)];
            potential_from_cells(lattice, lo, hi)
        }
        other => Err(Error::Config(format!("unknown problem kind \"{other}\""))),
    }
}

fn initial_of(plan: &ResolvedPlan) -> Result<InitialData> {
    let kind = if plan.dim == 1 {
        InitialKind::Wkb1d
    } else {
        InitialKind::Gaussian2d
    };
    make_initial_data(kind, plan.eps)
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// One completed run: the plan that produced it, the measured errors, and
/// convergence orders against the previous sweep row where defined.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub plan: ResolvedPlan,
    pub report: ErrorReport,
    pub order_l2: Option<f64>,
    pub order_h1: Option<f64>,
    pub wall_seconds: f64,
}

struct FineSetup {
    grid: PeriodicGrid,
    a: AssembledOperator,
    mass: AssembledOperator,
    unit_k: AssembledOperator,
}

fn build_fine_setup(grid: PeriodicGrid, eps: f64, pot: &Potential) -> Result<FineSetup> {
    let k = assemble_stiffness(&grid, eps)?;
    let p = pot.clone();
    let v = assemble_potential_mass(&grid, move |x| p.eval(x), QUAD_ORDER)?;
    let a = hamiltonian(&k, &v)?;
    let mass = l2_mass(&grid)?;
    let unit_k = assemble_unit_stiffness(&grid)?;
    Ok(FineSetup {
        grid,
        a,
        mass,
        unit_k,
    })
}

/// Sample of the refined solution at the shared (nested) nodes.
fn restrict_nested(
    base: &PeriodicGrid,
    refined: &PeriodicGrid,
    factor: usize,
    u: &WaveField,
) -> WaveField {
    let data = (0..base.n_dofs())
        .map(|p| {
            let c = base.dof_coords(p);
            u.data[refined.dof_index(c[0] * factor, c[1] * factor)]
        })
        .collect();
    WaveField {
        data,
        t: u.t,
        eps: u.eps,
        space: Space::Fine,
    }
}

/// Rows sharing a fine problem reuse the reference trajectory; the key
/// covers everything the reference depends on.
fn reference_key(plan: &ResolvedPlan) -> String {
    let mut k = String::new();
    let _ = write!(
        k,
        "{}|{:x}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}",
        plan.kind,
        plan.eps.to_bits(),
        plan.delta1.map(f64::to_bits),
        plan.delta2.map(f64::to_bits),
        plan.upsilon.map(f64::to_bits),
        plan.seed,
        plan.cells,
        plan.map
    );
    let _ = write!(
        k,
        "|{:?}|{}|{:x}|{:?}|{}|{}",
        plan.coarse.iter().zip([plan.refine, plan.refine]).map(|(c, r)| c * r).collect::<Vec<_>>(),
        plan.n_steps,
        plan.dt.to_bits(),
        plan.reference,
        plan.ref_space_factor,
        plan.ref_time_factor
    );
    k
}

fn compute_reference(
    plan: &ResolvedPlan,
    setup: &FineSetup,
    pot: &Potential,
    init: &InitialData,
) -> Result<WaveField> {
    match plan.reference {
        RefPolicy::SameGrid => {
            let cfg = EvolutionConfig::new(plan.dt, plan.t_final, Space::Fine)?;
            let st = CnStepper::new_fine(&setup.mass, &setup.a, plan.eps, cfg.dt)?;
            let u0 = sample_initial(&setup.grid, init);
            let traj = run_cn(&cfg, &st, u0)?;
            Ok(traj.final_field().clone())
        }
        RefPolicy::Refined => {
            let sf = plan.ref_space_factor;
            let refine = vec![plan.refine * sf; plan.dim];
            let rgrid = build_grid(
                plan.dim,
                &plan.domain_lo,
                &plan.domain_hi,
                &plan.coarse,
                &refine,
            )?;
            let k = assemble_stiffness(&rgrid, plan.eps)?;
            let pc = pot.clone();
            let v = assemble_potential_mass(&rgrid, move |x| pc.eval(x), QUAD_ORDER)?;
            let a = hamiltonian(&k, &v)?;
            let mass = l2_mass(&rgrid)?;
            let cfg = EvolutionConfig::new(
                plan.dt / plan.ref_time_factor as f64,
                plan.t_final,
                Space::Fine,
            )?;
            let st = CnStepper::new_fine(&mass, &a, plan.eps, cfg.dt)?;
            let u0 = sample_initial(&rgrid, init);
            let traj = run_cn(&cfg, &st, u0)?;
            Ok(restrict_nested(&setup.grid, &rgrid, sf, traj.final_field()))
        }
    }
}

fn stage<T>(r: Result<T>, plan: &ResolvedPlan, what: &str) -> Result<T> {
    r.map_err(|e| {
        Error::Config(format!(
            "run \"{}\" failed at {what} (kind={}, coarse={:?}, refine={}, m={}, l={}): {e}",
            plan.id, plan.kind, plan.coarse, plan.refine, plan.oversample, plan.modes
        ))
    })
}

fn run_cell(
    plan: &ResolvedPlan,
    ref_cache: &mut HashMap<String, WaveField>,
    out_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    let t0 = Instant::now();
    let grid = stage(grid_of(plan), plan, "grid construction")?;
    let pot = stage(potential_of(plan), plan, "potential construction")?;
    let init = stage(initial_of(plan), plan, "initial data")?;
    let setup = stage(build_fine_setup(grid, plan.eps, &pot), plan, "assembly")?;
    let s_op = stage(
        assemble_weighted_mass(&setup.grid, WeightMode::Constant, plan.eps),
        plan,
        "assembly",
    )?;
    let aux = stage(
        build_auxiliary_space(&setup.grid, &setup.a, &s_op, plan.modes),
        plan,
        "auxiliary space",
    )?;
    let ms = stage(
        build_multiscale_space(&setup.grid, &setup.a, &s_op, &setup.mass, &aux, plan.oversample),
        plan,
        "multiscale basis",
    )?;

    let u0 = sample_initial(&setup.grid, &init);
    let cfg = EvolutionConfig::new(plan.dt, plan.t_final, Space::Reduced)?
        .with_snapshots(plan.fields_every);
    let st = stage(
        CnStepper::new_reduced(&ms, plan.eps, cfg.dt),
        plan,
        "reduced factorization",
    )?;
    let red0 = stage(elliptic_project(&u0, &ms, &setup.a), plan, "projection")?;
    let traj = stage(run_cn(&cfg, &st, red0), plan, "time stepping")?;
    let u_cem = stage(prolong(&ms, traj.final_field()), plan, "prolongation")?;

    let key = reference_key(plan);
    if !ref_cache.contains_key(&key) {
        let r = stage(
            compute_reference(plan, &setup, &pot, &init),
            plan,
            "reference solve",
        )?;
        ref_cache.insert(key.clone(), r);
    }
    let u_ref = &ref_cache[&key];

    let mut report = stage(
        relative_errors(&u_cem, u_ref, &setup.mass, &setup.unit_k, &setup.a),
        plan,
        "error evaluation",
    )?;
    report.h_coarse = plan.h_coarse;
    report.h_fine = plan.h_fine;
    report.m = plan.oversample;
    report.l = plan.modes;
    report.eps = plan.eps;
    report.delta = pot.delta;
    report.upsilon = pot.upsilon;
    report.dt = plan.dt;

    if plan.fields_every > 0 {
        if let Some(dir) = out_dir {
            for (k, snap) in traj.snapshots.iter().enumerate() {
                let lifted = stage(prolong(&ms, snap), plan, "field dump")?;
                let path = dir.join(format!("{}-{k:04}.field", plan.id));
                let mut f = fs::File::create(path)?;
                write_field(&mut f, &setup.grid, &lifted)?;
            }
            let path = dir.join(format!("{}-ref.field", plan.id));
            let mut f = fs::File::create(path)?;
            write_field(&mut f, &setup.grid, u_ref)?;
        }
    }

    Ok(RunArtifacts {
        plan: plan.clone(),
        report,
        order_l2: None,
        order_h1: None,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Run a single config. Writes the CSV (and any field dumps) under
/// `out_dir` when given.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    id: &str,
    out_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    let plan = resolve_plan(id, cfg)?;
    let mut cache = HashMap::new();
    let art = run_cell(&plan, &mut cache, out_dir)?;
    if let Some(dir) = out_dir {
        let name = plan.csv.clone().unwrap_or_else(|| format!("{id}.csv"));
        write_csv_file(&dir.join(name), std::slice::from_ref(&art))?;
    }
    Ok(art)
}

// ---------------------------------------------------------------------------
// Built-in sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    /// 1D smooth potential, eps sweep with coupled H and dt scalings.
    Table1,
    /// 1D two-scale potential, eps sweep at fixed coarse grid.
    Table2,
    /// 2D checkerboard H-refinement at eps = 1/8.
    Table4,
    /// 2D checkerboard H-refinement at eps = 1/32.
    Table5,
    /// 2D checkerboard fine-scale sweep at fixed H.
    Table6,
    /// 2D random inclusions, contrast sweep.
    Table7,
}

impl TableId {
    pub const ALL: [TableId; 6] = [
        TableId::Table1,
        TableId::Table2,
        TableId::Table4,
        TableId::Table5,
        TableId::Table6,
        TableId::Table7,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TableId::Table1 => "table1",
            TableId::Table2 => "table2",
            TableId::Table4 => "table4",
            TableId::Table5 => "table5",
            TableId::Table6 => "table6",
            TableId::Table7 => "table7",
        }
    }
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<TableId> {
        TableId::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown sweep \"{s}\"; built-ins: {}",
                    TableId::ALL.map(|t| t.name()).join(", ")
                ))
            })
    }
}

fn base_2d_config(kind: &str, eps: f64, nc: usize, refine: usize, m: usize) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSection {
            kind: kind.into(),
            eps,
            delta1: None,
            delta2: None,
            upsilon: None,
            seed: None,
            cells: None,
            fraction: None,
            value: None,
            map: None,
        },
        grid: GridSection {
            coarse: vec![nc, nc],
            refine,
        },
        space: SpaceSection {
            modes: 3,
            oversample: Oversample::Layers(m),
        },
        time: TimeSection {
            t_final: 1.0,
            dt: 1.0 / 32.0,
        },
        reference: ReferenceSection::default(),
        output: OutputSection::default(),
    }
}

fn base_1d_config(kind: &str, eps: f64, nc: usize, refine: usize, dt: f64) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSection {
            kind: kind.into(),
            eps,
            delta1: None,
            delta2: None,
            upsilon: None,
            seed: None,
            cells: None,
            fraction: None,
            value: None,
            map: None,
        },
        grid: GridSection {
            coarse: vec![nc],
            refine,
        },
        space: SpaceSection {
            modes: 3,
            oversample: Oversample::auto(),
        },
        time: TimeSection { t_final: 0.1, dt },
        reference: ReferenceSection {
            policy: "refined".into(),
            space_factor: 4,
            time_factor: 4,
        },
        output: OutputSection::default(),
    }
}

/// The cells of a built-in sweep in output order.
pub fn table_cells(table: TableId) -> Vec<(String, ExperimentConfig)> {
    // 1D eps sweeps anchor to (eps, H, dt) = (1/32, 1/64, 1e-2) on [0,2] and
    // scale both H and dt like eps^(5/4) so the error bound's driving terms
    // stay fixed as eps shrinks.
    let dt_of = |eps: f64| 1e-2 * (32.0 * eps).powf(1.25);
    match table {
        TableId::Table1 => [(32.0, 128, 4), (64.0, 304, 4), (128.0, 724, 4)]
            .iter()
            .map(|&(den, nc, r)| {
                let eps = 1.0 / den;
                let cfg = base_1d_config("smooth1d", eps, nc, r, dt_of(eps));
                (format!("table1-e{den}"), cfg)
            })
            .collect(),
        TableId::Table2 => [32.0, 64.0, 128.0]
            .iter()
            .map(|&den| {
                let eps = 1.0 / den;
                let mut cfg = base_1d_config("twoscale1d", eps, 128, 8, dt_of(eps));
                cfg.problem.delta1 = Some(0.25);
                cfg.problem.delta2 = Some(0.1);
                (format!("table2-e{den}"), cfg)
            })
            .collect(),
        TableId::Table4 | TableId::Table5 => {
            let eps = if table == TableId::Table4 { 0.125 } else { 1.0 / 32.0 };
            [(10usize, 20usize, 2usize), (20, 10, 3), (40, 5, 4)]
                .iter()
                .map(|&(nc, r, m)| {
                    let mut cfg = base_2d_config("checkerboard2d", eps, nc, r, m);
                    cfg.problem.delta1 = Some(0.125);
                    cfg.problem.delta2 = Some(1.0 / 16.0);
                    (format!("{}-h{nc}", table.name()), cfg)
                })
                .collect()
        }
        TableId::Table6 => [8.0, 16.0, 32.0]
            .iter()
            .map(|&den| {
                let mut cfg = base_2d_config("checkerboard2d", 1.0 / 16.0, 40, 5, 4);
                cfg.problem.delta1 = Some(0.125);
                cfg.problem.delta2 = Some(1.0 / den);
                (format!("table6-d{den}"), cfg)
            })
            .collect(),
        TableId::Table7 => [1e1, 1e2, 1e3, 1e4]
            .iter()
            .enumerate()
            .map(|(k, &ups)| {
                let mut cfg = base_2d_config("inclusions2d", 0.125, 40, 5, 4);
                cfg.problem.upsilon = Some(ups);
                (format!("table7-u1e{}", k + 1), cfg)
            })
            .collect(),
    }
}

fn pair_order(h0: f64, e0: f64, h1: f64, e1: f64) -> Option<f64> {
    let ok = h1 < h0 && e0.is_finite() && e1.is_finite() && e0 > 0.0 && e1 > 0.0 && e1 < e0;
    ok.then(|| (e0 / e1).ln() / (h0 / h1).ln())
}

/// Run every cell of a built-in sweep in order, sharing reference solves,
/// and write `<name>.csv` under `out_dir` when given. `seed` overrides the
/// inclusion layout seed.
pub fn run_table(
    table: TableId,
    out_dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<Vec<RunArtifacts>> {
    let plans = table_plans(table, seed)?;
    let mut cache = HashMap::new();
    let mut arts = Vec::with_capacity(plans.len());
    for plan in &plans {
        arts.push(run_cell(plan, &mut cache, out_dir)?);
    }
    for k in 1..arts.len() {
        let prev = arts[k - 1].report.clone();
        let cur = &mut arts[k];
        cur.order_l2 = pair_order(prev.h_coarse, prev.err_l2, cur.report.h_coarse, cur.report.err_l2);
        cur.order_h1 = pair_order(prev.h_coarse, prev.err_h1, cur.report.h_coarse, cur.report.err_h1);
    }
    if let Some(dir) = out_dir {
        write_csv_file(&dir.join(format!("{}.csv", table.name())), &arts)?;
    }
    Ok(arts)
}

/// Resolved plans for a sweep, in output order.
pub fn table_plans(table: TableId, seed: Option<u64>) -> Result<Vec<ResolvedPlan>> {
    table_cells(table)
        .into_iter()
        .map(|(id, mut cfg)| {
            if let Some(s) = seed {
                cfg.problem.seed = Some(s);
            }
            resolve_plan(&id, &cfg)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn opt_order(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

/// CSV schema: parameters first, then measurements. All floats use fixed
/// formats so repeated runs are byte-identical except the wall column.
pub fn write_csv<W: IoWrite>(w: W, rows: &[RunArtifacts]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let to_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
    wtr.write_record([
        "experiment", "eps", "delta", "upsilon", "H", "h", "m", "l", "dt", "err_l2", "err_h1",
        "err_a", "order_l2", "order_h1", "wall_s",
    ])
    .map_err(to_err)?;
    for r in rows {
        let rep = &r.report;
        wtr.write_record([
            r.plan.id.clone(),
            format!("{}", rep.eps),
            opt_num(rep.delta),
            opt_num(rep.upsilon),
            format!("{}", rep.h_coarse),
            format!("{}", rep.h_fine),
            format!("{}", rep.m),
            format!("{}", rep.l),
            format!("{}", rep.dt),
            format!("{:.6e}", rep.err_l2),
            format!("{:.6e}", rep.err_h1),
            format!("{:.6e}", rep.err_a),
            opt_order(r.order_l2),
            opt_order(r.order_h1),
            format!("{:.2}", r.wall_seconds),
        ])
        .map_err(to_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, rows: &[RunArtifacts]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let f = fs::File::create(path)?;
    write_csv(f, rows)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    invocation: String,
    run: &'a [ResolvedPlan],
}

/// Resolved-parameter record for one invocation; written next to the CSVs.
pub fn write_manifest(out_dir: &Path, invocation: &str, plans: &[ResolvedPlan]) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let m = Manifest {
        tool: "cemwave",
        version: env!("CARGO_PKG_VERSION"),
        invocation: invocation.to_string(),
        run: plans,
    };
    let text = toml::to_string(&m).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    let path = out_dir.join("manifest.toml");
    fs::write(&path, text)?;
    Ok(path)
}

/// Dry-run listing: the resolved plans as TOML, one `[[run]]` block each.
pub fn render_plans(plans: &[ResolvedPlan]) -> Result<String> {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        run: &'a [ResolvedPlan],
    }
    toml::to_string(&Wrapper { run: plans }).map_err(|e| Error::Config(format!("plan echo: {e}")))
}

// ---------------------------------------------------------------------------
// Auxiliary entry points (decay / spectra / potential dumps)
// ---------------------------------------------------------------------------

/// Localization error sweep for basis (j, i); writes `<id>-decay.csv` when
/// an output directory is given.
pub fn run_decay(
    cfg: &ExperimentConfig,
    id: &str,
    j: usize,
    i: usize,
    m_list: &[usize],
    out_dir: Option<&Path>,
) -> Result<DecayStudy> {
    let plan = resolve_plan(id, cfg)?;
    let grid = stage(grid_of(&plan), &plan, "grid construction")?;
    let pot = stage(potential_of(&plan), &plan, "potential construction")?;
    let setup = stage(build_fine_setup(grid, plan.eps, &pot), &plan, "assembly")?;
    let s_op = stage(
        assemble_weighted_mass(&setup.grid, WeightMode::Constant, plan.eps),
        &plan,
        "assembly",
    )?;
    let aux = stage(
        build_auxiliary_space(&setup.grid, &setup.a, &s_op, plan.modes),
        &plan,
        "auxiliary space",
    )?;
    let study = stage(
        decay_study(&setup.grid, &setup.a, &s_op, &aux, j, i, m_list),
        &plan,
        "decay study",
    )?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let f = fs::File::create(dir.join(format!("{id}-decay.csv")))?;
        let mut wtr = csv::Writer::from_writer(f);
        let to_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
        wtr.write_record(["experiment", "element", "mode", "m", "err_a", "theta_hat"])
            .map_err(to_err)?;
        for (m, err) in &study.rows {
            wtr.write_record([
                id.to_string(),
                format!("{}", study.j),
                format!("{}", study.i),
                format!("{m}"),
                format!("{err:.6e}"),
                opt_order(study.theta_hat),
            ])
            .map_err(to_err)?;
        }
        wtr.flush()?;
    }
    Ok(study)
}

/// Local spectra dump: every retained eigenvalue plus the first discarded
/// one per element, and the global spectral gap Lambda.
pub fn run_spectra(
    cfg: &ExperimentConfig,
    id: &str,
    out_dir: Option<&Path>,
) -> Result<AuxiliarySpace> {
    let plan = resolve_plan(id, cfg)?;
    let grid = stage(grid_of(&plan), &plan, "grid construction")?;
    let pot = stage(potential_of(&plan), &plan, "potential construction")?;
    let setup = stage(build_fine_setup(grid, plan.eps, &pot), &plan, "assembly")?;
    let s_op = stage(
        assemble_weighted_mass(&setup.grid, WeightMode::Constant, plan.eps),
        &plan,
        "assembly",
    )?;
    let aux = stage(
        build_auxiliary_space(&setup.grid, &setup.a, &s_op, plan.modes),
        &plan,
        "auxiliary space",
    )?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let f = fs::File::create(dir.join(format!("{id}-spectra.csv")))?;
        let mut wtr = csv::Writer::from_writer(f);
        let to_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
        wtr.write_record(["experiment", "element", "mode", "lambda"])
            .map_err(to_err)?;
        for set in &aux.sets {
            for (i, lam) in set.lambdas.iter().enumerate() {
                wtr.write_record([
                    id.to_string(),
                    format!("{}", set.j),
                    format!("{i}"),
                    format!("{lam:.12e}"),
                ])
                .map_err(to_err)?;
            }
        }
        wtr.flush()?;
    }
    Ok(aux)
}

/// Sample the potential at fine-element centers and write one value per
/// line after a `dim nx [ny]` header (exact for the piecewise kinds).
pub fn dump_potential(cfg: &ExperimentConfig, id: &str, out_dir: &Path) -> Result<PathBuf> {
    let plan = resolve_plan(id, cfg)?;
    let grid = stage(grid_of(&plan), &plan, "grid construction")?;
    let pot = stage(potential_of(&plan), &plan, "potential construction")?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{id}-potential.dat"));
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    if plan.dim == 1 {
        writeln!(f, "1 {}", grid.nf_axis(0))?;
    } else {
        writeln!(f, "2 {} {}", grid.nf_axis(0), grid.nf_axis(1))?;
    }
    for e in 0..grid.n_fine_elems() {
        let o = grid.fine_elem_origin(e);
        let c = [
            o[0] + 0.5 * grid.fine_h(0),
            if plan.dim == 2 { o[1] + 0.5 * grid.fine_h(1) } else { 0.0 },
        ];
        writeln!(f, "{:.17e}", pot.eval(c))?;
    }
    f.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("cemwave-{tag}-{}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d
    }

    fn tiny_config() -> ExperimentConfig {
        parse_config(
            r#"
            [problem]
            kind = "constant"
            eps = 0.5
            value = 1.0

            [grid]
            coarse = [6]
            refine = 2

            [space]
            modes = 1
            oversample = 1

            [time]
            t_final = 0.02
            dt = 0.01
        "#,
        )
        .unwrap()
    }

    #[test]
    fn parse_applies_defaults_and_rejects_unknown_keys() {
        let cfg = tiny_config();
        assert_eq!(cfg.reference.policy, "same-grid");
        assert_eq!(cfg.reference.space_factor, 4);
        assert_eq!(cfg.output.fields_every, 0);
        assert!(cfg.output.csv.is_none());
        assert!(matches!(cfg.space.oversample, Oversample::Layers(1)));

        let bad = parse_config("[problem]\nkind = \"constant\"\neps = 0.5\ntypo = 1\n");
        assert!(bad.is_err());
        let bad_rule = parse_config(
            "[problem]\nkind = \"constant\"\neps = 0.5\n[grid]\ncoarse = [4]\nrefine = 2\n[space]\nmodes = 1\noversample = \"fast\"\n[time]\nt_final = 0.1\ndt = 0.1\n",
        )
        .and_then(|c| resolve_plan("x", &c));
        assert!(bad_rule.is_err());
    }

    #[test]
    fn plan_resolves_oversampling_rule_and_time_step() {
        let mut cfg = tiny_config();
        cfg.space.oversample = Oversample::auto();
        cfg.grid.coarse = vec![20];
        cfg.grid.refine = 4;
        cfg.time.dt = 0.03;
        cfg.time.t_final = 0.1;
        let plan = resolve_plan("t", &cfg).unwrap();
        // ceil(2/3 * log2 20) = 3; dt snaps to 0.1/3
        assert_eq!(plan.oversample, 3);
        assert_eq!(plan.n_steps, 3);
        assert!((plan.dt - 0.1 / 3.0).abs() < 1e-15);
        assert_eq!(plan.h_coarse, 0.1);
        assert_eq!(plan.h_fine, 0.025);
    }

    #[test]
    fn under_resolved_plans_carry_a_warning() {
        let mut cfg = tiny_config();
        cfg.problem.eps = 0.01; // h = 1/6 >> eps/4
        let plan = resolve_plan("w", &cfg).unwrap();
        assert!(plan.warnings.iter().any(|w| w.contains("under-resolved")));

        let mut ok = tiny_config();
        ok.grid.refine = 4; // h = 1/12 < eps/4
        let fine = resolve_plan("ok", &ok).unwrap();
        assert!(fine.warnings.is_empty(), "{:?}", fine.warnings);
    }

    #[test]
    fn builtin_sweeps_enumerate_expected_cells() {
        use std::str::FromStr;
        for t in TableId::ALL {
            assert_eq!(TableId::from_str(t.name()).unwrap(), t);
        }
        assert!(TableId::from_str("table3").is_err());

        let t4 = table_cells(TableId::Table4);
        assert_eq!(t4.len(), 3);
        let (id0, c0) = &t4[0];
        assert_eq!(id0, "table4-h10");
        assert_eq!(c0.grid.coarse, vec![10, 10]);
        assert_eq!(c0.grid.refine, 20);
        assert_eq!(c0.problem.eps, 0.125);
        // every cell keeps the fine grid at 200 cells per axis
        assert!(t4.iter().all(|(_, c)| c.grid.coarse[0] * c.grid.refine == 200));

        let t1 = table_plans(TableId::Table1, None).unwrap();
        assert_eq!(t1.len(), 3);
        // anchored dt scaling: dt(eps/2) = dt(eps) / 2^(5/4), up to the
        // snap-to-T adjustment
        let ratio = t1[0].dt / t1[1].dt;
        assert!((ratio / 2f64.powf(1.25) - 1.0).abs() < 0.05, "{ratio}");
        assert!(t1.iter().all(|p| p.reference == RefPolicy::Refined));

        let t7 = table_plans(TableId::Table7, None).unwrap();
        assert_eq!(t7.len(), 4);
        assert_eq!(t7[3].upsilon, Some(1e4));
        assert!(t7.iter().all(|p| p.seed == Some(7) && p.oversample == 4));
        let seeded = table_plans(TableId::Table7, Some(11)).unwrap();
        assert!(seeded.iter().all(|p| p.seed == Some(11)));
    }

    #[test]
    fn csv_rows_are_reproducible_and_fully_parameterized() {
        let plan = resolve_plan("unit", &tiny_config()).unwrap();
        let report = ErrorReport {
            err_l2: 1.234567e-3,
            err_h1: 2.5e-2,
            err_a: 3.0e-2,
            h_coarse: 1.0 / 3.0,
            h_fine: 1.0 / 6.0,
            m: 1,
            l: 1,
            eps: 0.5,
            delta: None,
            upsilon: Some(10.0),
            dt: 0.01,
        };
        let art = RunArtifacts {
            plan,
            report,
            order_l2: Some(2.0),
            order_h1: None,
            wall_seconds: 0.5,
        };
        let mut a = Vec::new();
        write_csv(&mut a, std::slice::from_ref(&art)).unwrap();
        let mut b = Vec::new();
        write_csv(&mut b, std::slice::from_ref(&art)).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,eps,delta,upsilon,H,h,m,l,dt,err_l2,err_h1,err_a,order_l2,order_h1,wall_s"
        );
        let row = lines.next().unwrap();
        assert_eq!(
            row,
            format!(
                "unit,0.5,,10,{},{},1,1,0.01,1.234567e-3,2.500000e-2,3.000000e-2,2.000,,0.50",
                1.0 / 3.0,
                1.0 / 6.0
            )
        );
    }

    #[test]
    fn order_pairs_require_decreasing_error_on_a_refined_grid() {
        assert!(pair_order(0.1, 1e-2, 0.05, 2.5e-3).unwrap() - 2.0 < 1e-12);
        assert!(pair_order(0.1, 1e-2, 0.05, 2e-2).is_none()); // error grew
        assert!(pair_order(0.1, 1e-2, 0.1, 5e-3).is_none()); // H unchanged
    }

    #[test]
    fn tiny_run_emits_report_csv_manifest_and_dumps() {
        let dir = tmp_dir("run");
        let mut cfg = tiny_config();
        cfg.output.fields_every = 1;
        cfg.output.csv = Some("tiny.csv".into());
        let art = run_experiment(&cfg, "tiny", Some(&dir)).unwrap();
        assert!(art.report.err_l2.is_finite() && art.report.err_l2 >= 0.0);
        assert_eq!(art.report.l, 1);
        assert_eq!(art.report.m, 1);
        assert!(art.wall_seconds >= 0.0);
        assert!(dir.join("tiny.csv").is_file());
        // 2 steps + initial snapshot + reference dump
        assert!(dir.join("tiny-0000.field").is_file());
        assert!(dir.join("tiny-0002.field").is_file());
        assert!(dir.join("tiny-ref.field").is_file());

        let manifest = write_manifest(&dir, "test", std::slice::from_ref(&art.plan)).unwrap();
        let text = fs::read_to_string(manifest).unwrap();
        assert!(text.contains("[[run]]"));
        assert!(text.contains("kind = \"constant\""));
        let echoed = render_plans(std::slice::from_ref(&art.plan)).unwrap();
        assert!(echoed.contains("oversample = 1"));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn refined_reference_with_unit_factors_matches_same_grid() {
        let mut same = tiny_config();
        same.problem.kind = "smooth1d".into();
        same.problem.value = None;
        let mut refined = same.clone();
        refined.reference = ReferenceSection {
            policy: "refined".into(),
            space_factor: 1,
            time_factor: 1,
        };
        let a = run_experiment(&same, "a", None).unwrap();
        let b = run_experiment(&refined, "b", None).unwrap();
        // identical grid and step count: the nested restriction is the
        // identity, so both policies see the same reference bits
        assert_eq!(a.report.err_l2, b.report.err_l2);
        assert_eq!(a.report.err_h1, b.report.err_h1);
        assert_eq!(a.report.err_a, b.report.err_a);
    }

    #[test]
    fn spectra_and_potential_dumps_have_expected_shape() {
        let dir = tmp_dir("dumps");
        let cfg = tiny_config();
        let aux = run_spectra(&cfg, "s", Some(&dir)).unwrap();
        let text = fs::read_to_string(dir.join("s-spectra.csv")).unwrap();
        // header + (modes + 1) rows per element
        assert_eq!(text.lines().count(), 1 + aux.sets.len() * 2);
        assert!(aux.lambda > 0.0);

        let path = dump_potential(&cfg, "s", &dir).unwrap();
        let dump = fs::read_to_string(path).unwrap();
        let mut lines = dump.lines();
        assert_eq!(lines.next().unwrap(), "1 12");
        assert_eq!(lines.count(), 12);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn decay_rows_written_per_oversampling_width() {
        let dir = tmp_dir("decay");
        let mut cfg = tiny_config();
        cfg.grid.coarse = vec![8];
        cfg.grid.refine = 4;
        let study = run_decay(&cfg, "d", 0, 0, &[1, 2, 4], Some(&dir)).unwrap();
        assert_eq!(study.rows.len(), 3);
        assert!(study.rows[2].1 <= study.rows[0].1);
        let text = fs::read_to_string(dir.join("d-decay.csv")).unwrap();
        assert_eq!(text.lines().count(), 4);
        fs::remove_dir_all(&dir).ok();
    }
}
