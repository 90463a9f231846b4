//! Multiscale solver for the periodic semiclassical Schrodinger equation
//! `i eps du/dt = -1/2 eps^2 Lap(u) + V(x) u` on a box with periodic
//! boundary conditions.
//!
//! The coarse space is built per coarse element from a local generalized
//! eigenproblem, then extended to constraint-energy-minimizing basis
//! functions on oversampled patches. Time stepping is Crank-Nicolson, either
//! in the reduced multiscale space or on the fine grid (reference scheme).
//!
//! Pipeline: [`grid`] -> [`assembly`] -> [`auxspace`] -> [`cembasis`] ->
//! [`evolve`] -> [`analysis`], with [`problems`] supplying potentials and
//! initial data and [`experiment`] orchestrating config-driven runs.

pub mod analysis;
pub mod assembly;
pub mod auxspace;
pub mod cembasis;
pub mod evolve;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod problems;

pub use analysis::{convergence_order, energy_density, position_density, relative_errors, ErrorReport};
pub use assembly::{
    assemble_potential_mass, assemble_stiffness, assemble_unit_stiffness, assemble_weighted_mass,
    hamiltonian, l2_mass, restrict, AssembledOperator, BoundaryCondition, OperatorKind, WeightMode,
};
pub use auxspace::{
    build_auxiliary_space, build_projection, compute_lambda, solve_local_eigenproblem,
    AuxiliarySpace, BrokenField, LocalEigenSet, Projection,
};
pub use cembasis::{
    build_multiscale_space, decay_study, solve_cem_basis, solve_global_basis, DecayStudy,
    MultiscaleSpace,
};
pub use evolve::{
    elliptic_project, prolong, read_field, run_cn, sample_initial, write_field, CnStepper,
    EvolutionConfig, Space, Trajectory, WaveField,
};
pub use experiment::{
    load_config, parse_config, resolve_plan, run_decay, run_experiment, run_spectra, run_table,
    table_cells, table_plans, write_manifest, ExperimentConfig, ResolvedPlan, RunArtifacts,
    TableId,
};
pub use grid::{build_grid, extract_patch, Patch, PeriodicGrid};
pub use problems::{make_initial_data, make_potential, InitialData, InitialKind, Potential, PotentialKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("eigensolve failed on element {element}: {reason}")]
    EigenSolve { element: usize, reason: String },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("basis solve failed for element {element}, mode {mode}: {reason}")]
    BasisSolve {
        element: usize,
        mode: usize,
        reason: String,
    },
    #[error("invalid problem parameters: {0}")]
    Problem(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mismatched spaces or grids: {0}")]
    Mismatch(String),
    #[error("time stepping failed at step {step}: {reason}")]
    Evolve { step: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
