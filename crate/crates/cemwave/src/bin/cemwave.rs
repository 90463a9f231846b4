//! Experiment CLI: one-shot solves from TOML configs, built-in sweeps,
//! and diagnostic dumps (basis decay, local spectra, potential samples).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cemwave::experiment::{
    dump_potential, load_config, render_plans, resolve_plan, run_decay, run_experiment,
    run_spectra, run_table, table_plans, write_manifest, ExperimentConfig, RunArtifacts, TableId,
};
use cemwave::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cemwave",
    version,
    about = "Multiscale Crank-Nicolson solver for the periodic semiclassical Schrodinger equation"
)]
struct Cli {
    /// Directory for CSV files, field dumps, and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Cap the worker thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved plan(s) as TOML and exit without solving.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment described by a TOML config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the seed of seeded potential layouts.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in sweep (table1 | table2 | table4 | table5 | table6 | table7).
    Table {
        #[arg(long = "table")]
        table: String,
        /// Override the seed of seeded potential layouts.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Localization error of one basis function over oversampling widths.
    Decay {
        #[arg(long)]
        config: PathBuf,
        /// Coarse element owning the basis function.
        #[arg(long, default_value_t = 0)]
        element: usize,
        /// Eigenmode index within that element.
        #[arg(long, default_value_t = 0)]
        mode: usize,
        /// Comma-separated oversampling widths to test.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        m_list: Vec<usize>,
    },
    /// Dump every local eigenvalue (retained plus first discarded) per element.
    Spectra {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample the potential at fine-element centers.
    DumpPotential {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn config_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn load_with_seed(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seed {
        cfg.problem.seed = Some(s);
    }
    Ok(cfg)
}

fn report_rows(arts: &[RunArtifacts]) {
    for a in arts {
        for w in &a.plan.warnings {
            eprintln!("warning [{}]: {w}", a.plan.id);
        }
        println!(
            "{}: err_l2 = {:.6e}  err_h1 = {:.6e}  err_a = {:.6e}  ({:.1}s)",
            a.plan.id, a.report.err_l2, a.report.err_h1, a.report.err_a, a.wall_seconds
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = cli.out.as_path();
    // Field dumps and CSVs are written as they are produced, before the
    // manifest; make sure the directory exists up front.
    if !cli.dry_run {
        std::fs::create_dir_all(out)?;
    }

    match cli.cmd {
        Cmd::Solve { config, seed } => {
            let id = config_id(&config);
            let cfg = load_with_seed(&config, seed)?;
            let plan = resolve_plan(&id, &cfg)?;
            if cli.dry_run {
                print!("{}", render_plans(std::slice::from_ref(&plan))?);
                return Ok(());
            }
            let art = run_experiment(&cfg, &id, Some(out))?;
            write_manifest(out, &format!("solve {}", config.display()), std::slice::from_ref(&art.plan))?;
            report_rows(std::slice::from_ref(&art));
        }
        Cmd::Table { table, seed } => {
            let id: TableId = table.parse()?;
            if cli.dry_run {
                print!("{}", render_plans(&table_plans(id, seed)?)?);
                return Ok(());
            }
            let arts = run_table(id, Some(out), seed)?;
            let plans: Vec<_> = arts.iter().map(|a| a.plan.clone()).collect();
            write_manifest(out, &format!("table {}", id.name()), &plans)?;
            report_rows(&arts);
            println!("wrote {}", out.join(format!("{}.csv", id.name())).display());
        }
        Cmd::Decay {
            config,
            element,
            mode,
            m_list,
        } => {
            let id = config_id(&config);
            let cfg = load_config(&config)?;
            let plan = resolve_plan(&id, &cfg)?;
            if cli.dry_run {
                print!("{}", render_plans(std::slice::from_ref(&plan))?);
                return Ok(());
            }
            let study = run_decay(&cfg, &id, element, mode, &m_list, Some(out))?;
            write_manifest(out, &format!("decay {}", config.display()), std::slice::from_ref(&plan))?;
            for (m, err) in &study.rows {
                println!("m = {m}: localization error = {err:.6e}");
            }
            match study.theta_hat {
                Some(t) => println!("fitted geometric rate = {t:.4}"),
                None => println!("fitted geometric rate: not enough rows above noise"),
            }
        }
        Cmd::Spectra { config } => {
            let id = config_id(&config);
            let cfg = load_config(&config)?;
            let plan = resolve_plan(&id, &cfg)?;
            if cli.dry_run {
                print!("{}", render_plans(std::slice::from_ref(&plan))?);
                return Ok(());
            }
            let aux = run_spectra(&cfg, &id, Some(out))?;
            write_manifest(out, &format!("spectra {}", config.display()), std::slice::from_ref(&plan))?;
            println!(
                "{} elements, {} modes kept, spectral gap Lambda = {:.6e}",
                aux.sets.len(),
                aux.l,
                aux.lambda
            );
        }
        Cmd::DumpPotential { config } => {
            let id = config_id(&config);
            let cfg = load_config(&config)?;
            let plan = resolve_plan(&id, &cfg)?;
            if cli.dry_run {
                print!("{}", render_plans(std::slice::from_ref(&plan))?);
                return Ok(());
            }
            let path = dump_potential(&cfg, &id, out)?;
            write_manifest(out, &format!("dump-potential {}", config.display()), std::slice::from_ref(&plan))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
