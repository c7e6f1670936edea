//! Batch driver.
//!
//! Exit codes: 0 when every enabled check passed, 1 when a check failed,
//! 2 for configuration errors, 3 for solver errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};
use nematic_core::config::SimConfig;
use nematic_core::diagnostics::SteadyReference;
use nematic_core::driver::{run_continuation, run_simulation, Check};
use nematic_core::initial::build_trace;
use nematic_core::output::{write_continuation_csv, write_outputs};
use nematic_core::snapshot::Snapshot;
use nematic_core::Error;

#[derive(Parser)]
#[command(
    name = "nematic",
    version,
    about = "Compressible nematic liquid crystal flow solver"
)]
struct Cli {
    /// Log level (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled system up to `time.t_end`.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Halve the artificial viscosity, then the artificial pressure.
    Continuation {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the steady director only.
    Steady {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a configuration without running it.
    Check { config: PathBuf },
}

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Parse { .. } | Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<SimConfig<f64>, u8> {
    let mut cfg = SimConfig::<f64>::load(path).map_err(|e| {
        error!("{e}");
        EXIT_CONFIG
    })?;
    if out.is_some() {
        cfg.output_dir = out;
    }
    for w in &cfg.warnings {
        log::warn!("{w}");
    }
    Ok(cfg)
}

fn report(checks: &[Check]) -> u8 {
    let mut code = 0;
    for c in checks {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!("{verdict} {} = {:e} (limit {:e})", c.name, c.value, c.limit);
        if !c.passed {
            code = EXIT_CHECK;
        }
    }
    code
}

fn solver_failure(e: Error) -> u8 {
    error!("{e}");
    exit_code(&e)
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<u8, u8> {
    let cfg = load(config, out)?;
    let result = run_simulation(&cfg).map_err(solver_failure)?;
    if let Some(dir) = &cfg.output_dir {
        write_outputs(&result, dir).map_err(solver_failure)?;
        info!("wrote {}", dir.display());
    }
    let s = &result.summary;
    println!(
        "steps {} t {:e} energy {:e} -> {:e}",
        s.steps, s.t_final, s.initial_energy.total, s.final_energy.total
    );
    Ok(report(&s.checks))
}

fn continuation(config: &Path, levels: usize, out: Option<PathBuf>) -> Result<u8, u8> {
    let cfg = load(config, out)?;
    let table = run_continuation(&cfg, levels).map_err(solver_failure)?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            solver_failure(Error::Io {
                path: dir.clone(),
                source: e,
            })
        })?;
        write_continuation_csv(&dir.join("continuation.csv"), &table).map_err(solver_failure)?;
    }
    print!("{}", nematic_core::output::continuation_text(&table));
    Ok(report(&table.checks))
}

fn steady(config: &Path, out: Option<PathBuf>) -> Result<u8, u8> {
    let cfg = load(config, out)?;
    let grid = cfg.grid().map_err(solver_failure)?;
    let trace = build_trace(&cfg, &grid);
    let steady = SteadyReference::build(
        &grid,
        0.0,
        &trace,
        &cfg.penalty(),
        cfg.fluid.lambda,
        cfg.steady_options(),
    )
    .map_err(solver_failure)?;
    println!(
        "iterations {} residual {:e} force_residual {:e}",
        steady.stats.iterations, steady.stats.residual, steady.force_residual
    );
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            solver_failure(Error::Io {
                path: dir.clone(),
                source: e,
            })
        })?;
        Snapshot::from_director(steady.d_s.d(), 0.0)
            .save(dir.join("steady_d.snap"))
            .map_err(solver_failure)?;
    }
    let check = Check {
        name: "steady_consistency",
        value: steady.force_residual,
        limit: steady.force_bound,
        passed: steady.force_residual <= steady.force_bound * (1.0 + 1e-9),
    };
    Ok(report(&[check]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Continuation {
            config,
            levels,
            out,
        } => continuation(&config, levels, out),
        Command::Steady { config, out } => steady(&config, out),
        Command::Check { config } => load(&config, None).map(|cfg| {
            println!(
                "ok: {} cells, gamma {}",
                cfg.counts.iter().product::<usize>(),
                cfg.fluid.gamma
            );
            0
        }),
    };
    ExitCode::from(result.unwrap_or_else(|code| code))
}
