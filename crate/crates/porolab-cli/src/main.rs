//! Command-line front end: validate configs, run solves and sweeps, and
//! re-render written reports.
//!
//! Exit codes: 0 success, 2 validation failure, 3 solver non-convergence,
//! 4 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use porolab_core::barrier::{gradient_trace_bound, solve_barrier, BarrierGrid};
use porolab_core::config::RunConfig;
use porolab_core::error::Error;
use porolab_core::pipeline::{
    load_report, render_summary, run_pipeline, PipelineOptions, RunOutcome, StageSet,
};
use porolab_core::report::{fmt_float, write_field_csv, write_json};

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "porolab", version, about = "Free-boundary porosity laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Configuration file.
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and porosity queries.
    #[arg(long)]
    threads: Option<usize>,
    /// Continue past validation failures.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural assumptions on the configured coefficients.
    Validate(CommonOpts),
    /// Solve the free-boundary problem and extract the free boundary.
    Solve(CommonOpts),
    /// Solve one barrier cap problem at explicit parameters.
    Barrier {
        #[command(flatten)]
        common: CommonOpts,
        /// Cap center in the flat cylinder, comma-separated coordinates.
        #[arg(long)]
        x0: String,
        /// Cap radius.
        #[arg(long)]
        r: f64,
        /// Boundary-data size in (0, 1).
        #[arg(long)]
        eps: f64,
    },
    /// Solve, then measure porosity of the free boundary.
    Porosity(CommonOpts),
    /// Solve, then estimate the box-counting dimension of the free boundary.
    Dimension(CommonOpts),
    /// Run the full pipeline.
    Run(CommonOpts),
    /// Re-render a written run report as a human-readable summary.
    Report {
        /// Directory containing run_report.json.
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    };
    ExitCode::from(code)
}

fn classify_error(e: &Error) -> u8 {
    match e {
        Error::Validation(_) => EXIT_VALIDATION,
        Error::Config(_) | Error::Usage(_) | Error::Parameter(_) => EXIT_USAGE,
        _ => 1,
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Validate(c) => run_stages(c, StageSet::validate_only()),
        Command::Solve(c) => run_stages(c, StageSet::solve_only()),
        Command::Porosity(c) => run_stages(
            c,
            StageSet { solve: true, barrier: true, porosity: true, dimension: false },
        ),
        Command::Dimension(c) => run_stages(
            c,
            StageSet { solve: true, barrier: false, porosity: false, dimension: true },
        ),
        Command::Run(c) => run_stages(c, StageSet::all()),
        Command::Barrier { common, x0, r, eps } => barrier_instance(common, &x0, r, eps),
        Command::Report { run_dir } => {
            let value = load_report(&run_dir)?;
            // Re-render from the typed report when possible, raw otherwise.
            match serde_json::from_value::<porolab_core::pipeline::RunReport>(value.clone()) {
                Ok(report) => print!("{}", render_summary(&report)),
                Err(_) => println!("{value:#}"),
            }
            Ok(EXIT_OK)
        }
    }
}

fn run_stages(common: CommonOpts, stages: StageSet) -> Result<u8, Error> {
    init_threads(common.threads);
    let cfg = RunConfig::from_file(&common.config)?;
    let opts = PipelineOptions { force: common.force, out_dir: common.out.clone(), stages };
    let outcome: RunOutcome = run_pipeline(&cfg, &opts)?;
    print!("{}", render_summary(&outcome.report));
    println!("artifacts: {}", outcome.out_dir.display());
    if outcome.aborted_on_validation {
        return Ok(EXIT_VALIDATION);
    }
    if outcome.solver_converged == Some(false) {
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(EXIT_OK)
}

fn barrier_instance(common: CommonOpts, x0: &str, r: f64, eps: f64) -> Result<u8, Error> {
    init_threads(common.threads);
    let cfg = RunConfig::from_file(&common.config)?;
    let spec = cfg.build_domain()?;
    let cf = cfg.build_coefficients(&spec)?;
    let x0: Vec<f64> = x0
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad coordinate `{t}` in --x0")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let grid_spec = BarrierGrid::Local { nodes_per_r: cfg.nodes_per_r };
    let inst = solve_barrier(&cf, &x0, r, eps, &grid_spec)?;
    let out_dir = common.out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    std::fs::create_dir_all(&out_dir)?;
    let name = format!("barrier_{eps:.6e}_{r:.6e}.csv");
    write_field_csv(&out_dir.join(&name), &["v"], &[&inst.v])?;
    write_json(&out_dir.join("barrier_instance.json"), &inst)?;
    println!(
        "barrier: r={} eps={} v in [{}, {}] trace bound {}",
        fmt_float(r),
        fmt_float(eps),
        fmt_float(inst.v_min),
        fmt_float(inst.v_max),
        fmt_float(gradient_trace_bound(&inst)),
    );
    println!("wrote {} and barrier_instance.json in {}", name, out_dir.display());
    Ok(EXIT_OK)
}
