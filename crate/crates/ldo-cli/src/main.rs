//! `ldo`: run decision experiments from TOML recipes.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! failure.

use clap::{Parser, Subcommand};
use ldo_core::harness::{
    run_decide, run_gap_curve, run_laplace_check, run_regret_curve, run_sanov_check,
    write_svg_lines, ExperimentConfig, ResultTable,
};
use ldo_core::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ldo",
    about = "Large-deviations-optimal data-driven decisions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment recipe (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override the recipe's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the recipe's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Consistency-gap sweep over the penalty parameter.
    GapCurve(CommonArgs),
    /// Average regret of optimal and plug-in decisions over sample paths.
    RegretCurve(CommonArgs),
    /// Finite-horizon (robust) Sanov sandwich reports.
    SanovCheck(CommonArgs),
    /// Entropic-risk convergence reports.
    LaplaceCheck(CommonArgs),
    /// One-shot decision from an observed measure file.
    Decide {
        #[command(flatten)]
        common: CommonArgs,
        /// Observed empirical measure (CSV, one record of coordinates).
        #[arg(short, long)]
        input: PathBuf,
    },
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(out) = &args.out {
        cfg.experiment.output_dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, Error> {
    let dir = PathBuf::from(&cfg.experiment.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display(), e))?;
    Ok(dir)
}

fn write_outputs(table: &mut ResultTable, dir: &Path, stem: &str) -> Result<PathBuf, Error> {
    let csv_path = dir.join(format!("{stem}.csv"));
    table.write_csv(&csv_path)?;
    Ok(csv_path)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GapCurve(args) => {
            let cfg = load_config(&args)?;
            let dir = ensure_out_dir(&cfg)?;
            let mut table = run_gap_curve(&cfg)?;
            let svg = dir.join("gap_curve.svg");
            if let Err(e) = write_svg_lines(&mut table, "beta", &["gap_true", "gap_avg"], &svg, true)
            {
                log::warn!("svg emission skipped: {e}");
            }
            let csv = write_outputs(&mut table, &dir, "gap_curve")?;
            println!("wrote {}", csv.display());
        }
        Command::RegretCurve(args) => {
            let cfg = load_config(&args)?;
            let dir = ensure_out_dir(&cfg)?;
            let mut table = run_regret_curve(&cfg)?;
            let svg = dir.join("regret_curve.svg");
            if let Err(e) = write_svg_lines(&mut table, "n", &["avg_regret"], &svg, true) {
                log::warn!("svg emission skipped: {e}");
            }
            let csv = write_outputs(&mut table, &dir, "regret_curve")?;
            println!("wrote {}", csv.display());
        }
        Command::SanovCheck(args) => {
            let cfg = load_config(&args)?;
            let dir = ensure_out_dir(&cfg)?;
            let mut table = run_sanov_check(&cfg)?;
            let csv = write_outputs(&mut table, &dir, "sanov_check")?;
            let ok = table
                .numeric_column("upper_ok")
                .into_iter()
                .flatten()
                .chain(table.numeric_column("lower_ok").into_iter().flatten())
                .all(|v| v == 1.0);
            println!("wrote {}", csv.display());
            if !ok {
                return Err(Error::Numerical(
                    "sandwich bound violated; see report".into(),
                ));
            }
        }
        Command::LaplaceCheck(args) => {
            let cfg = load_config(&args)?;
            let dir = ensure_out_dir(&cfg)?;
            let mut table = run_laplace_check(&cfg)?;
            let csv = write_outputs(&mut table, &dir, "laplace_check")?;
            println!("wrote {}", csv.display());
        }
        Command::Decide { common, input } => {
            let cfg = load_config(&common)?;
            let (outcome, mut table) = run_decide(&cfg, &input)?;
            let xs: Vec<String> = outcome.x_star.iter().map(|v| format!("{v:.12}")).collect();
            let ts: Vec<String> = outcome
                .theta_star
                .iter()
                .map(|v| format!("{v:.12}"))
                .collect();
            println!("x_star: [{}]", xs.join(", "));
            println!("u_star: {:.12}", outcome.u_star);
            println!("theta_star: [{}]", ts.join(", "));
            if let Ok(dir) = ensure_out_dir(&cfg) {
                let csv = write_outputs(&mut table, &dir, "decide")?;
                println!("wrote {}", csv.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
