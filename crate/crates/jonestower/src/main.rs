use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jonestower::cli::{
    build_summary, emit_table, parse_config, report_to_json, run, RunConfig, SuiteName,
    VerificationReport,
};
use jonestower::TowerError;

#[derive(Parser)]
#[command(
    name = "jonestower",
    about = "Build basic-construction towers for finite-dimensional inclusions and verify their Fourier, shift, and entropy identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run description
    #[arg(long)]
    config: PathBuf,
    /// Override the configured tower height
    #[arg(long)]
    max_level: Option<isize>,
    /// Override the configured RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Run only these suites (repeatable); overrides the config
    #[arg(long = "suite", value_enum)]
    suite: Vec<SuiteName>,
    /// Override the configured tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Override the configured sample count
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the tower and print its structural summary
    Build {
        #[command(flatten)]
        common: Common,
    },
    /// Run the configured verification suites and print the report
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also write the report to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the entropy suite and print the growth table
    Entropy {
        #[command(flatten)]
        common: Common,
        /// Also write the full report to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a table from a previously written report
    Report {
        /// Report file produced by verify or entropy
        report: PathBuf,
        /// Table selector: entropy, margins, or dims
        selector: String,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, TowerError> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(l) = common.max_level {
        cfg.max_level = l;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if !common.suite.is_empty() {
        cfg.suites = common.suite.clone();
    }
    if let Some(t) = common.tol {
        cfg.tolerance = t;
    }
    if let Some(n) = common.samples {
        cfg.samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_report(report: &VerificationReport, out: &Option<PathBuf>) -> Result<(), TowerError> {
    if let Some(path) = out {
        std::fs::write(path, report_to_json(report))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, TowerError> {
    match cli.command {
        Command::Build { common } => {
            let cfg = load_config(&common)?;
            let summary = build_summary(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary)
                    .map_err(|e| TowerError::Config(e.to_string()))?
            );
            Ok(true)
        }
        Command::Verify { common, out } => {
            let cfg = load_config(&common)?;
            let report = run(&cfg)?;
            print!("{}", report_to_json(&report));
            write_report(&report, &out)?;
            Ok(report.pass)
        }
        Command::Entropy { common, out } => {
            let mut cfg = load_config(&common)?;
            cfg.suites = vec![SuiteName::Entropy];
            let report = run(&cfg)?;
            print!("{}", emit_table(&report, "entropy")?);
            write_report(&report, &out)?;
            Ok(report.pass)
        }
        Command::Report { report, selector } => {
            let text = std::fs::read_to_string(&report)
                .map_err(|e| TowerError::Config(format!("{}: {}", report.display(), e)))?;
            let parsed: VerificationReport = serde_json::from_str(&text)
                .map_err(|e| TowerError::Config(format!("{}: {}", report.display(), e)))?;
            print!("{}", emit_table(&parsed, &selector)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e);
            let code = match e {
                TowerError::Config(_) | TowerError::Io(_) | TowerError::InvalidModel(_) => 2,
                TowerError::DimensionCap(_) | TowerError::IndexRange(_) => 3,
                TowerError::Numerical(_) | TowerError::Verification(_) => 1,
            };
            ExitCode::from(code)
        }
    }
}
