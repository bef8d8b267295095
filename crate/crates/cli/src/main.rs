use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpoutlier_cli::config::{BoundsConfig, DatasetSource};
use dpoutlier_cli::{emit_rows, scenarios, verify, CliError, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "dpoutlier", version, about = "Differentially private outlier counting and top-h subspace discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Private outlier count per epsilon (global-bound vs smooth-bound noise)
    Count(Overrides),
    /// Private top-h subspace discovery with follow-up counts
    Tophsubspace(Overrides),
    /// Global sensitivity bounds over (d, k)
    Bounds(Overrides),
    /// Oracle-equivalence, soundness and DP-ratio checks
    Verify(Overrides),
    /// Pick the radius that best matches the labels
    TuneRadius(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated privacy parameters
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
}

fn synthetic(preset: &str) -> DatasetSource {
    DatasetSource::Synthetic {
        preset: preset.into(),
        seed: None,
        n_inliers: None,
        n_outliers: None,
        standardize: false,
    }
}

/// Built-in defaults when no config file is given: Synthetic 1 for counts,
/// Synthetic 2 for top-h.
fn default_config(scenario: Scenario) -> RunConfig {
    let mut cfg = RunConfig::new(scenario);
    match scenario {
        Scenario::Count | Scenario::TuneRadius => {
            cfg.dataset = Some(synthetic("synthetic1"));
            cfg.k = Some(3);
            cfg.r = Some(1.1);
            cfg.epsilons = Some((1..=9).map(|i| i as f64 / 10.0).collect());
            cfg.delta = Some(0.01);
            if scenario == Scenario::TuneRadius {
                cfg.r = None;
                cfg.tune_grid = Some((1..=30).map(|i| i as f64 / 10.0).collect());
            }
        }
        Scenario::TopH => {
            cfg.dataset = Some(synthetic("synthetic2"));
            cfg.k = Some(3);
            cfg.r = Some(0.13);
            cfg.epsilons = Some(vec![0.2, 0.4, 0.8, 1.6, 3.2]);
            cfg.delta = Some(0.01);
            cfg.h = Some(2);
            cfg.c = Some(1);
            cfg.reps = 1000;
        }
        Scenario::Bounds => cfg.bounds = Some(BoundsConfig::default()),
        Scenario::Verify => {}
    }
    cfg
}

fn build_config(scenario: Scenario, o: Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &o.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.scenario != scenario {
                return Err(CliError::Config(format!(
                    "{} is a '{}' config, but the '{}' subcommand was given",
                    path.display(),
                    cfg.scenario.name(),
                    scenario.name()
                )));
            }
            cfg
        }
        None => default_config(scenario),
    };
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.out {
        cfg.out = Some(v);
    }
    if let Some(v) = o.eps {
        cfg.epsilons = Some(v);
    }
    if let Some(v) = o.delta {
        cfg.delta = Some(v);
    }
    if let Some(v) = o.k {
        cfg.k = Some(v);
    }
    if let Some(v) = o.r {
        cfg.r = Some(v);
    }
    if let Some(v) = o.h {
        cfg.h = Some(v);
    }
    if let Some(v) = o.c {
        cfg.c = Some(v);
    }
    if let Some(v) = o.reps {
        cfg.reps = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (scenario, overrides) = match cli.command {
        Command::Count(o) => (Scenario::Count, o),
        Command::Tophsubspace(o) => (Scenario::TopH, o),
        Command::Bounds(o) => (Scenario::Bounds, o),
        Command::Verify(o) => (Scenario::Verify, o),
        Command::TuneRadius(o) => (Scenario::TuneRadius, o),
    };
    let cfg = build_config(scenario, overrides)?;
    let out = cfg.out.as_deref();
    match scenario {
        Scenario::Count => emit_rows(&scenarios::run_scenario1(&cfg)?, out),
        Scenario::TopH => emit_rows(&scenarios::run_scenario2(&cfg)?, out),
        Scenario::Bounds => emit_rows(&scenarios::run_bounds_sweep(&cfg)?, out),
        Scenario::TuneRadius => emit_rows(&scenarios::run_tune_radius(&cfg)?, out),
        Scenario::Verify => {
            let report = verify::run_verify(&cfg)?;
            emit_rows(&report.rows(), out)?;
            for check in &report.checks {
                for failure in &check.failures {
                    eprintln!("{}: {failure}", check.name);
                }
            }
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(report.failed_names().join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
