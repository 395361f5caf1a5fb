use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use irs_core::experiments::{du_table, n_table, tauc_table, CsiSelection, DuSweep, NSweep, TauCSweep, Table};
use irs_core::scenario::ScenarioConfig;
use irs_core::validation::{run_all, ValidationOptions};

#[derive(Parser)]
#[command(name = "irs-sim", version, about = "Monte Carlo sweeps for IRS-assisted MISO downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-user received SNR against the user's distance along the x-axis.
    SweepDu {
        #[command(flatten)]
        common: Common,
        /// Also tabulate an IRS with twice as many elements (perfect CSI).
        #[arg(long)]
        doubled_n: bool,
    },
    /// Multi-user net minimum rate against training duration.
    SweepTauc {
        #[command(flatten)]
        common: Common,
    },
    /// Multi-user minimum rate against the number of IRS elements.
    SweepN {
        #[command(flatten)]
        common: Common,
    },
    /// Run the estimator and optimizer self-checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Scale applied to the estimation noise levels (0 = noiseless).
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        /// Multiplier applied to the analytic gradient before checking it.
        #[arg(long, default_value_t = 1.0)]
        gradient_fault: f64,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; its fields override the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path. A `<out>.manifest.json` is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    csi: Option<Csi>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Csi {
    Perfect,
    Estimated,
    Both,
}

impl From<Csi> for CsiSelection {
    fn from(c: Csi) -> Self {
        match c {
            Csi::Perfect => CsiSelection::Perfect,
            Csi::Estimated => CsiSelection::Estimated,
            Csi::Both => CsiSelection::Both,
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_path: Option<String>,
    seed: u64,
    trials: usize,
    output_path: String,
    wall_clock_s: f64,
    version: &'static str,
    notes: Vec<&'static str>,
}

const GEOMETRY_NOTE: &str = "Site coordinates, correlation coefficients and the pilot-energy reference are model \
     choices; absolute SNR and rate values are not calibrated to any published figure, only trends are.";

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>, fallback: ScenarioConfig) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::from_path(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(fallback),
    }
}

fn setup_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let start = Instant::now();
    match cli.command {
        Command::SweepDu { common, doubled_n } => {
            setup_threads(common.threads)?;
            let mut s = DuSweep {
                base: load_config(common.config.as_deref(), ScenarioConfig::default())?,
                seed: common.seed,
                doubled_n,
                ..DuSweep::default()
            };
            apply_common(&common, &mut s.trials, &mut s.csi);
            let table = du_table(&s)?;
            finish("sweep-du", &common, s.trials, &table, start)
        }
        Command::SweepTauc { common } => {
            setup_threads(common.threads)?;
            let mut s = TauCSweep {
                seed: common.seed,
                ..TauCSweep::default()
            };
            s.base = load_config(common.config.as_deref(), s.base)?;
            irs_core::experiments::require_multi_user(&s.base)?;
            apply_common(&common, &mut s.trials, &mut s.csi);
            let table = tauc_table(&s)?;
            finish("sweep-tauc", &common, s.trials, &table, start)
        }
        Command::SweepN { common } => {
            setup_threads(common.threads)?;
            let mut s = NSweep {
                seed: common.seed,
                ..NSweep::default()
            };
            s.base = load_config(common.config.as_deref(), s.base)?;
            irs_core::experiments::require_multi_user(&s.base)?;
            apply_common(&common, &mut s.trials, &mut s.csi);
            let table = n_table(&s)?;
            finish("sweep-n", &common, s.trials, &table, start)
        }
        Command::Validate {
            common,
            noise_scale,
            gradient_fault,
        } => {
            setup_threads(common.threads)?;
            let mut opts = ValidationOptions {
                seed: common.seed,
                noise_scale,
                gradient_fault,
                ..ValidationOptions::default()
            };
            if let Some(t) = common.trials {
                opts.mmse_trials = t;
            }
            let report = run_all(&opts)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("validate.csv"));
            let csv = report.to_csv();
            std::fs::write(&out, &csv).with_context(|| format!("writing {}", out.display()))?;
            write_manifest("validate", &common, opts.mmse_trials, &out, start)?;
            print!("{csv}");
            if report.passed() {
                eprintln!("all suites passed");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("failed suites: {}", report.failed_suites().join(", "));
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn apply_common(common: &Common, trials: &mut usize, csi: &mut CsiSelection) {
    if let Some(t) = common.trials {
        *trials = t;
    }
    if let Some(c) = common.csi {
        *csi = c.into();
    }
}

fn finish(command: &str, common: &Common, trials: usize, table: &Table, start: Instant) -> Result<ExitCode> {
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", command.replace('-', "_"))));
    std::fs::write(&out, table.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    write_manifest(command, common, trials, &out, start)?;
    eprintln!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(command: &str, common: &Common, trials: usize, out: &Path, start: Instant) -> Result<()> {
    let manifest = RunManifest {
        command,
        config_path: common.config.as_ref().map(|p| p.display().to_string()),
        seed: common.seed,
        trials,
        output_path: out.display().to_string(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
        notes: vec![GEOMETRY_NOTE],
    };
    let path = manifest_path(out);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}
