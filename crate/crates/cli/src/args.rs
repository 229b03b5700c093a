//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use credible_core::Method;

use crate::commands::{cmd_diagnose, cmd_rerun, cmd_simulate, cmd_uwb, cmd_uwb_fixture};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "credible", version, about = "Credibility diagnosis for state estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every analysis subcommand. Flags override `--config`.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Root seed for all randomness [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// NCI threshold, dB
    #[arg(long)]
    pub tau_nci_db: Option<f64>,
    /// Directional probe scale c > 1
    #[arg(long)]
    pub probe_scale: Option<f64>,
    /// Sign-flip replicates of the location test
    #[arg(long)]
    pub elt_resamples: Option<usize>,
    /// Significance level of the location test
    #[arg(long)]
    pub alpha_sig: Option<f64>,
    /// Energy-score Monte Carlo draws per sample
    #[arg(long)]
    pub es_samples: Option<usize>,
}

impl CommonArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        let d = &mut cfg.diagnosis;
        if let Some(v) = self.tau_nci_db {
            d.tau_nci_db = v;
        }
        if let Some(v) = self.probe_scale {
            d.probe_scale = v;
        }
        if let Some(v) = self.elt_resamples {
            d.elt_resamples = v;
        }
        if let Some(v) = self.alpha_sig {
            d.alpha_sig = v;
        }
        if let Some(v) = self.es_samples {
            d.es_samples = v;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the six-scenario Monte Carlo study
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Trials per scenario
        #[arg(long)]
        trials: Option<usize>,
        /// Runs per trial
        #[arg(long)]
        runs: Option<usize>,
        /// Also write every trial's error set under errors/
        #[arg(long)]
        export_errors: bool,
    },
    /// Diagnose an error-set CSV (columns e_i, cov_i_j, optional mse_i_j)
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
        /// Error-set CSV
        errors: PathBuf,
        /// File with a covariance shared by all rows
        #[arg(long)]
        shared_cov: Option<PathBuf>,
        /// File with a reference MSE shared by all rows
        #[arg(long)]
        shared_mse: Option<PathBuf>,
        /// Write report and manifest here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagnose every static period of a UWB range log
    Uwb {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        ranges: PathBuf,
        #[arg(long)]
        anchors: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Write report, period and fix tables and manifest here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic UWB dataset (honest, biased-pessimistic, optimistic)
    UwbFixture {
        #[arg(long)]
        kind: String,
        /// Noise seed [default: 42]
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat a run from its manifest
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn summary(report: &credible_core::StudyReport, out: &Path) -> String {
    let mut s = format!("scenario            proposed    nees     nci   (accuracy %, written to {})\n", out.display());
    for &sc in &report.scenarios {
        s.push_str(&format!("{:<18}", sc.as_str()));
        for m in Method::ALL {
            s.push_str(&format!("{:>8.1}", 100.0 * report.accuracy(m, sc)));
        }
        s.push('\n');
    }
    s
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    let text = match command {
        Command::Simulate { common, out, trials, runs, export_errors } => {
            let mut cfg = common.resolve()?;
            if let Some(t) = trials {
                cfg.simulate.trials = t;
            }
            if let Some(r) = runs {
                cfg.simulate.runs = r;
            }
            let report = cmd_simulate(&cfg, &out, export_errors)?;
            summary(&report, &out)
        }
        Command::Diagnose { common, errors, shared_cov, shared_mse, out } => cmd_diagnose(
            &common.resolve()?,
            &errors,
            shared_cov.as_deref(),
            shared_mse.as_deref(),
            out.as_deref(),
        )?,
        Command::Uwb { common, ranges, anchors, truth, out } => {
            cmd_uwb(&common.resolve()?, &ranges, &anchors, &truth, out.as_deref())?.0
        }
        Command::UwbFixture { kind, seed, out } => {
            let mut cfg = RunConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_uwb_fixture(&cfg, &kind, &out)?;
            format!("wrote {} fixture to {}\n", kind, out.display())
        }
        Command::Rerun { manifest, out } => cmd_rerun(&manifest, &out)?,
    };
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
}

/// Parse `args` (including the program name) and run. Returns the exit code;
/// messages go to `stdout` and `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
