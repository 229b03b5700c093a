pub mod diagnose;
pub mod errors_csv;
pub mod simulate;
pub mod uwb;

use std::path::{Path, PathBuf};

use crate::error::CliResult;
use crate::manifest::{Invocation, RunManifest};

pub use diagnose::cmd_diagnose;
pub use simulate::cmd_simulate;
pub use uwb::{cmd_uwb, cmd_uwb_fixture};

/// Repeat the run described by a manifest into `out`, after checking that
/// its inputs are unchanged. Returns the text the original run printed.
pub fn cmd_rerun(manifest_path: &Path, out: &Path) -> CliResult<String> {
    let m = RunManifest::load(manifest_path)?;
    m.verify_inputs()?;
    let cfg = m.config;
    Ok(match m.invocation {
        Invocation::Simulate { export_errors } => {
            cmd_simulate(&cfg, out, export_errors)?;
            String::new()
        }
        Invocation::Diagnose { errors, shared_cov, shared_mse } => cmd_diagnose(
            &cfg,
            Path::new(&errors),
            shared_cov.map(PathBuf::from).as_deref(),
            shared_mse.map(PathBuf::from).as_deref(),
            Some(out),
        )?,
        Invocation::Uwb { ranges, anchors, truth } => {
            cmd_uwb(&cfg, Path::new(&ranges), Path::new(&anchors), Path::new(&truth), Some(out))?.0
        }
        Invocation::UwbFixture { kind } => {
            cmd_uwb_fixture(&cfg, &kind, out)?;
            String::new()
        }
    })
}
