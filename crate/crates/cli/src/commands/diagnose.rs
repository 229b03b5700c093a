use std::fmt::Write as _;
use std::path::Path;

use credible_core::diagnosis::{baseline_nci, baseline_nees, diagnose};
use credible_core::metrics::{anees, metric_report};
use credible_core::sim::NEES_BASELINE_CONFIDENCE;
use credible_core::{DiagnosisReport, SeededRng};

use crate::commands::errors_csv;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::{Invocation, RunManifest};

pub const REPORT_FILE: &str = "report.txt";

/// Diagnose a user-supplied error set. Returns the key: value report; with
/// `out`, also writes it and the manifest there.
pub fn cmd_diagnose(
    cfg: &RunConfig,
    errors: &Path,
    shared_cov: Option<&Path>,
    shared_mse: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<String> {
    let diag = cfg.diagnosis.to_config()?;
    let set = errors_csv::read(errors, shared_cov, shared_mse)?;
    let rng = SeededRng::new(cfg.seed);
    let report = diagnose(&set, &diag, &rng.child(0))?;
    let mut text = String::new();
    let _ = writeln!(text, "n_samples: {}", set.len());
    let _ = writeln!(text, "dim: {}", set.dim());
    let _ = writeln!(text, "nci_reference: {}", if set.reference().is_some() { "supplied" } else { "sample_mse" });
    let _ = writeln!(text, "anees: {:.6}", anees(&set)?);
    let m = metric_report(&set, diag.es_samples, &rng.child(1))?;
    let _ = writeln!(text, "mean_nll_nats: {:.6}", m.mean_nll);
    let _ = writeln!(text, "mean_es: {:.6}", m.mean_es);
    text.push_str(&format_report(&report));
    let _ = writeln!(text, "baseline_nees: {}", baseline_nees(&set, NEES_BASELINE_CONFIDENCE)?);
    let _ = writeln!(text, "baseline_nci: {}", baseline_nci(&set, diag.tau_nci_db)?);

    if let Some(out) = out {
        let mut manifest = RunManifest::new(
            Invocation::Diagnose {
                errors: errors.display().to_string(),
                shared_cov: shared_cov.map(|p| p.display().to_string()),
                shared_mse: shared_mse.map(|p| p.display().to_string()),
            },
            cfg,
        );
        manifest.add_input(errors)?;
        for p in [shared_cov, shared_mse].into_iter().flatten() {
            manifest.add_input(p)?;
        }
        manifest.write_output(out, REPORT_FILE, text.as_bytes())?;
        manifest.save(out)?;
    }
    Ok(text)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

/// Label, NCI values, location-test outcome and probe values as
/// `key: value` lines.
pub fn format_report(r: &DiagnosisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "label: {}", r.label);
    let _ = writeln!(s, "nci_raw_db: {:.6}", r.nci_raw_db);
    let _ = writeln!(s, "elt_statistic: {:.6}", r.elt.t_obs);
    let _ = writeln!(s, "elt_p_value: {:.6}", r.elt.p_value);
    let _ = writeln!(s, "elt_bias_detected: {}", r.elt.decision);
    let bias = r.bias_estimate.as_ref().map_or_else(
        || "n/a".to_string(),
        |b| b.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "),
    );
    let _ = writeln!(s, "bias_estimate: {bias}");
    let _ = writeln!(s, "nci_corrected_db: {}", opt(r.nci_corrected_db));
    let p = r.probes;
    let _ = writeln!(s, "probe_delta_nll_minus_nats: {}", opt(p.map(|p| p.delta_nll_minus)));
    let _ = writeln!(s, "probe_delta_nll_plus_nats: {}", opt(p.map(|p| p.delta_nll_plus)));
    let _ = writeln!(s, "probe_delta_es_minus: {}", opt(p.map(|p| p.delta_es_minus)));
    let _ = writeln!(s, "probe_delta_es_plus: {}", opt(p.map(|p| p.delta_es_plus)));
    let _ = writeln!(s, "srd_nll: {}", opt(p.map(|p| p.srd_nll)));
    let _ = writeln!(s, "srd_es: {}", opt(p.map(|p| p.srd_es)));
    s
}
