use std::fmt::Write as _;
use std::path::Path;

use credible_core::sim::{generate_trial, run_study, Method, StudyReport};
use credible_core::DiagnosisLabel;

use crate::commands::errors_csv;
use crate::config::{scenario_key, RunConfig};
use crate::error::CliResult;
use crate::manifest::{Invocation, RunManifest};

/// Run the six-scenario study and write accuracy, confusion and per-trial
/// tables plus the manifest into `out`. With `export_errors`, every trial's
/// error set is also written under `errors/` in the format `diagnose` reads.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path, export_errors: bool) -> CliResult<StudyReport> {
    let specs = cfg.simulate.specs()?;
    let diag = cfg.diagnosis.to_config()?;
    let report = run_study(&specs, &diag, cfg.seed)?;

    let mut manifest = RunManifest::new(Invocation::Simulate { export_errors }, cfg);
    manifest.write_output(out, "accuracy.csv", accuracy_csv(&report).as_bytes())?;
    manifest.write_output(out, "confusion.csv", confusion_csv(&report).as_bytes())?;
    manifest.write_output(out, "trials.csv", trials_csv(&report).as_bytes())?;
    if export_errors {
        for spec in &specs {
            for t in 0..spec.n_trials {
                let trial = generate_trial(spec, t, cfg.seed)?;
                let name = format!("errors/{}_{:03}.csv", scenario_key(spec.scenario), t);
                manifest.write_output(out, &name, errors_csv::write(&trial.set).as_bytes())?;
            }
        }
    }
    manifest.save(out)?;
    Ok(report)
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

pub fn accuracy_csv(r: &StudyReport) -> String {
    let mut s = String::from("scenario");
    for m in Method::ALL {
        let _ = write!(s, ",{}_accuracy_pct", m.as_str());
    }
    s.push('\n');
    for &sc in &r.scenarios {
        s.push_str(sc.as_str());
        for m in Method::ALL {
            let _ = write!(s, ",{}", pct(r.accuracy(m, sc)));
        }
        s.push('\n');
    }
    s
}

pub fn confusion_csv(r: &StudyReport) -> String {
    let mut s = String::from("true_label");
    for l in DiagnosisLabel::ALL {
        let _ = write!(s, ",pred_{}", l.as_str());
    }
    s.push('\n');
    for t in DiagnosisLabel::ALL {
        s.push_str(t.as_str());
        for p in DiagnosisLabel::ALL {
            let _ = write!(s, ",{}", r.confusion[t.index()][p.index()]);
        }
        s.push('\n');
    }
    s
}

pub fn trials_csv(r: &StudyReport) -> String {
    let mut s = String::from("scenario,trial,seed,rho,bias_norm,true_label,proposed,nees,nci\n");
    for t in &r.trials {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            t.scenario.as_str(),
            t.trial_index,
            t.seed,
            t.rho,
            t.bias_norm,
            t.true_label.as_str(),
            t.predicted.as_str(),
            t.label(Method::Nees).as_str(),
            t.label(Method::Nci).as_str(),
        );
    }
    s
}
