use std::fmt::Write as _;
use std::path::Path;

use credible_core::uwb::fixture::{generate_fixture, FixtureKind};
use credible_core::uwb::io::{write_anchors, write_ranges, write_track};
use credible_core::uwb::{run_pipeline, PeriodDiagnosis, UwbDataset};

use crate::commands::diagnose::format_report;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{Invocation, RunManifest};

pub const PERIODS_FILE: &str = "periods.csv";
pub const FIXES_FILE: &str = "fixes.csv";
pub const REPORT_FILE: &str = "report.txt";

/// Run the UWB pipeline. Returns the per-period report blocks; with `out`,
/// also writes the report, the period and fix tables and the manifest.
pub fn cmd_uwb(
    cfg: &RunConfig,
    ranges: &Path,
    anchors: &Path,
    truth: &Path,
    out: Option<&Path>,
) -> CliResult<(String, Vec<PeriodDiagnosis>)> {
    let uwb_cfg = cfg.uwb.to_config()?;
    let diag = cfg.diagnosis.to_config()?;
    let data = UwbDataset::load(ranges, anchors, truth, &cfg.uwb.columns)?;
    let periods = run_pipeline(&data, &uwb_cfg, &diag, cfg.seed)?;
    let text = report_text(&periods);

    if let Some(out) = out {
        let mut manifest = RunManifest::new(
            Invocation::Uwb {
                ranges: ranges.display().to_string(),
                anchors: anchors.display().to_string(),
                truth: truth.display().to_string(),
            },
            cfg,
        );
        for p in [ranges, anchors, truth] {
            manifest.add_input(p)?;
        }
        manifest.write_output(out, REPORT_FILE, text.as_bytes())?;
        manifest.write_output(out, PERIODS_FILE, periods_csv(&periods).as_bytes())?;
        manifest.write_output(out, FIXES_FILE, fixes_csv(&periods).as_bytes())?;
        manifest.save(out)?;
    }
    Ok((text, periods))
}

fn mean_error(p: &PeriodDiagnosis) -> [f64; 2] {
    let n = p.fixes.len() as f64;
    let mut m = [0.0; 2];
    for f in &p.fixes {
        for k in 0..2 {
            m[k] += (p.ground_truth[k] - f.estimate[k]) / n;
        }
    }
    m
}

pub fn report_text(periods: &[PeriodDiagnosis]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "periods: {}", periods.len());
    for p in periods {
        let b = mean_error(p);
        let _ = writeln!(s);
        let _ = writeln!(s, "period: {}", p.index + 1);
        let _ = writeln!(s, "start_s: {:.3}", p.start);
        let _ = writeln!(s, "end_s: {:.3}", p.end);
        let _ = writeln!(s, "ground_truth_m: {:.4} {:.4}", p.ground_truth[0], p.ground_truth[1]);
        let _ = writeln!(s, "n_packets: {}", p.n_packets);
        let _ = writeln!(s, "n_fixes: {}", p.fixes.len());
        let _ = writeln!(s, "n_failed: {}", p.n_failed);
        let _ = writeln!(s, "mean_error_m: {:.6} {:.6}", b[0], b[1]);
        let _ = writeln!(s, "anees: {:.6}", p.anees);
        s.push_str(&format_report(&p.report));
        let _ = writeln!(s, "baseline_nees: {}", p.baseline_nees);
        let _ = writeln!(s, "baseline_nci: {}", p.baseline_nci);
    }
    s
}

pub fn periods_csv(periods: &[PeriodDiagnosis]) -> String {
    let mut s = String::from(
        "period,start_s,end_s,truth_x_m,truth_y_m,n_packets,n_fixes,n_failed,mean_error_x_m,mean_error_y_m,\
         anees,nci_raw_db,nci_corrected_db,elt_statistic,elt_p_value,label,baseline_nees,baseline_nci\n",
    );
    for p in periods {
        let b = mean_error(p);
        let corrected = p.report.nci_corrected_db.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.index + 1,
            p.start,
            p.end,
            p.ground_truth[0],
            p.ground_truth[1],
            p.n_packets,
            p.fixes.len(),
            p.n_failed,
            b[0],
            b[1],
            p.anees,
            p.report.nci_raw_db,
            corrected,
            p.report.elt.t_obs,
            p.report.elt.p_value,
            p.report.label,
            p.baseline_nees,
            p.baseline_nci,
        );
    }
    s
}

pub fn fixes_csv(periods: &[PeriodDiagnosis]) -> String {
    let mut s = String::from(
        "period,timestamp_s,x_m,y_m,cov_xx_m2,cov_xy_m2,cov_yy_m2,error_x_m,error_y_m,residual_rms_m,n_measurements\n",
    );
    for p in periods {
        for f in &p.fixes {
            let c = f.covariance.matrix();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.index + 1,
                f.timestamp,
                f.estimate[0],
                f.estimate[1],
                c[(0, 0)],
                c[(0, 1)],
                c[(1, 1)],
                p.ground_truth[0] - f.estimate[0],
                p.ground_truth[1] - f.estimate[1],
                f.residual_norm,
                f.n_measurements,
            );
        }
    }
    s
}

pub const FIXTURE_FILES: [&str; 3] = ["ranges.csv", "anchors.csv", "truth.csv"];

/// Write a synthetic fixture (`ranges.csv`, `anchors.csv`, `truth.csv`) in
/// the default column layout.
pub fn cmd_uwb_fixture(cfg: &RunConfig, kind: &str, out: &Path) -> CliResult<()> {
    let k: FixtureKind = kind.parse().map_err(CliError::Config)?;
    let data = generate_fixture(k, cfg.seed);
    let mut manifest = RunManifest::new(Invocation::UwbFixture { kind: kind.to_string() }, cfg);
    let mut buf = Vec::new();
    write_ranges(&mut buf, &data.records)?;
    manifest.write_output(out, FIXTURE_FILES[0], &buf)?;
    buf.clear();
    write_anchors(&mut buf, &data.anchors)?;
    manifest.write_output(out, FIXTURE_FILES[1], &buf)?;
    buf.clear();
    write_track(&mut buf, &data.track)?;
    manifest.write_output(out, FIXTURE_FILES[2], &buf)?;
    manifest.save(out)
}
