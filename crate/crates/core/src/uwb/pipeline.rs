use crate::diagnosis::{baseline_nci, baseline_nees, diagnose, DiagnosisConfig, DiagnosisLabel, DiagnosisReport};
use crate::error::{CredError, Result};
use crate::gauss::{SeededRng, Vector};
use crate::metrics::{anees, nci_or_estimated, ErrorSample, EvaluationSet};
use crate::sim::NEES_BASELINE_CONFIDENCE;

use super::{aggregate_packets, segment_static, wls_position, AnchorMap, PositionFix, RangeRecord, StaticPeriod, UwbDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct UwbConfig {
    /// seconds
    pub packet_window: f64,
    /// m/s
    pub v_max: f64,
    /// seconds
    pub min_duration: f64,
    /// Periods with fewer packets (candidate fixes) are skipped.
    pub min_fixes: usize,
}

impl Default for UwbConfig {
    fn default() -> Self {
        Self { packet_window: 0.03, v_max: 0.1, min_duration: 4.0, min_fixes: 10 }
    }
}

impl UwbConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CredError::InvalidConfig(m.into()));
        if !(self.packet_window > 0.0) {
            return bad("packet window must be > 0");
        }
        if !(self.v_max > 0.0) {
            return bad("static speed threshold must be > 0");
        }
        if !(self.min_duration >= 0.0) {
            return bad("minimum static duration must be >= 0");
        }
        if self.min_fixes < 3 {
            return bad("at least 3 fixes per period are needed to estimate a 2-D MSE");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PeriodDiagnosis {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub ground_truth: [f64; 2],
    pub n_packets: usize,
    /// Packets whose solve failed (singular geometry, no convergence).
    pub n_failed: usize,
    pub fixes: Vec<PositionFix>,
    pub anees: f64,
    /// NCI against the sample MSE of the fixes, dB.
    pub nci_db: f64,
    pub report: DiagnosisReport,
    pub baseline_nees: DiagnosisLabel,
    pub baseline_nci: DiagnosisLabel,
}

/// Solve every packet of the period and diagnose the fixes against the
/// period's ground-truth position.
pub fn diagnose_period(
    index: usize,
    period: &StaticPeriod,
    anchors: &AnchorMap,
    cfg: &DiagnosisConfig,
    rng: &SeededRng,
) -> Result<PeriodDiagnosis> {
    let mut fixes = Vec::with_capacity(period.packets.len());
    let mut n_failed = 0;
    for p in &period.packets {
        match wls_position(p, anchors, None, period.tag_height) {
            Ok(fix) => fixes.push(fix),
            Err(CredError::SingularGeometry | CredError::NoConvergence(_)) => n_failed += 1,
            Err(e) => return Err(e),
        }
    }
    let truth = Vector::from_row_slice(&period.ground_truth_position);
    let samples = fixes
        .iter()
        .map(|f| ErrorSample::from_estimate(truth.clone(), f.estimate_vector(), f.covariance.clone()))
        .collect::<Result<Vec<_>>>()?;
    let set = EvaluationSet::new(samples)?;
    Ok(PeriodDiagnosis {
        index,
        start: period.start,
        end: period.end,
        ground_truth: period.ground_truth_position,
        n_packets: period.packets.len(),
        n_failed,
        anees: anees(&set)?,
        nci_db: nci_or_estimated(&set)?,
        report: diagnose(&set, cfg, rng)?,
        baseline_nees: baseline_nees(&set, NEES_BASELINE_CONFIDENCE)?,
        baseline_nci: baseline_nci(&set, cfg.tau_nci_db)?,
        fixes,
    })
}

/// Static periods of the track with their packets filled in.
pub fn build_periods(data: &UwbDataset, cfg: &UwbConfig) -> Result<Vec<StaticPeriod>> {
    cfg.validate()?;
    for r in &data.records {
        data.anchors.get(&r.anchor_id)?;
    }
    let mut records: Vec<RangeRecord> = data.records.clone();
    records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let mut periods = segment_static(&data.track, cfg.v_max, cfg.min_duration)?;
    for p in &mut periods {
        let lo = records.partition_point(|r| r.timestamp < p.start);
        let hi = records.partition_point(|r| r.timestamp <= p.end);
        p.packets = aggregate_packets(&records[lo..hi], cfg.packet_window);
    }
    Ok(periods)
}

/// Full pipeline. Period `i` draws its randomness from `child(i)` of the
/// seed. Periods with fewer than `min_fixes` packets, or too few successful
/// fixes to diagnose, are skipped.
pub fn run_pipeline(data: &UwbDataset, cfg: &UwbConfig, diag: &DiagnosisConfig, seed: u64) -> Result<Vec<PeriodDiagnosis>> {
    diag.validate()?;
    let root = SeededRng::new(seed);
    let mut out = Vec::new();
    for (i, period) in build_periods(data, cfg)?.iter().enumerate() {
        if period.packets.len() < cfg.min_fixes {
            continue;
        }
        match diagnose_period(i, period, &data.anchors, diag, &root.child(i as u64)) {
            Ok(d) => out.push(d),
            Err(CredError::TooFewSamples { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uwb::fixture::{generate_fixture, FixtureKind};

    #[test]
    fn unknown_anchor_in_records_is_named() {
        let mut data = generate_fixture(FixtureKind::Honest, 3);
        data.records[10].anchor_id = "Z9".into();
        let err = run_pipeline(&data, &UwbConfig::default(), &DiagnosisConfig::default(), 1).unwrap_err();
        assert_eq!(err, CredError::UnknownAnchor("Z9".into()));
    }

    #[test]
    fn periods_contain_their_packets() {
        let data = generate_fixture(FixtureKind::Honest, 3);
        let periods = build_periods(&data, &UwbConfig::default()).unwrap();
        assert!(!periods.is_empty());
        for p in &periods {
            assert!(p.packets.len() > 100);
            for pk in &p.packets {
                assert!(pk.records.iter().all(|r| p.contains(r.timestamp)));
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = UwbConfig { min_fixes: 2, ..UwbConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
