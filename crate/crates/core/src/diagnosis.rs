//! Unified credibility diagnosis.
//!
//! The location test decides whether a systematic bias is present. Without
//! one, the raw NCI alone gives the direction. With one, the mean error is
//! removed and the NCI of the corrected errors is checked; a positive value
//! is ambiguous (residual bias or genuine optimism) and is resolved by
//! scaling the claimed covariance by `1/c` and `c` and comparing how NLL and
//! the energy score respond.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::elt::{elt_test, EltConfig, EltOutcome};
use crate::error::{CredError, Result};
use crate::gauss::{SeededRng, Vector};
use crate::metrics::{anees, energy_score_from_draws, nci_or_estimated, nll, EvaluationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosisLabel {
    Credible,
    Optimism,
    Pessimism,
    Smm,
    OptimismSmm,
    PessimismSmm,
}

impl DiagnosisLabel {
    pub const ALL: [DiagnosisLabel; 6] = [
        DiagnosisLabel::Credible,
        DiagnosisLabel::Optimism,
        DiagnosisLabel::Pessimism,
        DiagnosisLabel::Smm,
        DiagnosisLabel::OptimismSmm,
        DiagnosisLabel::PessimismSmm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosisLabel::Credible => "Credible",
            DiagnosisLabel::Optimism => "Optimism",
            DiagnosisLabel::Pessimism => "Pessimism",
            DiagnosisLabel::Smm => "SMM",
            DiagnosisLabel::OptimismSmm => "Optimism+SMM",
            DiagnosisLabel::PessimismSmm => "Pessimism+SMM",
        }
    }

    /// Whether the label asserts a systematic model bias.
    pub fn has_smm(self) -> bool {
        matches!(self, DiagnosisLabel::Smm | DiagnosisLabel::OptimismSmm | DiagnosisLabel::PessimismSmm)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DiagnosisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiagnosisLabel {
    type Err = CredError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "credible" => DiagnosisLabel::Credible,
            "optimism" => DiagnosisLabel::Optimism,
            "pessimism" => DiagnosisLabel::Pessimism,
            "smm" => DiagnosisLabel::Smm,
            "optimismsmm" => DiagnosisLabel::OptimismSmm,
            "pessimismsmm" => DiagnosisLabel::PessimismSmm,
            _ => return Err(CredError::InvalidConfig(format!("unknown label '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosisConfig {
    pub tau_nci_db: f64,
    /// Probe scale `c > 1`.
    pub probe_scale: f64,
    pub elt: EltConfig,
    /// Energy-score draws per sample (shared across the three probe scales).
    pub es_samples: usize,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        Self { tau_nci_db: 0.5, probe_scale: 2.0, elt: EltConfig::default(), es_samples: 1000 }
    }
}

impl DiagnosisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_nci_db > 0.0) {
            return Err(CredError::InvalidConfig(format!("tau_nci_db must be positive, got {}", self.tau_nci_db)));
        }
        if !(self.probe_scale > 1.0) || !self.probe_scale.is_finite() {
            return Err(CredError::InvalidConfig(format!("probe_scale must exceed 1, got {}", self.probe_scale)));
        }
        if self.es_samples < 2 {
            return Err(CredError::InvalidConfig("es_samples must be at least 2".into()));
        }
        self.elt.validate()
    }
}

/// Directional probe outcome, averaged over the set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub delta_nll_minus: f64,
    pub delta_nll_plus: f64,
    pub delta_es_minus: f64,
    pub delta_es_plus: f64,
    pub srd_nll: f64,
    pub srd_es: f64,
}

impl ProbeResult {
    pub fn all_positive(&self) -> bool {
        self.delta_nll_minus > 0.0 && self.delta_nll_plus > 0.0 && self.delta_es_minus > 0.0 && self.delta_es_plus > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisReport {
    pub label: DiagnosisLabel,
    pub elt: EltOutcome,
    pub nci_raw_db: f64,
    pub nci_corrected_db: Option<f64>,
    pub probes: Option<ProbeResult>,
    pub bias_estimate: Option<Vector>,
}

/// Subtract the sample-mean error. Corrected errors have zero sample mean
/// and estimates move so that `e = x − x̌` still holds. The supplied
/// reference MSE described the uncorrected estimator and is dropped.
pub fn bias_correct(set: &EvaluationSet) -> (EvaluationSet, Vector) {
    let bias = set.mean_error();
    let samples = set.samples().iter().map(|s| s.debiased(&bias)).collect();
    let corrected = EvaluationSet::new(samples).expect("same shape as input");
    (corrected, bias)
}

/// Slope relative difference `(c|Δ⁻| − |Δ⁺|)/|Δ⁺|`.
fn srd(c: f64, minus: f64, plus: f64, what: &'static str) -> Result<f64> {
    if plus == 0.0 {
        return Err(CredError::DegenerateProbe(what));
    }
    Ok((c * minus.abs() - plus.abs()) / plus.abs())
}

/// NLL and energy score at covariance scales `1/c`, `1` and `c`.
///
/// For each sample one set of zero-mean draws from the claimed covariance
/// is reused at every scale (scaled by `√scale`), so the ES differences are
/// free of between-scale sampling noise.
pub fn directional_probes(set: &EvaluationSet, cfg: &DiagnosisConfig, rng: &SeededRng) -> Result<ProbeResult> {
    let c = cfg.probe_scale;
    let scales = [1.0 / c, 1.0, c];
    let per_sample: Vec<Result<[f64; 4]>> = set
        .samples()
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let (pred, x) = s.predictive();
            let offset = &x - pred.mean();
            let mut nlls = [0.0; 3];
            for (slot, &scale) in nlls.iter_mut().zip(&scales) {
                *slot = nll(&pred.with_scaled_cov(scale)?, &x)?;
            }
            let mut child = rng.child(k as u64);
            let draws: Vec<Vector> = (0..cfg.es_samples).map(|_| pred.draw_centered(&mut child)).collect();
            let es: Vec<f64> = scales.iter().map(|&sc| energy_score_from_draws(&draws, sc, &offset)).collect();
            Ok([nlls[0] - nlls[1], nlls[2] - nlls[1], es[0] - es[1], es[2] - es[1]])
        })
        .collect();
    let mut sums = [0.0; 4];
    for r in per_sample {
        let r = r?;
        for (acc, v) in sums.iter_mut().zip(r) {
            *acc += v;
        }
    }
    let n = set.len() as f64;
    let [dnm, dnp, dem, dep] = sums.map(|s| s / n);
    Ok(ProbeResult {
        delta_nll_minus: dnm,
        delta_nll_plus: dnp,
        delta_es_minus: dem,
        delta_es_plus: dep,
        srd_nll: srd(c, dnm, dnp, "NLL")?,
        srd_es: srd(c, dem, dep, "ES")?,
    })
}

fn nci_direction(nci_db: f64, tau: f64) -> DiagnosisLabel {
    if nci_db < -tau {
        DiagnosisLabel::Pessimism
    } else if nci_db > tau {
        DiagnosisLabel::Optimism
    } else {
        DiagnosisLabel::Credible
    }
}

/// Full diagnosis. The location test and the raw NCI see the uncorrected
/// errors; the corrected NCI uses the empirical MSE of the corrected errors.
pub fn diagnose(set: &EvaluationSet, cfg: &DiagnosisConfig, rng: &SeededRng) -> Result<DiagnosisReport> {
    cfg.validate()?;
    let elt = elt_test(set, &cfg.elt, &mut rng.child(0))?;
    let nci_raw_db = nci_or_estimated(set)?;
    let tau = cfg.tau_nci_db;

    if !elt.decision {
        return Ok(DiagnosisReport {
            label: nci_direction(nci_raw_db, tau),
            elt,
            nci_raw_db,
            nci_corrected_db: None,
            probes: None,
            bias_estimate: None,
        });
    }

    let (corrected, bias) = bias_correct(set);
    let nci_corr = nci_or_estimated(&corrected)?;
    let mut probes = None;
    let label = if nci_corr < -tau {
        DiagnosisLabel::PessimismSmm
    } else if nci_corr > tau {
        let p = directional_probes(&corrected, cfg, &rng.child(1))?;
        probes = Some(p);
        if p.all_positive() {
            DiagnosisLabel::Smm
        } else if p.srd_nll > p.srd_es {
            DiagnosisLabel::OptimismSmm
        } else {
            DiagnosisLabel::Smm
        }
    } else {
        DiagnosisLabel::Smm
    };
    Ok(DiagnosisReport {
        label,
        elt,
        nci_raw_db,
        nci_corrected_db: Some(nci_corr),
        probes,
        bias_estimate: Some(bias),
    })
}

/// Two-sided chi-square test on `N · ANEES` with `N · d` degrees of freedom.
pub fn baseline_nees(set: &EvaluationSet, confidence: f64) -> Result<DiagnosisLabel> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CredError::InvalidConfig(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let n = set.len() as f64;
    let dof = n * set.dim() as f64;
    let chi = ChiSquared::new(dof).map_err(|e| CredError::InvalidConfig(e.to_string()))?;
    let lower = chi.inverse_cdf((1.0 - confidence) / 2.0);
    let upper = chi.inverse_cdf((1.0 + confidence) / 2.0);
    let stat = n * anees(set)?;
    Ok(if stat > upper {
        DiagnosisLabel::Optimism
    } else if stat < lower {
        DiagnosisLabel::Pessimism
    } else {
        DiagnosisLabel::Credible
    })
}

/// Threshold rule on the raw NCI.
pub fn baseline_nci(set: &EvaluationSet, tau_db: f64) -> Result<DiagnosisLabel> {
    Ok(nci_direction(nci_or_estimated(set)?, tau_db))
}
