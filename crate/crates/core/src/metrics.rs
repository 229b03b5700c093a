//! Credibility metrics: NEES, NCI, NLL and the energy score.
//!
//! Everything here operates on [`EvaluationSet`]s of [`ErrorSample`]s. A
//! sample always carries its error `e = x − x̂` and the claimed covariance;
//! the truth/estimate pair is optional because every score used here is
//! translation invariant, so `N(x̂, Σ̂)` scored at `x` equals `N(0, Σ̂)`
//! scored at `e` shifted by the same amount.

use std::f64::consts::PI;

use crate::error::{CredError, Result};
use crate::gauss::{Matrix, MvnDistribution, SeededRng, SpdMatrix, Vector};

/// One run's estimation error and claimed covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    error: Vector,
    claimed_cov: SpdMatrix,
    truth: Option<Vector>,
    estimate: Option<Vector>,
}

impl ErrorSample {
    pub fn new(error: Vector, claimed_cov: SpdMatrix) -> Result<Self> {
        if error.len() != claimed_cov.dim() {
            return Err(CredError::DimensionMismatch { expected: claimed_cov.dim(), got: error.len() });
        }
        Ok(Self { error, claimed_cov, truth: None, estimate: None })
    }

    /// Build from truth and estimate; the error is `truth − estimate`.
    pub fn from_estimate(truth: Vector, estimate: Vector, claimed_cov: SpdMatrix) -> Result<Self> {
        if truth.len() != estimate.len() {
            return Err(CredError::DimensionMismatch { expected: truth.len(), got: estimate.len() });
        }
        let mut s = Self::new(&truth - &estimate, claimed_cov)?;
        s.truth = Some(truth);
        s.estimate = Some(estimate);
        Ok(s)
    }

    pub fn error(&self) -> &Vector {
        &self.error
    }

    pub fn claimed_cov(&self) -> &SpdMatrix {
        &self.claimed_cov
    }

    pub fn truth(&self) -> Option<&Vector> {
        self.truth.as_ref()
    }

    pub fn estimate(&self) -> Option<&Vector> {
        self.estimate.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.error.len()
    }

    /// Predictive distribution and the point at which it is scored:
    /// `(N(x̂, Σ̂), x)` when both are known, otherwise `(N(0, Σ̂), e)`.
    pub fn predictive(&self) -> (MvnDistribution, Vector) {
        match (&self.truth, &self.estimate) {
            (Some(x), Some(xh)) => (
                MvnDistribution::new(xh.clone(), self.claimed_cov.clone()).expect("dims checked"),
                x.clone(),
            ),
            _ => (
                MvnDistribution::new(Vector::zeros(self.dim()), self.claimed_cov.clone()).expect("dims checked"),
                self.error.clone(),
            ),
        }
    }

    /// Remove `bias` from the error. The estimate moves by `+bias` so that
    /// `e = x − x̂` still holds.
    pub fn debiased(&self, bias: &Vector) -> Self {
        Self {
            error: &self.error - bias,
            claimed_cov: self.claimed_cov.clone(),
            truth: self.truth.clone(),
            estimate: self.estimate.as_ref().map(|xh| xh + bias),
        }
    }
}

/// Reference MSE `M = Σ + μμᵀ` of a perfectly credible estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMse {
    Shared(SpdMatrix),
    PerSample(Vec<SpdMatrix>),
}

impl ReferenceMse {
    fn get(&self, k: usize) -> &SpdMatrix {
        match self {
            ReferenceMse::Shared(m) => m,
            ReferenceMse::PerSample(ms) => &ms[k],
        }
    }
}

/// The N runs evaluated together.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    samples: Vec<ErrorSample>,
    reference: Option<ReferenceMse>,
}

impl EvaluationSet {
    pub fn new(samples: Vec<ErrorSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CredError::TooFewSamples { needed: 2, got: samples.len() });
        }
        let d = samples[0].dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != d) {
            return Err(CredError::DimensionMismatch { expected: d, got: bad.dim() });
        }
        Ok(Self { samples, reference: None })
    }

    pub fn with_reference(mut self, reference: ReferenceMse) -> Result<Self> {
        let d = self.dim();
        match &reference {
            ReferenceMse::Shared(m) if m.dim() != d => {
                return Err(CredError::DimensionMismatch { expected: d, got: m.dim() })
            }
            ReferenceMse::PerSample(ms) => {
                if ms.len() != self.len() {
                    return Err(CredError::DimensionMismatch { expected: self.len(), got: ms.len() });
                }
                if let Some(bad) = ms.iter().find(|m| m.dim() != d) {
                    return Err(CredError::DimensionMismatch { expected: d, got: bad.dim() });
                }
            }
            _ => {}
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn without_reference(mut self) -> Self {
        self.reference = None;
        self
    }

    pub fn samples(&self) -> &[ErrorSample] {
        &self.samples
    }

    pub fn reference(&self) -> Option<&ReferenceMse> {
        self.reference.as_ref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn mean_error(&self) -> Vector {
        self.samples.iter().fold(Vector::zeros(self.dim()), |acc, s| acc + s.error()) / self.len() as f64
    }
}

/// Aggregate of the four metrics over a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub anees: f64,
    pub nci_db: f64,
    /// nats
    pub mean_nll: f64,
    /// state units
    pub mean_es: f64,
}

/// `ε = eᵀ Σ̂⁻¹ e`.
pub fn nees(s: &ErrorSample) -> Result<f64> {
    s.claimed_cov().quad_form_inv(s.error())
}

pub fn anees(set: &EvaluationSet) -> Result<f64> {
    let mut total = 0.0;
    for s in set.samples() {
        total += nees(s)?;
    }
    Ok(total / set.len() as f64)
}

/// Noncredibility index in dB against the set's supplied reference MSE.
pub fn nci(set: &EvaluationSet) -> Result<f64> {
    let reference = set.reference().ok_or(CredError::MissingReference)?;
    nci_against(set, reference)
}

/// NCI against the supplied reference, or against [`estimate_mse`] when the
/// set carries none.
pub fn nci_or_estimated(set: &EvaluationSet) -> Result<f64> {
    match set.reference() {
        Some(r) => nci_against(set, r),
        None => nci_against(set, &ReferenceMse::Shared(estimate_mse(set)?)),
    }
}

pub fn nci_against(set: &EvaluationSet, reference: &ReferenceMse) -> Result<f64> {
    let n = set.len() as f64;
    let mut sum_log = 0.0;
    let mut sum_log_ref = 0.0;
    for (k, s) in set.samples().iter().enumerate() {
        let eps = nees(s)?;
        let eps_ref = reference.get(k).quad_form_inv(s.error())?;
        if !(eps > 0.0) || !(eps_ref > 0.0) {
            return Err(CredError::DegenerateError { index: k });
        }
        sum_log += eps.log10();
        sum_log_ref += eps_ref.log10();
    }
    Ok(10.0 * sum_log / n - 10.0 * sum_log_ref / n)
}

/// Empirical second moment `(1/N) Σ e eᵀ`.
pub fn estimate_mse(set: &EvaluationSet) -> Result<SpdMatrix> {
    let d = set.dim();
    if set.len() < d + 1 {
        return Err(CredError::TooFewSamples { needed: d + 1, got: set.len() });
    }
    let m = set
        .samples()
        .iter()
        .fold(Matrix::zeros(d, d), |acc, s| acc + s.error() * s.error().transpose())
        / set.len() as f64;
    SpdMatrix::new(m).map_err(|_| CredError::SingularMse)
}

/// Gaussian negative log-likelihood in nats.
pub fn nll(pred: &MvnDistribution, x: &Vector) -> Result<f64> {
    if x.len() != pred.dim() {
        return Err(CredError::DimensionMismatch { expected: pred.dim(), got: x.len() });
    }
    let q = pred.cov().quad_form_inv(&(x - pred.mean()))?;
    Ok(0.5 * (q + pred.cov().ln_det() + pred.dim() as f64 * (2.0 * PI).ln()))
}

/// Energy score `E‖Y − x‖ − ½ E‖Y − Y′‖` by Monte Carlo.
///
/// The first term averages over all `n_samples` draws, the second over the
/// `n_samples / 2` disjoint consecutive pairs. The raw estimate is returned
/// and may dip slightly below zero through Monte Carlo noise.
pub fn energy_score(pred: &MvnDistribution, x: &Vector, n_samples: usize, rng: &mut SeededRng) -> Result<f64> {
    if n_samples < 2 {
        return Err(CredError::TooFewSamples { needed: 2, got: n_samples });
    }
    if x.len() != pred.dim() {
        return Err(CredError::DimensionMismatch { expected: pred.dim(), got: x.len() });
    }
    let draws: Vec<Vector> = (0..n_samples).map(|_| pred.draw_centered(rng)).collect();
    Ok(energy_score_from_draws(&draws, 1.0, &(x - pred.mean())))
}

/// Energy score from zero-mean draws `z_j` of the claimed covariance, with
/// the predictive covariance scaled by `scale` (draws become `√scale · z_j`)
/// and `offset = x − mean`.
pub(crate) fn energy_score_from_draws(draws: &[Vector], scale: f64, offset: &Vector) -> f64 {
    let r = scale.sqrt();
    let n = draws.len();
    let term1 = draws.iter().map(|z| (z * r - offset).norm()).sum::<f64>() / n as f64;
    let pairs = n / 2;
    let term2 = (0..pairs).map(|i| (&draws[2 * i] - &draws[2 * i + 1]).norm() * r).sum::<f64>() / pairs as f64;
    term1 - 0.5 * term2
}

/// Computes all four metrics. NCI uses the supplied reference or the
/// empirical MSE; ES draws use one child stream per sample.
pub fn metric_report(set: &EvaluationSet, es_samples: usize, rng: &SeededRng) -> Result<MetricReport> {
    let anees = anees(set)?;
    let nci_db = nci_or_estimated(set)?;
    let mut nll_sum = 0.0;
    let mut es_sum = 0.0;
    for (k, s) in set.samples().iter().enumerate() {
        let (pred, x) = s.predictive();
        nll_sum += nll(&pred, &x)?;
        es_sum += energy_score(&pred, &x, es_samples, &mut rng.child(k as u64))?;
    }
    let n = set.len() as f64;
    Ok(MetricReport { anees, nci_db, mean_nll: nll_sum / n, mean_es: es_sum / n })
}

/// Closed-form expectations for Gaussian errors `e ~ N(μ, Σ)` scored against
/// a claimed covariance `Σ̂`.
pub mod analytic {
    use super::*;

    /// `E[ε] = tr(Σ̂⁻¹Σ) + μᵀΣ̂⁻¹μ`.
    pub fn expected_nees(true_cov: &SpdMatrix, claimed: &SpdMatrix, mu: &Vector) -> Result<f64> {
        let inv = claimed.inverse();
        Ok((&inv * true_cov.matrix()).trace() + claimed.quad_form_inv(mu)?)
    }

    /// `E[NLL] = ½(tr(Σ̂⁻¹Σ) + μᵀΣ̂⁻¹μ + ln|Σ̂| + d ln 2π)`.
    pub fn expected_nll(true_cov: &SpdMatrix, claimed: &SpdMatrix, mu: &Vector) -> Result<f64> {
        let d = claimed.dim() as f64;
        Ok(0.5 * (expected_nees(true_cov, claimed, mu)? + claimed.ln_det() + d * (2.0 * PI).ln()))
    }

    /// `ρ − 1/ρ − 2 ln ρ`; `(d/2)` times this is `E[NLL](1/ρ) − E[NLL](ρ)`
    /// under pure covariance scaling.
    pub fn nll_asymmetry(rho: f64) -> f64 {
        rho - 1.0 / rho - 2.0 * rho.ln()
    }

    /// Expected NLL change when the claimed covariance of a credible
    /// estimator is scaled by `scale`: `(d/2)(1/scale + ln scale − 1)`.
    pub fn expected_nll_probe(d: usize, scale: f64) -> f64 {
        0.5 * d as f64 * (1.0 / scale + scale.ln() - 1.0)
    }
}
