//! Monte Carlo study over the six credibility scenarios.
//!
//! Each trial draws one true covariance, one scaling factor and one bias
//! vector, then `n_runs` truth/estimate pairs. Trials are keyed by
//! `(scenario, trial)` so they can run in any order.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Uniform;
use rayon::prelude::*;

use crate::diagnosis::{baseline_nci, baseline_nees, diagnose, DiagnosisConfig, DiagnosisLabel};
use crate::error::{CredError, Result};
use crate::gauss::{random_spd, standard_normal_vector, MvnDistribution, SeededRng, SpdMatrix, Vector};
use crate::metrics::{ErrorSample, EvaluationSet, ReferenceMse};

/// Confidence of the NEES chi-square baseline.
pub const NEES_BASELINE_CONFIDENCE: f64 = 0.95;

/// Closed interval; `lo == hi` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn exact(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn draw(&self, rng: &mut SeededRng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.sample(Uniform::new_inclusive(self.lo, self.hi).expect("validated range"))
        }
    }

    fn validate(&self, what: &str, strictly_positive: bool) -> Result<()> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi;
        let sign_ok = if strictly_positive { self.lo > 0.0 } else { self.lo >= 0.0 };
        if !ok || !sign_ok {
            let bound = if strictly_positive { "0 < lo" } else { "0 <= lo" };
            return Err(CredError::InvalidRange(format!(
                "{what} [{}, {}] must satisfy {bound} <= hi",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    /// The scenario is identified by the label a perfect diagnoser returns.
    pub scenario: DiagnosisLabel,
    pub dim: usize,
    pub n_trials: usize,
    pub n_runs: usize,
    pub rho: Range,
    pub bias_norm: Range,
    pub eig: Range,
}

const OPTIMISTIC_RHO: Range = Range::new(0.1, 0.8);
const PESSIMISTIC_RHO: Range = Range::new(1.25, 10.0);
const BIAS_NORM: Range = Range::new(1.6, 2.4);

impl ScenarioSpec {
    /// Default parameters for one scenario: d = 2, 50 trials of 100 runs,
    /// true covariance eigenvalues in [0.5, 2].
    pub fn standard(scenario: DiagnosisLabel) -> Self {
        use DiagnosisLabel::*;
        let (rho, bias_norm) = match scenario {
            Credible => (Range::exact(1.0), Range::exact(0.0)),
            Optimism => (OPTIMISTIC_RHO, Range::exact(0.0)),
            Pessimism => (PESSIMISTIC_RHO, Range::exact(0.0)),
            Smm => (Range::exact(1.0), BIAS_NORM),
            OptimismSmm => (OPTIMISTIC_RHO, BIAS_NORM),
            PessimismSmm => (PESSIMISTIC_RHO, BIAS_NORM),
        };
        Self { scenario, dim: 2, n_trials: 50, n_runs: 100, rho, bias_norm, eig: Range::new(0.5, 2.0) }
    }

    pub fn standard_set() -> Vec<Self> {
        DiagnosisLabel::ALL.iter().map(|&s| Self::standard(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CredError::InvalidConfig("dimension must be positive".into()));
        }
        if self.n_trials == 0 {
            return Err(CredError::InvalidConfig("n_trials must be positive".into()));
        }
        if self.n_runs < self.dim + 1 || self.n_runs < 2 {
            return Err(CredError::InvalidConfig(format!("n_runs must be at least {}", (self.dim + 1).max(2))));
        }
        self.rho.validate("rho range", true)?;
        self.bias_norm.validate("bias norm range", false)?;
        self.eig.validate("eigenvalue range", true)
    }
}

/// One generated trial together with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedTrial {
    pub set: EvaluationSet,
    pub true_cov: SpdMatrix,
    pub rho: f64,
    /// Drawn bias magnitude; `bias` is this times a unit direction.
    pub bias_norm: f64,
    pub bias: Vector,
    /// Exact MSE `Σ + μμᵀ`, also attached to `set` as its reference.
    pub mse: SpdMatrix,
}

fn trial_rng(spec: &ScenarioSpec, trial_index: usize, root_seed: u64) -> SeededRng {
    SeededRng::new(root_seed).child_path(&[spec.scenario.index() as u64, trial_index as u64])
}

/// Uniform direction on the unit sphere.
fn random_direction(dim: usize, rng: &mut SeededRng) -> Vector {
    loop {
        let v = standard_normal_vector(dim, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Draw one trial: truth `x ~ N(0, Σ)`, estimate `x̂ ~ N(x + μ, Σ)`, claimed
/// covariance `ρΣ`.
pub fn generate_trial(spec: &ScenarioSpec, trial_index: usize, root_seed: u64) -> Result<GeneratedTrial> {
    spec.validate()?;
    let mut rng = trial_rng(spec, trial_index, root_seed).child(0);
    let d = spec.dim;
    let true_cov = random_spd(d, spec.eig.lo, spec.eig.hi, &mut rng)?;
    let rho = spec.rho.draw(&mut rng);
    let norm = spec.bias_norm.draw(&mut rng);
    let bias = if norm == 0.0 { Vector::zeros(d) } else { random_direction(d, &mut rng) * norm };
    let claimed = true_cov.scaled(rho)?;
    let truth_dist = MvnDistribution::new(Vector::zeros(d), true_cov.clone())?;
    let mut samples = Vec::with_capacity(spec.n_runs);
    for _ in 0..spec.n_runs {
        let x = truth_dist.sample(&mut rng);
        let x_hat = &x + &bias + truth_dist.draw_centered(&mut rng);
        samples.push(ErrorSample::from_estimate(x, x_hat, claimed.clone())?);
    }
    let mse = SpdMatrix::new(true_cov.matrix() + &bias * bias.transpose())?;
    let set = EvaluationSet::new(samples)?.with_reference(ReferenceMse::Shared(mse.clone()))?;
    Ok(GeneratedTrial { set, true_cov, rho, bias_norm: norm, bias, mse })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Proposed,
    Nees,
    Nci,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::Nees, Method::Nci];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Nees => "nees",
            Method::Nci => "nci",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub scenario: DiagnosisLabel,
    pub trial_index: usize,
    /// Seed of the trial's stream; regenerates the trial on its own.
    pub seed: u64,
    pub true_label: DiagnosisLabel,
    pub predicted: DiagnosisLabel,
    pub baselines: BTreeMap<Method, DiagnosisLabel>,
    pub rho: f64,
    pub bias_norm: f64,
}

impl TrialResult {
    pub fn label(&self, m: Method) -> DiagnosisLabel {
        match m {
            Method::Proposed => self.predicted,
            other => self.baselines[&other],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    /// Sorted by scenario, then trial.
    pub trials: Vec<TrialResult>,
    /// Scenarios in the order they were specified.
    pub scenarios: Vec<DiagnosisLabel>,
    pub accuracy: BTreeMap<(Method, DiagnosisLabel), f64>,
    /// `confusion[true][predicted]` for the proposed method, indexed by
    /// [`DiagnosisLabel::index`].
    pub confusion: [[usize; 6]; 6],
}

impl StudyReport {
    pub fn accuracy(&self, m: Method, scenario: DiagnosisLabel) -> f64 {
        self.accuracy[&(m, scenario)]
    }
}

/// Generate, diagnose and tally every trial of every scenario.
pub fn run_study(specs: &[ScenarioSpec], cfg: &DiagnosisConfig, root_seed: u64) -> Result<StudyReport> {
    cfg.validate()?;
    for s in specs {
        s.validate()?;
    }
    let jobs: Vec<(ScenarioSpec, usize)> =
        specs.iter().flat_map(|s| (0..s.n_trials).map(move |t| (*s, t))).collect();
    let trials: Vec<TrialResult> = jobs
        .par_iter()
        .map(|(spec, t)| run_trial(spec, *t, cfg, root_seed))
        .collect::<Result<_>>()?;

    let mut trials = trials;
    trials.sort_by_key(|r| (r.scenario, r.trial_index));

    let mut confusion = [[0usize; 6]; 6];
    let mut hits: BTreeMap<(Method, DiagnosisLabel), usize> = BTreeMap::new();
    let mut counts: BTreeMap<DiagnosisLabel, usize> = BTreeMap::new();
    for r in &trials {
        confusion[r.true_label.index()][r.predicted.index()] += 1;
        *counts.entry(r.scenario).or_default() += 1;
        for m in Method::ALL {
            *hits.entry((m, r.scenario)).or_default() += usize::from(r.label(m) == r.true_label);
        }
    }
    let mut accuracy = BTreeMap::new();
    for (&scenario, &n) in &counts {
        for m in Method::ALL {
            accuracy.insert((m, scenario), hits.get(&(m, scenario)).copied().unwrap_or(0) as f64 / n as f64);
        }
    }
    Ok(StudyReport { trials, scenarios: specs.iter().map(|s| s.scenario).collect(), accuracy, confusion })
}

fn run_trial(spec: &ScenarioSpec, trial_index: usize, cfg: &DiagnosisConfig, root_seed: u64) -> Result<TrialResult> {
    let rng = trial_rng(spec, trial_index, root_seed);
    let trial = generate_trial(spec, trial_index, root_seed)?;
    assert!(spec.rho.contains(trial.rho), "rho {} outside {:?}", trial.rho, spec.rho);
    let bias_norm = trial.bias_norm;
    assert!(spec.bias_norm.contains(bias_norm), "bias norm {bias_norm} outside {:?}", spec.bias_norm);
    let report = diagnose(&trial.set, cfg, &rng.child(1))?;
    let mut baselines = BTreeMap::new();
    baselines.insert(Method::Nees, baseline_nees(&trial.set, NEES_BASELINE_CONFIDENCE)?);
    baselines.insert(Method::Nci, baseline_nci(&trial.set, cfg.tau_nci_db)?);
    Ok(TrialResult {
        scenario: spec.scenario,
        trial_index,
        seed: rng.seed(),
        true_label: spec.scenario,
        predicted: report.label,
        baselines,
        rho: trial.rho,
        bias_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::anees;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn credible_trial_anees_in_chi_square_band() {
        let spec = ScenarioSpec::standard(DiagnosisLabel::Credible);
        let chi = ChiSquared::new(200.0).unwrap();
        let (lo, hi) = (chi.inverse_cdf(0.0005) / 100.0, chi.inverse_cdf(0.9995) / 100.0);
        for t in 0..10 {
            let trial = generate_trial(&spec, t, 42).unwrap();
            assert_eq!(trial.rho, 1.0);
            assert_eq!(trial.bias.norm(), 0.0);
            let a = anees(&trial.set).unwrap();
            assert!(a > lo && a < hi, "{a}");
        }
    }

    #[test]
    fn parameter_draws_in_declared_ranges() {
        for scenario in DiagnosisLabel::ALL {
            let spec = ScenarioSpec::standard(scenario);
            for t in 0..20 {
                let trial = generate_trial(&spec, t, 7).unwrap();
                assert!(spec.rho.contains(trial.rho));
                let n = trial.bias.norm();
                assert!(n >= spec.bias_norm.lo - 1e-12 && n <= spec.bias_norm.hi + 1e-12);
                let eig = trial.true_cov.matrix().clone().symmetric_eigen().eigenvalues;
                assert!(eig.iter().all(|e| *e >= 0.5 - 1e-9 && *e <= 2.0 + 1e-9));
            }
        }
        let smm = ScenarioSpec::standard(DiagnosisLabel::Smm);
        assert_eq!(smm.rho, Range::exact(1.0));
        assert_eq!(smm.bias_norm, Range::new(1.6, 2.4));
        assert_eq!(ScenarioSpec::standard(DiagnosisLabel::Optimism).rho, Range::new(0.1, 0.8));
    }

    #[test]
    fn trial_generation_is_order_independent() {
        let spec = ScenarioSpec::standard(DiagnosisLabel::OptimismSmm);
        let late = generate_trial(&spec, 3, 11).unwrap();
        let _ = generate_trial(&spec, 0, 11).unwrap();
        let again = generate_trial(&spec, 3, 11).unwrap();
        assert_eq!(late.set, again.set);
        assert_ne!(generate_trial(&spec, 4, 11).unwrap().set, late.set);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ScenarioSpec::standard(DiagnosisLabel::Optimism);
        spec.rho = Range::new(0.0, 0.8);
        assert!(matches!(spec.validate(), Err(CredError::InvalidRange(_))));
        spec.rho = Range::new(0.9, 0.8);
        assert!(matches!(spec.validate(), Err(CredError::InvalidRange(_))));
        let mut spec = ScenarioSpec::standard(DiagnosisLabel::Credible);
        spec.n_runs = 1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn small_study_shapes_and_determinism() {
        let specs: Vec<ScenarioSpec> = ScenarioSpec::standard_set()
            .into_iter()
            .map(|mut s| {
                s.n_trials = 3;
                s.n_runs = 40;
                s
            })
            .collect();
        let cfg = DiagnosisConfig {
            es_samples: 100,
            elt: crate::elt::EltConfig { n_resamples: 200, ..Default::default() },
            ..Default::default()
        };
        let a = run_study(&specs, &cfg, 5).unwrap();
        let b = run_study(&specs, &cfg, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 18);
        for row in a.confusion {
            assert_eq!(row.iter().sum::<usize>(), 3);
        }
        for r in &a.trials {
            assert_eq!(r.true_label, r.scenario);
            for m in [Method::Nees, Method::Nci] {
                assert!(!r.label(m).has_smm());
            }
        }
        for s in DiagnosisLabel::ALL.iter().filter(|s| s.has_smm()) {
            assert_eq!(a.accuracy(Method::Nees, *s), 0.0);
            assert_eq!(a.accuracy(Method::Nci, *s), 0.0);
        }
    }
}
