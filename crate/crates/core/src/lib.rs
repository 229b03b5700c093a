//! Credibility assessment for state estimators.
//!
//! Given estimation errors and the covariances an estimator claims for them,
//! decide whether the claimed uncertainty is credible and, if not, whether
//! the estimator is optimistic, pessimistic, systematically biased, or a
//! combination.
//!
//! - [`gauss`]: SPD matrices, whitening, seeded Gaussian sampling.
//! - [`metrics`]: NEES, NCI, NLL and energy score.
//! - [`elt`]: energy-distance location test with sign-flip calibration.
//! - [`diagnosis`]: the six-way diagnosis and single-metric baselines.
//! - [`sim`]: the six-scenario Monte Carlo study.
//! - [`uwb`]: UWB range logs to per-period diagnoses.

pub mod diagnosis;
pub mod elt;
pub mod error;
pub mod gauss;
pub mod metrics;
pub mod sim;
pub mod uwb;

pub use diagnosis::{
    baseline_nci, baseline_nees, bias_correct, diagnose, directional_probes, DiagnosisConfig, DiagnosisLabel,
    DiagnosisReport, ProbeResult,
};
pub use elt::{elt_test, energy_statistic, EltConfig, EltOutcome};
pub use error::{CredError, Result};
pub use gauss::{cholesky_lower, random_spd, sample_mvn, whiten, Matrix, MvnDistribution, SeededRng, SpdMatrix, Vector};
pub use metrics::{
    energy_score, estimate_mse, metric_report, nci, nees, nll, ErrorSample, EvaluationSet, MetricReport, ReferenceMse,
};
pub use sim::{generate_trial, run_study, Method, Range, ScenarioSpec, StudyReport, TrialResult};
