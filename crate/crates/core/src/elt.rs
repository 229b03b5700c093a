//! Empirical location test.
//!
//! Whitened errors `s_k` of an estimator without systematic bias are
//! centrally symmetric. The test statistic is the energy distance between
//! the empirical distributions of `{s_k}` and `{−s_k}`,
//!
//! ```text
//! T = 2/(N(N−1)) Σ_{i<j} ( ‖s_i + s_j‖^α − ‖s_i − s_j‖^α )
//! ```
//!
//! calibrated by Rademacher sign flips. Flipping `s_i` and `s_j` by `ξ_i`,
//! `ξ_j` maps the pair term `D_ij` to `ξ_i ξ_j D_ij`, so every replicate is a
//! quadratic form in the sign vector over one precomputed pair matrix.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{CredError, Result};
use crate::gauss::{whiten, SeededRng, Vector};
use crate::metrics::EvaluationSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EltConfig {
    /// Exponent of the energy distance, in `(0, 2]`.
    pub alpha_exponent: f64,
    /// Number of sign-flip replicates `B`.
    pub n_resamples: usize,
    pub significance: f64,
}

impl Default for EltConfig {
    fn default() -> Self {
        Self { alpha_exponent: 1.0, n_resamples: 1000, significance: 0.05 }
    }
}

impl EltConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_exponent > 0.0 && self.alpha_exponent <= 2.0) {
            return Err(CredError::InvalidConfig(format!(
                "energy exponent must lie in (0, 2], got {}",
                self.alpha_exponent
            )));
        }
        if self.n_resamples < 1 {
            return Err(CredError::InvalidConfig("at least one resample is required".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(CredError::InvalidConfig(format!(
                "significance must lie in (0, 1), got {}",
                self.significance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EltOutcome {
    pub t_obs: f64,
    pub p_value: f64,
    /// `true` when there is evidence of a systematic bias.
    pub decision: bool,
}

fn pow_norm(v: &Vector, alpha: f64) -> f64 {
    let n = v.norm();
    if alpha == 1.0 {
        n
    } else {
        n.powf(alpha)
    }
}

fn check_samples(s: &[Vector]) -> Result<()> {
    if s.len() < 2 {
        return Err(CredError::TooFewSamples { needed: 2, got: s.len() });
    }
    let d = s[0].len();
    if let Some(bad) = s.iter().find(|v| v.len() != d) {
        return Err(CredError::DimensionMismatch { expected: d, got: bad.len() });
    }
    Ok(())
}

/// Pairwise energy statistic between `{s_k}` and its mirror image.
pub fn energy_statistic(s: &[Vector], alpha: f64) -> Result<f64> {
    check_samples(s)?;
    let n = s.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += pow_norm(&(&s[i] + &s[j]), alpha) - pow_norm(&(&s[i] - &s[j]), alpha);
        }
    }
    Ok(2.0 * total / (n * (n - 1)) as f64)
}

/// Upper-triangular pair terms `D_ij`, row-major over `i < j`.
struct PairTerms {
    n: usize,
    d: Vec<f64>,
}

impl PairTerms {
    fn new(s: &[Vector], alpha: f64) -> Self {
        let n = s.len();
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                d.push(pow_norm(&(&s[i] + &s[j]), alpha) - pow_norm(&(&s[i] - &s[j]), alpha));
            }
        }
        Self { n, d }
    }

    fn norm(&self) -> f64 {
        2.0 / (self.n * (self.n - 1)) as f64
    }

    #[cfg(test)]
    fn observed(&self) -> f64 {
        self.norm() * self.d.iter().sum::<f64>()
    }

    fn flipped(&self, signs: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut idx = 0;
        for i in 0..self.n {
            let mut row = 0.0;
            for &sj in &signs[(i + 1)..] {
                row += sj * self.d[idx];
                idx += 1;
            }
            total += signs[i] * row;
        }
        self.norm() * total
    }
}

/// Sign-flip randomization test on already-whitened errors.
pub fn elt_test_whitened(s: &[Vector], cfg: &EltConfig, rng: &mut SeededRng) -> Result<EltOutcome> {
    cfg.validate()?;
    check_samples(s)?;
    let terms = PairTerms::new(s, cfg.alpha_exponent);
    let n = s.len();
    // Same summation path as the replicates so exact sign-equivalent
    // replicates tie rather than differ by rounding.
    let t_obs = terms.flipped(&vec![1.0; n]);
    // Signs are drawn sequentially so the outcome does not depend on the
    // thread pool.
    let signs: Vec<Vec<f64>> = (0..cfg.n_resamples)
        .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
        .collect();
    let exceed = signs.par_iter().filter(|xi| terms.flipped(xi) >= t_obs).count();
    let p_value = (1 + exceed) as f64 / (cfg.n_resamples + 1) as f64;
    Ok(EltOutcome { t_obs, p_value, decision: p_value < cfg.significance })
}

/// Whiten each error by its own claimed covariance, then run the test.
pub fn elt_test(set: &EvaluationSet, cfg: &EltConfig, rng: &mut SeededRng) -> Result<EltOutcome> {
    let s = whitened_errors(set)?;
    elt_test_whitened(&s, cfg, rng)
}

pub fn whitened_errors(set: &EvaluationSet) -> Result<Vec<Vector>> {
    set.samples().iter().map(|x| whiten(x.error(), x.claimed_cov())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{random_spd, standard_normal_vector, SpdMatrix};
    use crate::metrics::ErrorSample;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn statistic_hand_values() {
        assert_relative_eq!(energy_statistic(&[v(&[1.0]), v(&[-1.0])], 1.0).unwrap(), -2.0);
        assert_relative_eq!(energy_statistic(&[v(&[3.0]), v(&[3.0])], 1.0).unwrap(), 6.0);
        // α = 2: ‖a+b‖² − ‖a−b‖² = 4⟨a,b⟩.
        assert_relative_eq!(energy_statistic(&[v(&[1.0, 2.0]), v(&[3.0, -1.0])], 2.0).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn statistic_sign_flip_invariant_on_mirrored_set() {
        let mut rng = SeededRng::new(3);
        let mut s = Vec::new();
        for _ in 0..10 {
            let x = standard_normal_vector(2, &mut rng);
            s.push(-&x);
            s.push(x);
        }
        let flipped: Vec<Vector> = s.iter().map(|x| -x).collect();
        assert_relative_eq!(
            energy_statistic(&s, 1.0).unwrap(),
            energy_statistic(&flipped, 1.0).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(energy_statistic(&[v(&[1.0])], 1.0), Err(CredError::TooFewSamples { .. })));
        let r = elt_test_whitened(&[v(&[1.0])], &EltConfig::default(), &mut SeededRng::new(0));
        assert!(matches!(r, Err(CredError::TooFewSamples { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = [
            EltConfig { alpha_exponent: 0.0, ..Default::default() },
            EltConfig { alpha_exponent: 2.5, ..Default::default() },
            EltConfig { n_resamples: 0, ..Default::default() },
            EltConfig { significance: 1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(EltConfig::default().validate().is_ok());
    }

    #[test]
    fn pair_matrix_matches_direct_statistic() {
        let mut rng = SeededRng::new(9);
        let s: Vec<Vector> = (0..40).map(|_| standard_normal_vector(3, &mut rng)).collect();
        for alpha in [0.5, 1.0, 1.7, 2.0] {
            let terms = PairTerms::new(&s, alpha);
            assert_relative_eq!(terms.observed(), energy_statistic(&s, alpha).unwrap(), max_relative = 1e-12);
            let xi: Vec<f64> = (0..40).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let flipped: Vec<Vector> = s.iter().zip(&xi).map(|(x, &c)| x * c).collect();
            assert_relative_eq!(
                terms.flipped(&xi),
                energy_statistic(&flipped, alpha).unwrap(),
                max_relative = 1e-9,
                epsilon = 1e-12
            );
        }
    }

    fn gaussian_set(n: usize, mu: &Vector, cov: &SpdMatrix, rng: &mut SeededRng) -> EvaluationSet {
        let samples = (0..n)
            .map(|_| ErrorSample::new(cov.lower() * standard_normal_vector(mu.len(), rng) + mu, cov.clone()).unwrap())
            .collect();
        EvaluationSet::new(samples).unwrap()
    }

    #[test]
    fn p_value_bounds_and_decision_rule() {
        let mut rng = SeededRng::new(10);
        let cfg = EltConfig { n_resamples: 199, ..Default::default() };
        for _ in 0..20 {
            let set = gaussian_set(30, &v(&[0.3, 0.0]), &SpdMatrix::identity(2), &mut rng);
            let out = elt_test(&set, &cfg, &mut rng).unwrap();
            assert!(out.p_value >= 1.0 / 200.0 && out.p_value <= 1.0);
            assert_eq!(out.decision, out.p_value < cfg.significance);
        }
    }

    #[test]
    fn reproducible_with_seed() {
        let mut rng = SeededRng::new(11);
        let set = gaussian_set(50, &v(&[0.2, 0.1]), &SpdMatrix::identity(2), &mut rng);
        let a = elt_test(&set, &EltConfig::default(), &mut SeededRng::new(5)).unwrap();
        let b = elt_test(&set, &EltConfig::default(), &mut SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strong_bias_is_detected() {
        let mut rng = SeededRng::new(12);
        let cov = random_spd(2, 0.5, 2.0, &mut rng).unwrap();
        let set = gaussian_set(100, &v(&[2.0, 2.0]), &cov, &mut rng);
        let out = elt_test(&set, &EltConfig::default(), &mut rng).unwrap();
        assert!(out.decision);
        assert_relative_eq!(out.p_value, 1.0 / 1001.0);
    }

    #[test]
    fn per_sample_whitening() {
        let samples = vec![
            ErrorSample::new(v(&[2.0, 0.0]), SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap()).unwrap(),
            ErrorSample::new(v(&[0.0, 3.0]), SpdMatrix::from_diagonal(&[1.0, 9.0]).unwrap()).unwrap(),
        ];
        let s = whitened_errors(&EvaluationSet::new(samples).unwrap()).unwrap();
        assert_eq!(s, vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use crate::gauss::standard_normal_vector;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn statistic_permutation_invariant(seed in any::<u64>(), n in 2usize..30, alpha in 0.2f64..2.0) {
            let mut rng = SeededRng::new(seed);
            let s: Vec<Vector> = (0..n).map(|_| standard_normal_vector(2, &mut rng)).collect();
            let mut perm = s.clone();
            perm.reverse();
            perm.rotate_left(n / 3);
            let a = energy_statistic(&s, alpha).unwrap();
            let b = energy_statistic(&perm, alpha).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }

        #[test]
        fn p_value_never_below_floor(seed in any::<u64>(), b in 1usize..200) {
            let mut rng = SeededRng::new(seed);
            let s: Vec<Vector> = (0..10).map(|_| standard_normal_vector(2, &mut rng)).collect();
            let cfg = EltConfig { n_resamples: b, ..Default::default() };
            let out = elt_test_whitened(&s, &cfg, &mut rng).unwrap();
            prop_assert!(out.p_value >= 1.0 / (b as f64 + 1.0) && out.p_value <= 1.0);
        }
    }
}
