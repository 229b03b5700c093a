//! Properties of the public API that cut across modules.

use credible_core::diagnosis::{bias_correct, diagnose, DiagnosisConfig, DiagnosisLabel};
use credible_core::metrics::{anees, nees, ErrorSample, EvaluationSet};
use credible_core::sim::{generate_trial, ScenarioSpec};
use credible_core::{random_spd, sample_mvn, MvnDistribution, SeededRng, Vector};
use proptest::prelude::*;

fn scenario(index: usize) -> DiagnosisLabel {
    DiagnosisLabel::ALL[index % 6]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nees_scales_inversely_with_claimed_cov(seed in any::<u64>(), d in 1usize..5, rho in 0.01f64..100.0) {
        let mut rng = SeededRng::new(seed);
        let cov = random_spd(d, 0.5, 2.0, &mut rng).unwrap();
        let e = sample_mvn(&MvnDistribution::new(Vector::zeros(d), cov.clone()).unwrap(), 1, &mut rng).remove(0);
        let base = nees(&ErrorSample::new(e.clone(), cov.clone()).unwrap()).unwrap();
        let scaled = nees(&ErrorSample::new(e, cov.scaled(rho).unwrap()).unwrap()).unwrap();
        prop_assert!((scaled - base / rho).abs() <= 1e-10 * base.max(1.0) / rho.min(1.0));
    }

    #[test]
    fn bias_correction_centers_errors(seed in any::<u64>(), shift in prop::collection::vec(-5.0f64..5.0, 2)) {
        let mut rng = SeededRng::new(seed);
        let cov = random_spd(2, 0.5, 2.0, &mut rng).unwrap();
        let mu = Vector::from_vec(shift);
        let draws = sample_mvn(&MvnDistribution::new(mu, cov.clone()).unwrap(), 40, &mut rng);
        let samples = draws.into_iter().map(|e| ErrorSample::new(e, cov.clone()).unwrap()).collect();
        let set = EvaluationSet::new(samples).unwrap();
        let (corrected, bias) = bias_correct(&set);
        prop_assert!(corrected.mean_error().amax() < 1e-12);
        prop_assert!((bias - set.mean_error()).amax() < 1e-15);
        // Removing the sample mean can only lower the average NEES.
        prop_assert!(anees(&corrected).unwrap() <= anees(&set).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diagnosis_is_a_pure_function_of_seed(root in any::<u64>(), k in 0usize..6) {
        let mut spec = ScenarioSpec::standard(scenario(k));
        spec.n_runs = 40;
        let set = generate_trial(&spec, 0, root).unwrap().set;
        let cfg = DiagnosisConfig { es_samples: 200, ..DiagnosisConfig::default() };
        let a = diagnose(&set, &cfg, &SeededRng::new(root)).unwrap();
        let b = diagnose(&set, &cfg, &SeededRng::new(root)).unwrap();
        prop_assert_eq!(a.label, b.label);
        prop_assert_eq!(a.elt.p_value.to_bits(), b.elt.p_value.to_bits());
        prop_assert_eq!(a.nci_raw_db.to_bits(), b.nci_raw_db.to_bits());
        // Probes run only in the ambiguous branch.
        prop_assert_eq!(a.probes.is_some(), a.nci_corrected_db.is_some_and(|n| n > cfg.tau_nci_db));
        if !a.elt.decision {
            prop_assert!(!a.label.has_smm());
        } else {
            prop_assert!(a.label.has_smm());
        }
    }
}

#[test]
fn generated_trials_reproduce_their_scenario_parameters() {
    for label in DiagnosisLabel::ALL {
        let spec = ScenarioSpec::standard(label);
        let t = generate_trial(&spec, 3, 42).unwrap();
        assert!(spec.rho.contains(t.rho), "{label}: rho {}", t.rho);
        assert!(spec.bias_norm.contains(t.bias_norm), "{label}: |mu| {}", t.bias_norm);
        assert!((t.bias.norm() - t.bias_norm).abs() < 1e-12);
        assert_eq!(t.set.len(), spec.n_runs);
        assert_eq!(t.set.dim(), spec.dim);
    }
}
