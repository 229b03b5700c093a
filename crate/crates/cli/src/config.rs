//! TOML run configuration. Every field has a default; command-line flags
//! override the file, and the fully resolved result is what the manifest
//! records.

use std::collections::BTreeMap;
use std::path::Path;

use credible_core::sim::Range;
use credible_core::uwb::{ColumnMap, UwbConfig};
use credible_core::{DiagnosisConfig, DiagnosisLabel, EltConfig, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub diagnosis: DiagnosisSection,
    pub simulate: SimulateSection,
    pub uwb: UwbSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            diagnosis: DiagnosisSection::default(),
            simulate: SimulateSection::default(),
            uwb: UwbSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosisSection {
    pub tau_nci_db: f64,
    pub probe_scale: f64,
    pub elt_resamples: usize,
    pub alpha_sig: f64,
    pub elt_exponent: f64,
    pub es_samples: usize,
}

impl Default for DiagnosisSection {
    fn default() -> Self {
        let d = DiagnosisConfig::default();
        Self {
            tau_nci_db: d.tau_nci_db,
            probe_scale: d.probe_scale,
            elt_resamples: d.elt.n_resamples,
            alpha_sig: d.elt.significance,
            elt_exponent: d.elt.alpha_exponent,
            es_samples: d.es_samples,
        }
    }
}

impl DiagnosisSection {
    pub fn to_config(&self) -> CliResult<DiagnosisConfig> {
        let cfg = DiagnosisConfig {
            tau_nci_db: self.tau_nci_db,
            probe_scale: self.probe_scale,
            elt: EltConfig {
                alpha_exponent: self.elt_exponent,
                n_resamples: self.elt_resamples,
                significance: self.alpha_sig,
            },
            es_samples: self.es_samples,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-scenario overrides of the standard parameter ranges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioOverride {
    pub rho: Option<Range>,
    pub bias_norm: Option<Range>,
    pub eig: Option<Range>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub trials: usize,
    pub runs: usize,
    pub dim: usize,
    /// Keyed by scenario name: credible, optimism, pessimism, smm,
    /// optimism_smm, pessimism_smm.
    pub scenarios: BTreeMap<String, ScenarioOverride>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let s = ScenarioSpec::standard(DiagnosisLabel::Credible);
        Self { trials: s.n_trials, runs: s.n_runs, dim: s.dim, scenarios: BTreeMap::new() }
    }
}

/// Config-file key of a scenario.
pub fn scenario_key(label: DiagnosisLabel) -> &'static str {
    match label {
        DiagnosisLabel::Credible => "credible",
        DiagnosisLabel::Optimism => "optimism",
        DiagnosisLabel::Pessimism => "pessimism",
        DiagnosisLabel::Smm => "smm",
        DiagnosisLabel::OptimismSmm => "optimism_smm",
        DiagnosisLabel::PessimismSmm => "pessimism_smm",
    }
}

impl SimulateSection {
    pub fn specs(&self) -> CliResult<Vec<ScenarioSpec>> {
        for key in self.scenarios.keys() {
            if !DiagnosisLabel::ALL.iter().any(|&l| scenario_key(l) == key) {
                return Err(CliError::Config(format!("unknown scenario '{key}' in [simulate.scenarios]")));
            }
        }
        DiagnosisLabel::ALL
            .iter()
            .map(|&label| {
                let mut spec = ScenarioSpec::standard(label);
                spec.n_trials = self.trials;
                spec.n_runs = self.runs;
                spec.dim = self.dim;
                if let Some(o) = self.scenarios.get(scenario_key(label)) {
                    spec.rho = o.rho.unwrap_or(spec.rho);
                    spec.bias_norm = o.bias_norm.unwrap_or(spec.bias_norm);
                    spec.eig = o.eig.unwrap_or(spec.eig);
                }
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UwbSection {
    pub packet_window_s: f64,
    pub v_max_mps: f64,
    pub min_duration_s: f64,
    pub min_fixes: usize,
    pub columns: ColumnMap,
}

impl Default for UwbSection {
    fn default() -> Self {
        let u = UwbConfig::default();
        Self {
            packet_window_s: u.packet_window,
            v_max_mps: u.v_max,
            min_duration_s: u.min_duration,
            min_fixes: u.min_fixes,
            columns: ColumnMap::default(),
        }
    }
}

impl UwbSection {
    pub fn to_config(&self) -> CliResult<UwbConfig> {
        let cfg = UwbConfig {
            packet_window: self.packet_window_s,
            v_max: self.v_max_mps,
            min_duration: self.min_duration_s,
            min_fixes: self.min_fixes,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
