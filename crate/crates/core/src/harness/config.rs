//! Experiment configuration: one JSON document per scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compound_poisson::ParamVector;
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::limit_engine::{BRule, Mode, Scaling, Scenario};
use crate::simulators::SimulatorSpec;

pub const MIN_M_REPS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for the CSV and JSON files; `--out-dir` wins over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub simulator: SimulatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub mode: Mode,
    pub b_n: BRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ParamVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_reps: Option<u64>,
    pub n_grid: Vec<usize>,
    pub m_reps: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("parse: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Parses and validates.
    pub fn load_valid(path: &Path) -> Result<Self> {
        let c = Self::load(path)?;
        c.validate()?;
        Ok(c)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            name: self.name.clone(),
            simulator: self.simulator.clone(),
            group: self.group.clone(),
            mode: self.mode,
            b_n: self.b_n.clone(),
            scaling: self.scaling,
            k_max: self.k_max,
            reference: self.reference.clone(),
            lambda_reps: self.lambda_reps,
        }
    }

    /// Every problem at once, each prefixed by its field path.
    pub fn errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        self.scenario().validate("", &mut errors);
        if self.n_grid.is_empty() {
            errors.push("n_grid: must not be empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            errors.push(format!("n_grid: must be strictly increasing, got {:?}", self.n_grid));
        }
        if self.m_reps < MIN_M_REPS {
            errors.push(format!("m_reps: must be at least {MIN_M_REPS}, got {}", self.m_reps));
        }
        if let BRule::Table(t) = &self.b_n {
            if t.len() != self.n_grid.len() {
                errors.push(format!(
                    "b_n: table has {} entries but n_grid has {}",
                    t.len(),
                    self.n_grid.len()
                ));
            }
        }
        if let Some(stem) = &self.output.stem {
            if stem.is_empty() || stem.contains(['/', '\\']) {
                errors.push(format!("output.stem: not a plain file name: {stem:?}"));
            }
        }
        if self.output.stem.is_none() && self.name.contains(['/', '\\']) {
            errors.push("name: used as file stem, must not contain path separators".into());
        }
        errors
    }

    pub fn validate(&self) -> Result<()> {
        let errors = self.errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex. Output paths
    /// do not take part, so moving the output directory keeps the hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSpec::default();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }

    pub fn stem(&self) -> &str {
        self.output.stem.as_deref().unwrap_or(&self.name)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "iid-min",
        "simulator": {"kind": "iid_field", "m": 1, "p": 0.05},
        "b_n": 1,
        "n_grid": [10],
        "m_reps": 100,
        "master_seed": 7
    }"#;

    #[test]
    fn minimal_parses() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.mode, Mode::Deterministic);
        assert_eq!(c.stem(), "iid-min");
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content_not_output() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.master_seed = 8;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn errors_name_fields() {
        let text = MINIMAL
            .replace("\"p\": 0.05", "\"p\": 1.5")
            .replace("[10]", "[10, 10]")
            .replace("\"m_reps\": 100", "\"m_reps\": 99");
        let errors = ExperimentConfig::from_json(&text).unwrap().errors();
        assert!(errors.iter().any(|e| e.starts_with("simulator.p:")), "{errors:?}");
        assert!(errors.iter().any(|e| e.starts_with("n_grid:")));
        assert!(errors.iter().any(|e| e.starts_with("m_reps:")));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = MINIMAL.replace("\"b_n\": 1", "\"b_n\": 1, \"bn\": 2");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn randomized_mode_parses() {
        let text = MINIMAL.replace(
            "\"b_n\": 1",
            r#""b_n": 1, "mode": {"kind": "randomized", "j": {"kind": "poisson_window", "scale": 1.0}}"#,
        );
        let c = ExperimentConfig::from_json(&text).unwrap();
        c.validate().unwrap();
        assert!(matches!(c.mode, Mode::Randomized(r) if r.spread == 1.0 && r.alpha == 0.5));
    }
}
