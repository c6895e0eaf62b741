//! Experiment configuration (JSON, unknown keys rejected).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::ClassifierConfig;
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    Normal {
        mean: f64,
        variance: f64,
        centered: bool,
    },
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    Uniform {
        lambda: f64,
    },
    /// `λ_jk ~ N(mean, variance)` for `j > k`, mirrored.
    GaussianSymmetric {
        mean: f64,
        variance: f64,
    },
    Explicit {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    #[default]
    Ones,
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseSpec {
    /// Independent uniform phases on `[0, 2π)`.
    #[default]
    UniformCircle,
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_json: Option<PathBuf>,
    /// The normalized system that was integrated, as a system JSON file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    pub omega_spec: OmegaSpec,
    pub coupling_spec: CouplingSpec,
    #[serde(default)]
    pub d_spec: WeightSpec,
    #[serde(default)]
    pub theta0_spec: PhaseSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        let check_len = |what: &str, len: usize| {
            if len != self.n {
                Err(Error::Config(format!(
                    "{what} has length {len}, expected n = {}",
                    self.n
                )))
            } else {
                Ok(())
            }
        };
        match &self.omega_spec {
            OmegaSpec::Normal { variance, .. } if *variance < 0.0 => {
                return fail("omega variance must be >= 0".into())
            }
            OmegaSpec::Explicit { values } => check_len("omega values", values.len())?,
            _ => {}
        }
        match &self.coupling_spec {
            CouplingSpec::GaussianSymmetric { variance, .. } if *variance < 0.0 => {
                return fail("coupling variance must be >= 0".into())
            }
            CouplingSpec::Explicit { matrix } => {
                check_len("coupling matrix", matrix.len())?;
                for row in matrix {
                    check_len("coupling row", row.len())?;
                }
            }
            _ => {}
        }
        if let WeightSpec::Explicit { values } = &self.d_spec {
            check_len("d values", values.len())?;
        }
        if let PhaseSpec::Explicit { values } = &self.theta0_spec {
            check_len("theta0 values", values.len())?;
        }
        self.integrator.validate()?;
        self.classifier.validate()?;
        Ok(())
    }

    /// Same experiment with uniform coupling `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            coupling_spec: CouplingSpec::Uniform { lambda },
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 1, "n": 2,
        "omega_spec": {"kind": "explicit", "values": [0.5, -0.5]},
        "coupling_spec": {"kind": "uniform", "lambda": 2.0}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.d_spec, WeightSpec::Ones);
        assert_eq!(cfg.theta0_spec, PhaseSpec::UniformCircle);
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lengths() {
        let extra = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"colour\": 3");
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let inner = MINIMAL.replace("\"lambda\": 2.0", "\"lambda\": 2.0, \"mean\": 1");
        assert!(ExperimentConfig::from_json(&inner).is_err());
        let short = MINIMAL.replace("[0.5, -0.5]", "[0.5]");
        assert!(matches!(
            ExperimentConfig::from_json(&short),
            Err(Error::Config(_))
        ));
        let neg = MINIMAL.replace(
            r#"{"kind": "uniform", "lambda": 2.0}"#,
            r#"{"kind": "gaussian_symmetric", "mean": 0, "variance": -1}"#,
        );
        assert!(matches!(
            ExperimentConfig::from_json(&neg),
            Err(Error::Config(_))
        ));
    }
}
