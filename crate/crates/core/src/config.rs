//! Run configuration: everything a CLI invocation resolves to, serialized
//! verbatim into every report.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::SynthKind;
use crate::error::{Error, Result};
use crate::experiment::AttackSelection;
use crate::ingest::DatasetSpec;
use crate::model::MlpConfig;
use crate::space::Metric;

/// Where the experiment's data comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Csv(DatasetSpec),
    Synth {
        kind: SynthKind,
        m: usize,
        n: usize,
        k: usize,
        spread: f64,
        train_fraction: f64,
        test_fraction: f64,
    },
}

/// Which classifier family to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Mlp,
    Logistic,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Mlp => write!(f, "mlp"),
            ModelKind::Logistic => write!(f, "logistic"),
        }
    }
}

/// How the masked feature set S is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownRule {
    /// The top-k most informative features.
    Mrmr(usize),
    /// Explicit feature indices.
    Explicit(Vec<usize>),
}

impl UnknownRule {
    /// Parse `"mrmr:k"` or a comma-separated index list.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("mrmr:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad mrmr rule {s:?}")))?;
            Ok(UnknownRule::Mrmr(k))
        } else {
            let indices: std::result::Result<Vec<usize>, _> =
                s.split(',').map(|v| v.trim().parse()).collect();
            indices
                .map(UnknownRule::Explicit)
                .map_err(|_| Error::InvalidParameter(format!("bad index list {s:?}")))
        }
    }
}

/// How the approximate-success tolerance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRule {
    /// The expected distance of a uniformly random guess of the masked
    /// features.
    RandomGuess,
    Fixed(f64),
}

impl AlphaRule {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "random-guess" {
            Ok(AlphaRule::RandomGuess)
        } else {
            s.parse()
                .map(AlphaRule::Fixed)
                .map_err(|_| Error::InvalidParameter(format!("bad alpha rule {s:?}")))
        }
    }

    pub fn resolve(&self, metric: Metric, unknowns: usize) -> Result<f64> {
        match self {
            AlphaRule::RandomGuess => {
                crate::space::expected_random_guess_distance(metric, unknowns)
            }
            AlphaRule::Fixed(a) => {
                if *a < 0.0 {
                    Err(Error::InvalidParameter("alpha must be non-negative".into()))
                } else {
                    Ok(*a)
                }
            }
        }
    }
}

/// Everything a run resolves to before executing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    pub model_kind: ModelKind,
    pub model: MlpConfig,
    /// Load a model checkpoint instead of training.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_in: Option<PathBuf>,
    pub attack: AttackSelection,
    pub n_shadows: usize,
    pub per_class_heads: bool,
    pub unknown: UnknownRule,
    pub bins: usize,
    pub alpha: AlphaRule,
    /// Strong-membership radius.
    pub radius: f64,
    pub trials: usize,
    /// Member / non-member sample sizes.
    pub members: usize,
    pub nonmembers: usize,
    pub sweep_sizes: Vec<usize>,
    pub region_samples: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synth {
                kind: SynthKind::BinaryClusters,
                m: 600,
                n: 6000,
                k: 20,
                spread: 0.3,
                train_fraction: 0.34,
                test_fraction: 0.33,
            },
            model_kind: ModelKind::Mlp,
            model: MlpConfig::default(),
            model_in: None,
            attack: AttackSelection::Conf,
            n_shadows: 4,
            per_class_heads: false,
            unknown: UnknownRule::Mrmr(15),
            bins: 2,
            alpha: AlphaRule::RandomGuess,
            radius: 5.0,
            trials: 1000,
            members: 1000,
            nonmembers: 1000,
            sweep_sizes: vec![500, 1000, 2000, 4000],
            region_samples: 1_000_000,
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_rule_parses_both_forms() {
        assert_eq!(UnknownRule::parse("mrmr:15").unwrap(), UnknownRule::Mrmr(15));
        assert_eq!(
            UnknownRule::parse("3, 1,9").unwrap(),
            UnknownRule::Explicit(vec![3, 1, 9])
        );
        assert!(UnknownRule::parse("mrmr:x").is_err());
    }

    #[test]
    fn alpha_rule_resolves_random_guess() {
        let a = AlphaRule::RandomGuess
            .resolve(Metric::Hamming, 15)
            .unwrap();
        assert_eq!(a, 7.5);
        assert_eq!(AlphaRule::parse("2.5").unwrap(), AlphaRule::Fixed(2.5));
    }
}
