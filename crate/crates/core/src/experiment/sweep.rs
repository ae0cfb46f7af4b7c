//! Overfitting sweep: vary the training-set size with proportional splits
//! and track generalization error against attribute-inference advantage.

use serde::{Deserialize, Serialize};

use crate::attack::{
    default_attack_config, fit_shadow_attack, train_shadows, ConfMi, LossMi, MembershipScorer,
};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{generalization_error, train_mlp, MlpConfig};
use crate::seed::derive_seed;
use crate::space::Metric;

use super::ai::ai_aai_evaluate;

/// Which attack the sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackSelection {
    Conf,
    Loss,
    Shadow,
}

impl std::fmt::Display for AttackSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackSelection::Conf => write!(f, "conf"),
            AttackSelection::Loss => write!(f, "loss"),
            AttackSelection::Shadow => write!(f, "shadow"),
        }
    }
}

/// Sweep knobs beyond the per-size training itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: MlpConfig,
    pub attack: AttackSelection,
    /// Shadows trained per size when the attack is shadow-based.
    pub n_shadows: usize,
    /// Records reserved for the shadow pool (taken after the largest
    /// train/test region).
    pub shadow_pool: usize,
    /// Test split size as a fraction of the training size.
    pub test_ratio: f64,
    /// Challenge budget per side for the AI/AAI evaluation.
    pub challenges: usize,
    pub bins: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            model: MlpConfig::default(),
            attack: AttackSelection::Shadow,
            n_shadows: 4,
            shadow_pool: 4000,
            test_ratio: 1.0,
            challenges: 300,
            bins: 2,
        }
    }
}

/// One row of the sweep table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub generalization_error: f64,
    pub ai_advantage: f64,
    pub aai_advantage: f64,
}

/// Train one model per training-set size (ascending) and measure the
/// selected attack's AI and AAI advantage at each size.
pub fn overfitting_sweep(
    base: &LabeledDataset,
    sizes: &[usize],
    cfg: &SweepConfig,
    unknown: &[usize],
    alpha: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no sizes given".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sizes must be strictly ascending".into()));
    }
    let max_size = *sizes.last().unwrap();
    let max_test = (max_size as f64 * cfg.test_ratio).ceil() as usize;
    let needed = max_size + max_test + cfg.shadow_pool;
    if base.len() < needed {
        return Err(Error::Dataset(format!(
            "sweep needs {needed} records, dataset has {}",
            base.len()
        )));
    }
    let metric = Metric::default_for(base.domain().kind());
    let k = base.n_classes();

    // one shuffled layout reused across sizes: train region, test region,
    // shadow pool
    let shuffled = base.sample(base.len(), derive_seed(seed, "sweep-shuffle"));
    let pool = shuffled.subset(&((max_size + max_test)..needed).collect::<Vec<_>>());

    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let train = shuffled.subset(&(0..size).collect::<Vec<_>>());
        let n_test = ((size as f64 * cfg.test_ratio).ceil() as usize).min(max_test);
        let test = shuffled.subset(&((max_size..max_size + n_test).collect::<Vec<_>>()));

        let model_cfg = cfg
            .model
            .clone()
            .with_seed(derive_seed(seed, &format!("sweep-train-{size}")));
        let (model, _) = train_mlp(&train, k, &model_cfg)?;
        let gap = generalization_error(&model, &train, &test)?;

        let attack_seed = derive_seed(seed, &format!("sweep-attack-{size}"));
        let shadow_attack;
        let scorer: &dyn MembershipScorer = match cfg.attack {
            AttackSelection::Conf => &ConfMi,
            AttackSelection::Loss => &LossMi,
            AttackSelection::Shadow => {
                let records = train_shadows(&pool, cfg.n_shadows, &cfg.model, attack_seed)?;
                let mut attack_cfg = default_attack_config();
                attack_cfg.epochs = cfg.model.epochs.min(40);
                shadow_attack = fit_shadow_attack(&records, &attack_cfg, false, attack_seed)?;
                &shadow_attack
            }
        };

        let eval = ai_aai_evaluate(
            &model,
            &[scorer],
            &train,
            &test,
            unknown,
            cfg.bins,
            alpha,
            metric,
            derive_seed(seed, &format!("sweep-eval-{size}")),
            cfg.challenges,
        )?;
        rows.push(SweepRow {
            size,
            train_accuracy: gap.train_accuracy,
            test_accuracy: gap.test_accuracy,
            generalization_error: gap.accuracy_gap,
            ai_advantage: eval[0].ai_advantage,
            aai_advantage: eval[0].aai_advantage,
        });
    }
    Ok(rows)
}
