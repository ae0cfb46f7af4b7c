//! Experiment drivers: membership inference, strong membership inference,
//! attribute inference and its approximate variant, plus the ROC,
//! stratification, decision-region, feature-selection and clustering
//! machinery they are built on.

mod ai;
mod kmeans;
mod mi;
mod mrmr;
pub mod report;
mod roc;
mod strata;
mod sweep;
mod synth;

pub use ai::{
    ai_advantage, ai_attack, ai_aai_evaluate, aai_advantage, AiAaiOutcome, AiOutcome,
    ScorerAdvantage, DEFAULT_CHALLENGES,
};
pub(crate) use ai::reconstruct_best_sibling;
pub use kmeans::kmeans_labels;
pub use mi::{
    mi_experiment, smi_experiment, NeighborSampler, PerturbNeighborSampler,
};
pub use mrmr::mrmr_select;
pub use report::{ExperimentKind, ExperimentReport, TieStats};
pub use roc::{advantage_from_decisions, auc};
pub use strata::{
    decision_region_volumes, distance_stratified_auc, per_class_stratified_auc,
    DecisionRegionProfile, DistanceGrouping, GroupAuc, PerClassStratifiedAuc, StratifiedAuc,
};
pub use sweep::{overfitting_sweep, AttackSelection, SweepConfig, SweepRow};
pub use synth::{
    synthesize_nonmembers_binary, synthesize_nonmembers_continuous, SyntheticNonMember,
};
