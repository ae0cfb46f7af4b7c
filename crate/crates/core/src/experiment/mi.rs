//! Membership inference and strong membership inference experiment loops.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::attack::{flip_coords, MembershipScorer};
use crate::dataset::LabeledDataset;
#[cfg(test)]
use crate::dataset::{pack_bits, PackedBinarySet};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::space::{distance_to_set, DomainKind, FeatureVector, Metric};

use super::report::{ExperimentKind, ExperimentReport};
use super::roc::{advantage_from_decisions, auc};
use super::synth::perturb_values;
use crate::model::TrainedModel;

/// Samples a non-member within distance `r` of a training member, standing
/// in for a draw from the data distribution restricted to the r-ball.
pub trait NeighborSampler: Sync {
    fn sample(
        &self,
        base: &FeatureVector,
        train: &LabeledDataset,
        r: f64,
        metric: Metric,
        rng: &mut ChaCha8Rng,
    ) -> Result<FeatureVector>;
}

/// Flip/perturb generator with the synthetic-non-member discard rules:
/// the candidate must not collide with a member, its nearest neighbor must
/// keep the base label, and its recomputed distance must stay within `r`.
pub struct PerturbNeighborSampler {
    pub max_attempts: usize,
}

impl Default for PerturbNeighborSampler {
    fn default() -> Self {
        Self { max_attempts: 100 }
    }
}

impl NeighborSampler for PerturbNeighborSampler {
    fn sample(
        &self,
        base: &FeatureVector,
        train: &LabeledDataset,
        r: f64,
        metric: Metric,
        rng: &mut ChaCha8Rng,
    ) -> Result<FeatureVector> {
        let base_label = base
            .label()
            .ok_or_else(|| Error::Dataset("base vector must be labeled".into()))?;
        let domain = train.domain();
        let m = domain.dimension();
        for _ in 0..self.max_attempts {
            let candidate = match domain.kind() {
                DomainKind::Binary => {
                    let max_flips = (r.floor() as usize).clamp(1, m);
                    let d = rng.random_range(1..=max_flips);
                    let mut values = base.values().to_vec();
                    flip_coords(&mut values, d, rng);
                    FeatureVector::new(domain, values, Some(base_label))?
                }
                DomainKind::Continuous => {
                    let target = rng.random_range(0.0..=r).max(r * 1e-3);
                    let values = perturb_values(base.values(), target, domain, rng);
                    FeatureVector::new(domain, values, Some(base_label))?
                }
            };
            let (dist, nearest) = distance_to_set(&candidate, train, metric)?;
            if dist == 0.0 || dist > r {
                continue;
            }
            if train.label_of(nearest) != base_label {
                continue;
            }
            return Ok(candidate);
        }
        Err(Error::SamplingExhausted(format!(
            "no admissible {r}-neighbor after {} attempts",
            self.max_attempts
        )))
    }
}

/// Membership inference: per trial, a fair coin picks either a uniform
/// training member or a uniform draw from the holdout population; the
/// scorer's decisions give the advantage and its scores the AUC.
pub fn mi_experiment(
    model: &TrainedModel,
    train: &LabeledDataset,
    population: &LabeledDataset,
    scorer: &dyn MembershipScorer,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if train.is_empty() || population.is_empty() {
        return Err(Error::EmptySet);
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let mut rng = rng_from_seed(derive_seed(seed, "mi-trials"));
    let mut member_scores = Vec::new();
    let mut nonmember_scores = Vec::new();
    let mut member_decisions = Vec::new();
    let mut nonmember_decisions = Vec::new();
    for _ in 0..trials {
        let member_branch = rng.random::<bool>();
        let x = if member_branch {
            train.get(rng.random_range(0..train.len()))
        } else {
            population.get(rng.random_range(0..population.len()))
        };
        let label = x.label().unwrap();
        let score = scorer.score(model, x, label)?;
        let decision = scorer.decide(model, x, label)?;
        if member_branch {
            member_scores.push(score);
            member_decisions.push(decision);
        } else {
            nonmember_scores.push(score);
            nonmember_decisions.push(decision);
        }
    }
    let mut report = ExperimentReport::new(ExperimentKind::Mi, seed);
    report.scorer = Some(scorer.name().to_string());
    report.trials = Some(trials as u64);
    report.advantage = Some(advantage_from_decisions(
        &member_decisions,
        &nonmember_decisions,
    )?);
    report.auc = Some(auc(&member_scores, &nonmember_scores)?);
    Ok(report)
}

/// Strong membership inference at radius `r`: the member branch presents a
/// training member, the other branch a sampled r-neighbor of it.
pub fn smi_experiment(
    model: &TrainedModel,
    train: &LabeledDataset,
    r: f64,
    metric: Metric,
    scorer: &dyn MembershipScorer,
    sampler: &dyn NeighborSampler,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if train.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let mut rng = rng_from_seed(derive_seed(seed, "smi-trials"));
    let mut member_scores = Vec::new();
    let mut nonmember_scores = Vec::new();
    let mut member_decisions = Vec::new();
    let mut nonmember_decisions = Vec::new();
    for _ in 0..trials {
        let member_branch = rng.random::<bool>();
        let base = train.get(rng.random_range(0..train.len()));
        let label = base.label().unwrap();
        if member_branch {
            member_scores.push(scorer.score(model, base, label)?);
            member_decisions.push(scorer.decide(model, base, label)?);
        } else {
            let neighbor = sampler.sample(base, train, r, metric, &mut rng)?;
            nonmember_scores.push(scorer.score(model, &neighbor, label)?);
            nonmember_decisions.push(scorer.decide(model, &neighbor, label)?);
        }
    }
    let mut report = ExperimentReport::new(ExperimentKind::Smi, seed);
    report.scorer = Some(scorer.name().to_string());
    report.trials = Some(trials as u64);
    report.advantage = Some(advantage_from_decisions(
        &member_decisions,
        &nonmember_decisions,
    )?);
    report.auc = Some(auc(&member_scores, &nonmember_scores)?);
    report.extra.insert(
        "radius".into(),
        serde_json::Value::from(r),
    );
    Ok(report)
}

/// Fast member-collision check used by tests.
#[cfg(test)]
pub(crate) fn is_member_binary(x: &FeatureVector, packed: &PackedBinarySet) -> bool {
    let words = x.len().div_ceil(64);
    let mut query = vec![0u64; words];
    pack_bits(x.values(), &mut query);
    packed.nearest(&query).0 == 0
}
