//! Distance- and class-stratified AUC analysis, and decision-region volume
//! estimation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attack::MembershipScorer;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::nn::Scratch;
use crate::seed::rng_from_seed;
use crate::space::{distance_to_set, DomainKind, FeatureVector, Metric};

use super::roc::auc;

/// How distances map to group keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistanceGrouping {
    /// Exact integer distances (Hamming).
    Unit,
    /// Buckets `((k-1)*step, k*step]` (Manhattan, typically step = 0.05).
    Bucket(f64),
}

impl DistanceGrouping {
    /// Group key for a positive distance; distance 0 has no group.
    pub fn key_of(&self, distance: f64) -> u32 {
        debug_assert!(distance > 0.0);
        match self {
            DistanceGrouping::Unit => distance.round() as u32,
            DistanceGrouping::Bucket(step) => (distance / step).ceil() as u32,
        }
    }

    /// Representative distance value of a group key.
    pub fn value_of(&self, key: u32) -> f64 {
        match self {
            DistanceGrouping::Unit => key as f64,
            DistanceGrouping::Bucket(step) => key as f64 * step,
        }
    }

    pub fn default_for(metric: Metric) -> Self {
        match metric {
            Metric::Hamming => DistanceGrouping::Unit,
            Metric::Manhattan | Metric::Euclidean => DistanceGrouping::Bucket(0.05),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroupAuc {
    /// Representative distance of the group.
    pub distance: f64,
    pub auc: f64,
    pub n_candidates: usize,
}

/// AUC per distance group, members fixed as the positive class.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StratifiedAuc {
    pub groups: BTreeMap<u32, GroupAuc>,
}

impl StratifiedAuc {
    /// Mean AUC over the group keys in `[lo, hi]`, weighted by candidate
    /// count. None if those groups are empty.
    pub fn auc_in_key_range(&self, lo: u32, hi: u32) -> Option<f64> {
        let mut total = 0.0;
        let mut weight = 0usize;
        for (&k, g) in &self.groups {
            if k >= lo && k <= hi {
                total += g.auc * g.n_candidates as f64;
                weight += g.n_candidates;
            }
        }
        (weight > 0).then(|| total / weight as f64)
    }

    pub fn max_key(&self) -> Option<u32> {
        self.groups.keys().next_back().copied()
    }
}

/// Compute the membership-score AUC of each distance group of `candidates`
/// against the fixed member sample.
///
/// Every candidate's distance to `train` is recomputed here; candidates at
/// distance zero (members) are excluded, and empty groups are omitted.
pub fn distance_stratified_auc(
    model: &TrainedModel,
    members: &LabeledDataset,
    train: &LabeledDataset,
    candidates: &[FeatureVector],
    scorer: &dyn MembershipScorer,
    metric: Metric,
    grouping: DistanceGrouping,
) -> Result<StratifiedAuc> {
    if members.is_empty() {
        return Err(Error::EmptySet);
    }
    let member_scores: Vec<f64> = members
        .iter()
        .map(|r| scorer.score(model, r, r.label().unwrap()))
        .collect::<Result<_>>()?;
    let mut grouped: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for cand in candidates {
        let label = cand
            .label()
            .ok_or_else(|| Error::Dataset("candidate without label".into()))?;
        let (dist, _) = distance_to_set(cand, train, metric)?;
        if dist == 0.0 {
            continue;
        }
        let score = scorer.score(model, cand, label)?;
        grouped.entry(grouping.key_of(dist)).or_default().push(score);
    }
    let mut out = StratifiedAuc::default();
    for (key, scores) in grouped {
        out.groups.insert(
            key,
            GroupAuc {
                distance: grouping.value_of(key),
                auc: auc(&member_scores, &scores)?,
                n_candidates: scores.len(),
            },
        );
    }
    Ok(out)
}

/// Stratified AUC per class: candidates are grouped by the class label of
/// their nearest training vector, and each class's members form the
/// positive set. Classes absent from the candidates are omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerClassStratifiedAuc {
    pub per_class: BTreeMap<usize, StratifiedAuc>,
    /// Fractional decision-region volume per class, when supplied.
    pub dominance: Option<Vec<f64>>,
    /// Class with the largest decision region, when supplied.
    pub most_dominant: Option<usize>,
}

pub fn per_class_stratified_auc(
    model: &TrainedModel,
    members: &LabeledDataset,
    train: &LabeledDataset,
    candidates: &[FeatureVector],
    scorer: &dyn MembershipScorer,
    metric: Metric,
    grouping: DistanceGrouping,
    regions: Option<&DecisionRegionProfile>,
) -> Result<PerClassStratifiedAuc> {
    if members.is_empty() {
        return Err(Error::EmptySet);
    }
    // member scores per class
    let k = train.n_classes();
    let mut member_scores: Vec<Vec<f64>> = vec![Vec::new(); k];
    for r in members.iter() {
        let label = r.label().unwrap();
        member_scores[label].push(scorer.score(model, r, label)?);
    }
    // candidate scores keyed by (nearest-neighbor class, distance group)
    let mut grouped: BTreeMap<(usize, u32), Vec<f64>> = BTreeMap::new();
    for cand in candidates {
        let label = cand
            .label()
            .ok_or_else(|| Error::Dataset("candidate without label".into()))?;
        let (dist, nearest) = distance_to_set(cand, train, metric)?;
        if dist == 0.0 {
            continue;
        }
        let class = train.label_of(nearest);
        let score = scorer.score(model, cand, label)?;
        grouped
            .entry((class, grouping.key_of(dist)))
            .or_default()
            .push(score);
    }
    let mut per_class: BTreeMap<usize, StratifiedAuc> = BTreeMap::new();
    for ((class, key), scores) in grouped {
        if member_scores[class].is_empty() {
            continue;
        }
        per_class.entry(class).or_default().groups.insert(
            key,
            GroupAuc {
                distance: grouping.value_of(key),
                auc: auc(&member_scores[class], &scores)?,
                n_candidates: scores.len(),
            },
        );
    }
    let dominance = regions.map(|r| r.volumes());
    let most_dominant = regions.map(|r| r.most_dominant());
    Ok(PerClassStratifiedAuc {
        per_class,
        dominance,
        most_dominant,
    })
}

/// Estimated fractional volume of each class's decision region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRegionProfile {
    counts: Vec<u64>,
    n_samples: u64,
}

impl DecisionRegionProfile {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    /// Fractional volumes. The last class takes the complement of the
    /// others so the vector sums to exactly 1.
    pub fn volumes(&self) -> Vec<f64> {
        let k = self.counts.len();
        let mut out = Vec::with_capacity(k);
        let mut partial = 0.0f64;
        for &c in &self.counts[..k - 1] {
            let v = c as f64 / self.n_samples as f64;
            out.push(v);
            partial += v;
        }
        out.push(1.0 - partial);
        out
    }

    /// Class with the largest region (ties to the lowest index).
    pub fn most_dominant(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate().skip(1) {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn least_dominant(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate().skip(1) {
            if c < self.counts[best] {
                best = i;
            }
        }
        best
    }
}

/// Estimate per-class decision-region volumes by classifying `n_samples`
/// points drawn uniformly from the feature space.
pub fn decision_region_volumes(
    model: &TrainedModel,
    n_samples: usize,
    seed: u64,
) -> Result<DecisionRegionProfile> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = rng_from_seed(seed);
    let m = model.domain().dimension();
    let mut counts = vec![0u64; model.n_classes()];
    let mut values = vec![0.0f64; m];
    let mut scratch = Scratch::default();
    for _ in 0..n_samples {
        match model.domain().kind() {
            DomainKind::Binary => {
                for v in values.iter_mut() {
                    *v = rng.random_range(0..2) as f64;
                }
            }
            DomainKind::Continuous => {
                for v in values.iter_mut() {
                    *v = rng.random_range(-1.0..=1.0);
                }
            }
        }
        counts[model.classify_values(&values, &mut scratch)] += 1;
    }
    Ok(DecisionRegionProfile {
        counts,
        n_samples: n_samples as u64,
    })
}
