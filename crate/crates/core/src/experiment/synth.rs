//! Synthetic non-member generation at controlled distances from the
//! training set.
//!
//! Vectors are derived from a training member by flipping (binary) or
//! additively perturbing (continuous) randomly chosen features. The
//! distance to the training set is always recomputed afterwards, since the
//! nearest neighbor may have changed; candidates that collide with a member
//! or whose nearest neighbor carries a different label are discarded.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::attack::flip_coords;
use crate::dataset::{pack_bits, LabeledDataset, PackedBinarySet};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::space::{distance_to_set, DomainKind, FeatureVector, Metric};

/// A generated non-member with its recomputed distance to the training set.
#[derive(Debug, Clone)]
pub struct SyntheticNonMember {
    pub vector: FeatureVector,
    pub distance: f64,
    pub nearest_index: usize,
}

const OVERSAMPLING_FACTOR: usize = 100;

/// Generate `per_distance` non-members at each requested Hamming distance
/// from `base`, which must itself be a training member.
pub fn synthesize_nonmembers_binary(
    base: &FeatureVector,
    train: &LabeledDataset,
    distances: &[usize],
    per_distance: usize,
    seed: u64,
) -> Result<Vec<SyntheticNonMember>> {
    if train.domain().kind() != DomainKind::Binary {
        return Err(Error::MetricDomainMismatch {
            metric: "hamming".into(),
            domain: train.domain().kind().to_string(),
        });
    }
    let m = train.domain().dimension();
    if distances.iter().any(|&d| d == 0 || d > m) {
        return Err(Error::InvalidParameter(
            "target distances must satisfy 1 <= d <= m".into(),
        ));
    }
    let base_label = base
        .label()
        .ok_or_else(|| Error::Dataset("base vector must be labeled".into()))?;
    let (d0, _) = distance_to_set(base, train, Metric::Hamming)?;
    if d0 != 0.0 {
        return Err(Error::InvalidParameter(
            "base vector must be a member of the training set".into(),
        ));
    }
    let packed = PackedBinarySet::build(train)?;
    let words = m.div_ceil(64);
    let mut query = vec![0u64; words];
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(distances.len() * per_distance);
    for &d in distances {
        let mut produced = 0usize;
        let mut attempts = 0usize;
        let budget = OVERSAMPLING_FACTOR * per_distance.max(1);
        let mut values = base.values().to_vec();
        while produced < per_distance {
            if attempts >= budget {
                return Err(Error::SamplingExhausted(format!(
                    "{produced}/{per_distance} survivors at distance {d} after {attempts} attempts"
                )));
            }
            attempts += 1;
            values.copy_from_slice(base.values());
            flip_coords(&mut values, d, &mut rng);
            pack_bits(&values, &mut query);
            let (dist, nearest) = packed.nearest(&query);
            if dist == 0 {
                continue; // collided with a member
            }
            if packed.label_of(nearest) != base_label {
                continue; // nearest neighbor changed label
            }
            out.push(SyntheticNonMember {
                vector: FeatureVector::new(train.domain(), values.clone(), Some(base_label))?,
                distance: dist as f64,
                nearest_index: nearest,
            });
            produced += 1;
        }
    }
    Ok(out)
}

/// Generate `per_group` non-members in every Manhattan distance bucket
/// `(t - step, t]` for `t = step, 2*step, ..., max_distance`.
pub fn synthesize_nonmembers_continuous(
    base: &FeatureVector,
    train: &LabeledDataset,
    max_distance: f64,
    step: f64,
    per_group: usize,
    seed: u64,
) -> Result<Vec<SyntheticNonMember>> {
    if train.domain().kind() != DomainKind::Continuous {
        return Err(Error::MetricDomainMismatch {
            metric: "manhattan".into(),
            domain: train.domain().kind().to_string(),
        });
    }
    if !(step > 0.0) || max_distance < step {
        return Err(Error::InvalidParameter(
            "need step > 0 and max_distance >= step".into(),
        ));
    }
    let base_label = base
        .label()
        .ok_or_else(|| Error::Dataset("base vector must be labeled".into()))?;
    let (d0, _) = distance_to_set(base, train, Metric::Manhattan)?;
    if d0 != 0.0 {
        return Err(Error::InvalidParameter(
            "base vector must be a member of the training set".into(),
        ));
    }
    let n_groups = (max_distance / step).round() as usize;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n_groups * per_group);
    for g in 1..=n_groups {
        let target = g as f64 * step;
        let floor = target - step;
        let mut produced = 0usize;
        let mut attempts = 0usize;
        let budget = OVERSAMPLING_FACTOR * per_group.max(1);
        while produced < per_group {
            if attempts >= budget {
                return Err(Error::SamplingExhausted(format!(
                    "{produced}/{per_group} survivors in group ({floor:.2}, {target:.2}] after {attempts} attempts"
                )));
            }
            attempts += 1;
            let values = perturb_values(base.values(), target, train.domain(), &mut rng);
            let candidate = FeatureVector::new(train.domain(), values, Some(base_label))?;
            let (dist, nearest) = distance_to_set(&candidate, train, Metric::Manhattan)?;
            if dist <= floor || dist > target || dist == 0.0 {
                continue;
            }
            if train.label_of(nearest) != base_label {
                continue;
            }
            out.push(SyntheticNonMember {
                vector: candidate,
                distance: dist,
                nearest_index: nearest,
            });
            produced += 1;
        }
    }
    Ok(out)
}

/// Spread a total Manhattan displacement over a random feature subset with
/// random signs, then clamp into the domain.
pub(crate) fn perturb_values(
    base: &[f64],
    total_displacement: f64,
    domain: crate::space::FeatureDomain,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let m = base.len();
    let count = rng.random_range(1..=m);
    let picks = rand::seq::index::sample(rng, m, count);
    let mut weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.01..=1.0)).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w *= total_displacement / sum;
    }
    let mut values = base.to_vec();
    for (slot, i) in picks.into_iter().enumerate() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[i] = domain.clamp_value(values[i] + sign * weights[slot]);
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, SynthKind};

    fn binary_fixture() -> LabeledDataset {
        synth_dataset(SynthKind::BinaryClusters, 40, 200, 4, 0.3, 131).unwrap()
    }

    #[test]
    fn distance_zero_is_rejected() {
        let train = binary_fixture();
        let base = train.get(0).clone();
        assert!(synthesize_nonmembers_binary(&base, &train, &[0], 3, 1).is_err());
    }

    #[test]
    fn survivors_verify_against_exhaustive_scan() {
        let train = binary_fixture();
        let base = train.get(5).clone();
        let got = synthesize_nonmembers_binary(&base, &train, &[1, 2, 5], 5, 7).unwrap();
        assert_eq!(got.len(), 15);
        for s in &got {
            let (dist, nearest) = distance_to_set(&s.vector, &train, Metric::Hamming).unwrap();
            assert_eq!(dist, s.distance);
            assert_eq!(nearest, s.nearest_index);
            assert!(dist > 0.0);
            assert_eq!(train.label_of(nearest), base.label().unwrap());
        }
        // requested distance 1 may shrink after recomputation but never grow
        for s in &got[..5] {
            assert!(s.distance <= 1.0);
        }
    }

    #[test]
    fn full_flip_reaches_the_complement() {
        // single-class data so the nearest-neighbor label rule cannot fire
        let train = synth_dataset(SynthKind::BinaryClusters, 40, 100, 1, 0.3, 132).unwrap();
        let base = train.get(0).clone();
        let m = train.domain().dimension();
        let got = synthesize_nonmembers_binary(&base, &train, &[m], 1, 3).unwrap();
        let complement: Vec<f64> = base.values().iter().map(|&v| 1.0 - v).collect();
        assert_eq!(got[0].vector.values(), &complement[..]);
        let (dist, _) = distance_to_set(&got[0].vector, &train, Metric::Hamming).unwrap();
        assert_eq!(dist, got[0].distance);
    }

    #[test]
    fn continuous_groups_cover_their_buckets() {
        let train =
            synth_dataset(SynthKind::ContinuousClusters, 12, 150, 3, 0.2, 133).unwrap();
        let base = train.get(4).clone();
        let got =
            synthesize_nonmembers_continuous(&base, &train, 0.25, 0.05, 4, 11).unwrap();
        assert_eq!(got.len(), 5 * 4);
        for (i, s) in got.iter().enumerate() {
            let group = i / 4 + 1;
            let target = group as f64 * 0.05;
            assert!(
                s.distance > target - 0.05 && s.distance <= target,
                "group {group}: distance {} outside ({}, {target}]",
                s.distance,
                target - 0.05
            );
            let (dist, _) = distance_to_set(&s.vector, &train, Metric::Manhattan).unwrap();
            assert_eq!(dist, s.distance);
        }
    }

    #[test]
    fn group_count_matches_range() {
        let train =
            synth_dataset(SynthKind::ContinuousClusters, 10, 100, 2, 0.3, 135).unwrap();
        let base = train.get(0).clone();
        // 0.05 steps to 0.5 -> 10 groups
        let got = synthesize_nonmembers_continuous(&base, &train, 0.5, 0.05, 1, 3).unwrap();
        assert_eq!(got.len(), 10);
    }

    #[test]
    fn perturbation_clamps_to_domain() {
        let domain = crate::space::FeatureDomain::continuous(4).unwrap();
        let mut rng = rng_from_seed(9);
        for _ in 0..200 {
            let values = perturb_values(&[0.99, -0.99, 0.5, 0.0], 3.0, domain, &mut rng);
            assert!(domain.validate_values(&values).is_ok());
        }
    }
}
