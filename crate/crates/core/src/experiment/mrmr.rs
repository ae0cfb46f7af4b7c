//! Greedy minimal-redundancy maximal-relevance feature selection (the
//! mutual-information-difference scheme).

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::space::DomainKind;

/// Discretize every feature into bin indices. Binary features use their two
/// values; continuous features use `bins` equal-width bins over [-1,1].
fn discretize(data: &LabeledDataset, bins: usize) -> (Vec<Vec<usize>>, usize) {
    let m = data.domain().dimension();
    let n = data.len();
    let n_bins = match data.domain().kind() {
        DomainKind::Binary => 2,
        DomainKind::Continuous => bins,
    };
    let (lo, hi) = data.domain().bounds();
    let width = (hi - lo) / n_bins as f64;
    let mut columns = vec![vec![0usize; n]; m];
    for (row, rec) in data.iter().enumerate() {
        for (j, &v) in rec.values().iter().enumerate() {
            columns[j][row] = match data.domain().kind() {
                DomainKind::Binary => {
                    if v == 0.0 {
                        0
                    } else {
                        1
                    }
                }
                DomainKind::Continuous => (((v - lo) / width) as usize).min(n_bins - 1),
            };
        }
    }
    (columns, n_bins)
}

/// Empirical mutual information (nats) between two discrete columns.
fn mutual_information(a: &[usize], a_card: usize, b: &[usize], b_card: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0u32; a_card * b_card];
    let mut pa = vec![0u32; a_card];
    let mut pb = vec![0u32; b_card];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * b_card + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..a_card {
        for y in 0..b_card {
            let c = joint[x * b_card + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            let px = pa[x] as f64 / n;
            let py = pb[y] as f64 / n;
            mi += pxy * (pxy / (px * py)).ln();
        }
    }
    mi
}

/// Select `k_features` feature indices greedily: first the feature most
/// informative about the label, then repeatedly the feature maximizing
/// relevance minus mean redundancy against the already-chosen set. Ties
/// break to the lowest index.
pub fn mrmr_select(data: &LabeledDataset, k_features: usize, bins: usize) -> Result<Vec<usize>> {
    let m = data.domain().dimension();
    if k_features == 0 || k_features >= m {
        return Err(Error::InvalidParameter(format!(
            "k_features of {k_features} must satisfy 1 <= k < {m}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptySet);
    }
    if data.domain().kind() == DomainKind::Continuous && bins < 2 {
        return Err(Error::InvalidParameter(
            "continuous mutual information needs at least 2 bins".into(),
        ));
    }
    let (columns, n_bins) = discretize(data, bins);
    let labels: Vec<usize> = data.iter().map(|r| r.label().unwrap()).collect();
    let k_classes = data.n_classes();

    let relevance: Vec<f64> = columns
        .iter()
        .map(|col| mutual_information(col, n_bins, &labels, k_classes))
        .collect();

    let mut chosen: Vec<usize> = Vec::with_capacity(k_features);
    let mut remaining: Vec<usize> = (0..m).collect();
    // running sum of I(f; chosen) per remaining feature
    let mut redundancy = vec![0.0f64; m];

    for _ in 0..k_features {
        let mut best_j = usize::MAX;
        let mut best_score = f64::NEG_INFINITY;
        for &j in &remaining {
            let score = if chosen.is_empty() {
                relevance[j]
            } else {
                relevance[j] - redundancy[j] / chosen.len() as f64
            };
            if score > best_score {
                best_score = score;
                best_j = j;
            }
        }
        chosen.push(best_j);
        remaining.retain(|&j| j != best_j);
        for &j in &remaining {
            redundancy[j] += mutual_information(&columns[j], n_bins, &columns[best_j], n_bins);
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{FeatureDomain, FeatureVector};
    use rand::Rng;

    /// 200-row binary fixture where the label copies feature 3 and every
    /// other feature is independent noise.
    fn label_copies_feature_three(seed: u64) -> LabeledDataset {
        let domain = FeatureDomain::binary(6).unwrap();
        let mut rng = crate::seed::rng_from_seed(seed);
        let records: Vec<FeatureVector> = (0..200)
            .map(|_| {
                let bits: Vec<f64> = (0..6).map(|_| rng.random_range(0..2) as f64).collect();
                let label = bits[3] as usize;
                FeatureVector::new(domain, bits, Some(label)).unwrap()
            })
            .collect();
        LabeledDataset::new(domain, 2, records).unwrap()
    }

    /// Oracle: exhaustive MI(feature; label) computed independently with a
    /// plain hashmap histogram.
    fn oracle_relevance(data: &LabeledDataset) -> Vec<f64> {
        let n = data.len() as f64;
        let m = data.domain().dimension();
        (0..m)
            .map(|j| {
                use std::collections::HashMap;
                let mut joint: HashMap<(u64, usize), f64> = HashMap::new();
                let mut pf: HashMap<u64, f64> = HashMap::new();
                let mut pl: HashMap<usize, f64> = HashMap::new();
                for rec in data.iter() {
                    let f = rec.values()[j] as u64;
                    let l = rec.label().unwrap();
                    *joint.entry((f, l)).or_default() += 1.0;
                    *pf.entry(f).or_default() += 1.0;
                    *pl.entry(l).or_default() += 1.0;
                }
                joint
                    .iter()
                    .map(|(&(f, l), &c)| {
                        let pxy = c / n;
                        pxy * (pxy / ((pf[&f] / n) * (pl[&l] / n))).ln()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn first_pick_is_the_copied_feature() {
        let data = label_copies_feature_three(121);
        let picked = mrmr_select(&data, 3, 10).unwrap();
        assert_eq!(picked[0], 3);
        // cross-check against the oracle's argmax
        let rel = oracle_relevance(&data);
        let best = rel
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(picked[0], best);
    }

    #[test]
    fn singleton_selection_is_max_relevance() {
        let data = label_copies_feature_three(123);
        assert_eq!(mrmr_select(&data, 1, 10).unwrap(), vec![3]);
    }

    #[test]
    fn duplicated_feature_is_deferred_by_redundancy() {
        // features 0 and 1 are identical noisy copies of the label (the
        // most relevant pair); feature 2 carries weaker but independent
        // signal. After one copy is picked, the duplicate's redundancy
        // (its full entropy) sinks it below feature 2.
        let domain = FeatureDomain::binary(5).unwrap();
        let mut rng = crate::seed::rng_from_seed(125);
        let records: Vec<FeatureVector> = (0..600)
            .map(|_| {
                let label = rng.random_range(0..2usize);
                let strong = if rng.random::<f64>() < 0.9 {
                    label as f64
                } else {
                    1.0 - label as f64
                };
                let weak = if rng.random::<f64>() < 0.75 {
                    label as f64
                } else {
                    1.0 - label as f64
                };
                let bits = vec![
                    strong,
                    strong,
                    weak,
                    rng.random_range(0..2) as f64,
                    rng.random_range(0..2) as f64,
                ];
                FeatureVector::new(domain, bits, Some(label)).unwrap()
            })
            .collect();
        let data = LabeledDataset::new(domain, 2, records).unwrap();
        let picked = mrmr_select(&data, 2, 10).unwrap();
        assert_eq!(picked[0], 0, "first pick should be the strongest feature");
        assert_eq!(
            picked[1], 2,
            "exact duplicate must lose to the weaker independent feature"
        );
        // oracle confirmation: duplicate scores relevance minus its own
        // entropy, strictly below feature 2's relevance minus its small
        // cross-information with feature 0
        let rel = oracle_relevance(&data);
        assert!(rel[0] > rel[2]);
    }

    #[test]
    fn constant_feature_is_not_an_error() {
        let domain = FeatureDomain::binary(3).unwrap();
        let mut rng = crate::seed::rng_from_seed(127);
        let records: Vec<FeatureVector> = (0..50)
            .map(|_| {
                let label = rng.random_range(0..2usize);
                let bits = vec![0.0, label as f64, rng.random_range(0..2) as f64];
                FeatureVector::new(domain, bits, Some(label)).unwrap()
            })
            .collect();
        let data = LabeledDataset::new(domain, 2, records).unwrap();
        let picked = mrmr_select(&data, 2, 10).unwrap();
        assert_eq!(picked[0], 1);
    }

    #[test]
    fn parameter_bounds_enforced() {
        let data = label_copies_feature_three(129);
        assert!(mrmr_select(&data, 0, 10).is_err());
        assert!(mrmr_select(&data, 6, 10).is_err());
    }
}
