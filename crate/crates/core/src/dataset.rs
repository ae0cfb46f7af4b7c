//! Labeled datasets: storage, splits and synthetic generators.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::space::{DomainKind, FeatureDomain, FeatureVector};

/// A multiset of labeled feature vectors over one domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledDataset {
    domain: FeatureDomain,
    n_classes: usize,
    records: Vec<FeatureVector>,
}

impl LabeledDataset {
    pub fn new(
        domain: FeatureDomain,
        n_classes: usize,
        records: Vec<FeatureVector>,
    ) -> Result<Self> {
        for rec in &records {
            if rec.domain() != domain {
                return Err(Error::DimensionMismatch {
                    expected: domain.dimension(),
                    got: rec.len(),
                });
            }
            match rec.label() {
                Some(label) if label < n_classes => {}
                Some(label) => {
                    return Err(Error::LabelOutOfRange {
                        label,
                        classes: n_classes,
                    })
                }
                None => return Err(Error::Dataset("record without class label".into())),
            }
        }
        Ok(Self {
            domain,
            n_classes,
            records,
        })
    }

    pub fn domain(&self) -> FeatureDomain {
        self.domain
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, index: usize) -> &FeatureVector {
        &self.records[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FeatureVector> {
        self.records.iter()
    }

    pub fn records(&self) -> &[FeatureVector] {
        &self.records
    }

    pub fn label_of(&self, index: usize) -> usize {
        self.records[index].label().expect("records are labeled")
    }

    /// Counts of records per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for rec in &self.records {
            counts[rec.label().unwrap()] += 1;
        }
        counts
    }

    /// Dataset made of the records at `indices` (order preserved).
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            domain: self.domain,
            n_classes: self.n_classes,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// First `n` records as a dataset.
    pub fn take(&self, n: usize) -> LabeledDataset {
        LabeledDataset {
            domain: self.domain,
            n_classes: self.n_classes,
            records: self.records[..n.min(self.records.len())].to_vec(),
        }
    }

    /// Seeded shuffle into disjoint train/test splits of the given sizes.
    pub fn split_sizes(
        &self,
        n_train: usize,
        n_test: usize,
        seed: u64,
    ) -> Result<(LabeledDataset, LabeledDataset)> {
        if n_train + n_test > self.len() {
            return Err(Error::Dataset(format!(
                "split of {}+{} exceeds {} records",
                n_train,
                n_test,
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng_from_seed(seed));
        let train = self.subset(&order[..n_train]);
        let test = self.subset(&order[n_train..n_train + n_test]);
        Ok((train, test))
    }

    /// Seeded shuffle into train/test splits by fraction.
    pub fn split_fractions(
        &self,
        train_fraction: f64,
        test_fraction: f64,
        seed: u64,
    ) -> Result<(LabeledDataset, LabeledDataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0)
            || !(test_fraction > 0.0 && test_fraction < 1.0)
            || train_fraction + test_fraction > 1.0
        {
            return Err(Error::Dataset(
                "split fractions must lie in (0,1) and sum to at most 1".into(),
            ));
        }
        let n_train = (self.len() as f64 * train_fraction).floor() as usize;
        let n_test = (self.len() as f64 * test_fraction).floor() as usize;
        self.split_sizes(n_train, n_test, seed)
    }

    /// Sample `n` records uniformly without replacement.
    pub fn sample(&self, n: usize, seed: u64) -> LabeledDataset {
        let n = n.min(self.len());
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng_from_seed(seed));
        order.truncate(n);
        self.subset(&order)
    }
}

/// Kind of synthetic cluster dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthKind {
    /// k random bit-vector centers; features are independent bits that
    /// disagree with the center with probability `spread`.
    BinaryClusters,
    /// k uniform centers in [-1,1]^m; features are the center plus uniform
    /// noise of half-width `spread`, clamped to the domain.
    ContinuousClusters,
}

/// Generate a clustered dataset with one class per cluster.
///
/// Records are assigned to clusters round-robin so classes stay balanced.
/// `spread = 0` makes every record equal to its cluster center.
pub fn synth_dataset(
    kind: SynthKind,
    m: usize,
    n: usize,
    k: usize,
    spread: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(
            "cluster count must satisfy 1 <= k <= n".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spread) {
        return Err(Error::InvalidParameter("spread must lie in [0, 1]".into()));
    }
    let domain = match kind {
        SynthKind::BinaryClusters => FeatureDomain::binary(m)?,
        SynthKind::ContinuousClusters => FeatureDomain::continuous(m)?,
    };
    let mut rng = rng_from_seed(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| match kind {
            SynthKind::BinaryClusters => {
                (0..m).map(|_| rng.random_range(0..2) as f64).collect()
            }
            SynthKind::ContinuousClusters => {
                (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
            }
        })
        .collect();
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % k;
        let center = &centers[class];
        let values: Vec<f64> = match kind {
            SynthKind::BinaryClusters => center
                .iter()
                .map(|&c| {
                    if rng.random::<f64>() < spread {
                        1.0 - c
                    } else {
                        c
                    }
                })
                .collect(),
            SynthKind::ContinuousClusters => center
                .iter()
                .map(|&c| {
                    let noise = if spread > 0.0 {
                        rng.random_range(-spread..=spread)
                    } else {
                        0.0
                    };
                    domain.clamp_value(c + noise)
                })
                .collect(),
        };
        records.push(FeatureVector::new(domain, values, Some(class))?);
    }
    LabeledDataset::new(domain, k, records)
}

/// Bit-packed view of a binary dataset for fast Hamming scans.
///
/// Distances computed here are exactly the integers an exhaustive
/// `distance_to_set` scan would produce.
pub(crate) struct PackedBinarySet {
    words_per_row: usize,
    words: Vec<u64>,
    labels: Vec<usize>,
}

impl PackedBinarySet {
    pub(crate) fn build(dataset: &LabeledDataset) -> Result<Self> {
        if dataset.domain().kind() != DomainKind::Binary {
            return Err(Error::MetricDomainMismatch {
                metric: "hamming".into(),
                domain: dataset.domain().kind().to_string(),
            });
        }
        let m = dataset.domain().dimension();
        let words_per_row = m.div_ceil(64);
        let mut words = vec![0u64; words_per_row * dataset.len()];
        let mut labels = Vec::with_capacity(dataset.len());
        for (row, rec) in dataset.iter().enumerate() {
            pack_bits(rec.values(), &mut words[row * words_per_row..][..words_per_row]);
            labels.push(rec.label().unwrap());
        }
        Ok(Self {
            words_per_row,
            words,
            labels,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn label_of(&self, row: usize) -> usize {
        self.labels[row]
    }

    /// Minimum Hamming distance and lowest achieving row.
    pub(crate) fn nearest(&self, query: &[u64]) -> (u32, usize) {
        let mut best = u32::MAX;
        let mut best_row = 0;
        for row in 0..self.len() {
            let chunk = &self.words[row * self.words_per_row..][..self.words_per_row];
            let mut d = 0u32;
            for (a, b) in chunk.iter().zip(query) {
                d += (a ^ b).count_ones();
                if d >= best {
                    break;
                }
            }
            if d < best {
                best = d;
                best_row = row;
            }
        }
        (best, best_row)
    }
}

pub(crate) fn pack_bits(values: &[f64], out: &mut [u64]) {
    for w in out.iter_mut() {
        *w = 0;
    }
    for (i, &v) in values.iter().enumerate() {
        if v != 0.0 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{distance_to_set, Metric};

    #[test]
    fn synth_binary_shape_and_balance() {
        let ds = synth_dataset(SynthKind::BinaryClusters, 600, 2000, 20, 0.25, 1).unwrap();
        assert_eq!(ds.len(), 2000);
        assert_eq!(ds.domain().dimension(), 600);
        assert_eq!(ds.n_classes(), 20);
        let counts = ds.class_counts();
        assert!(counts.iter().all(|&c| c == 100));
    }

    #[test]
    fn synth_spread_zero_is_centers() {
        let ds = synth_dataset(SynthKind::ContinuousClusters, 10, 30, 3, 0.0, 5).unwrap();
        for i in 0..3 {
            let a = ds.get(i).values();
            let b = ds.get(i + 3).values();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_dataset(SynthKind::BinaryClusters, 32, 100, 4, 0.2, 9).unwrap();
        let b = synth_dataset(SynthKind::BinaryClusters, 32, 100, 4, 0.2, 9).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.values(), y.values());
            assert_eq!(x.label(), y.label());
        }
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let ds = synth_dataset(SynthKind::BinaryClusters, 16, 200, 4, 0.2, 3).unwrap();
        let (train, test) = ds.split_fractions(0.5, 0.25, 7).unwrap();
        assert_eq!(train.len(), 100);
        assert_eq!(test.len(), 50);
        let (train2, _) = ds.split_fractions(0.5, 0.25, 7).unwrap();
        assert_eq!(train.get(0).values(), train2.get(0).values());
    }

    #[test]
    fn packed_scan_matches_distance_to_set() {
        let ds = synth_dataset(SynthKind::BinaryClusters, 100, 50, 5, 0.3, 13).unwrap();
        let packed = PackedBinarySet::build(&ds).unwrap();
        let probe = synth_dataset(SynthKind::BinaryClusters, 100, 20, 5, 0.5, 14).unwrap();
        let words_per_row = 100usize.div_ceil(64);
        let mut query = vec![0u64; words_per_row];
        for rec in probe.iter() {
            pack_bits(rec.values(), &mut query);
            let (d, row) = packed.nearest(&query);
            let (d2, row2) = distance_to_set(rec, &ds, Metric::Hamming).unwrap();
            assert_eq!(d as f64, d2);
            assert_eq!(row, row2);
        }
    }
}
