//! Feature-space geometry: domains, vectors, metrics, portions and siblings.
//!
//! Feature vectors live in a binary ({0,1}^m) or continuous ([-1,1]^m)
//! product space. The metrics here are conserving: they sit between the
//! max metric and the Manhattan metric on the product space, which is what
//! makes the sibling-containment radii below valid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of per-feature domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    /// Each feature is 0 or 1.
    Binary,
    /// Each feature is a real in [-1, 1].
    Continuous,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainKind::Binary => write!(f, "binary"),
            DomainKind::Continuous => write!(f, "continuous"),
        }
    }
}

/// An m-dimensional product feature space with fixed per-feature bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDomain {
    kind: DomainKind,
    dimension: usize,
}

impl FeatureDomain {
    pub fn new(kind: DomainKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter(
                "feature dimension must be at least 1".into(),
            ));
        }
        Ok(Self { kind, dimension })
    }

    pub fn binary(dimension: usize) -> Result<Self> {
        Self::new(DomainKind::Binary, dimension)
    }

    pub fn continuous(dimension: usize) -> Result<Self> {
        Self::new(DomainKind::Continuous, dimension)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Per-feature bounds: {0,1} for binary, [-1,1] for continuous.
    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::Binary => (0.0, 1.0),
            DomainKind::Continuous => (-1.0, 1.0),
        }
    }

    /// Per-feature diameter under |x - y|.
    pub fn feature_diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        hi - lo
    }

    /// Largest possible distance between two vectors of this domain.
    pub fn diameter(&self, metric: Metric) -> f64 {
        let m = self.dimension as f64;
        match metric {
            Metric::Hamming => m,
            Metric::Manhattan => self.feature_diameter() * m,
            Metric::Euclidean => self.feature_diameter() * m.sqrt(),
        }
    }

    pub fn validate_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: values.len(),
            });
        }
        let (lo, hi) = self.bounds();
        for (index, &value) in values.iter().enumerate() {
            let ok = match self.kind {
                DomainKind::Binary => value == 0.0 || value == 1.0,
                DomainKind::Continuous => value.is_finite() && value >= lo && value <= hi,
            };
            if !ok {
                return Err(Error::ValueOutOfBounds {
                    index,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Clamp a raw value into the domain (used after additive perturbations).
    pub fn clamp_value(&self, value: f64) -> f64 {
        let (lo, hi) = self.bounds();
        value.clamp(lo, hi)
    }
}

/// A point of the feature space with an optional class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    domain: FeatureDomain,
    values: Vec<f64>,
    label: Option<usize>,
}

impl FeatureVector {
    pub fn new(domain: FeatureDomain, values: Vec<f64>, label: Option<usize>) -> Result<Self> {
        domain.validate_values(&values)?;
        Ok(Self {
            domain,
            values,
            label,
        })
    }

    pub fn domain(&self) -> FeatureDomain {
        self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn set_label(&mut self, label: Option<usize>) {
        self.label = label;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Distance metric on the feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Hamming,
    Manhattan,
    Euclidean,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Hamming => write!(f, "hamming"),
            Metric::Manhattan => write!(f, "manhattan"),
            Metric::Euclidean => write!(f, "euclidean"),
        }
    }
}

impl Metric {
    /// Hamming only applies to binary domains, Manhattan and Euclidean to
    /// continuous ones.
    pub fn compatible_with(&self, kind: DomainKind) -> bool {
        match self {
            Metric::Hamming => kind == DomainKind::Binary,
            Metric::Manhattan | Metric::Euclidean => kind == DomainKind::Continuous,
        }
    }

    pub fn check_domain(&self, kind: DomainKind) -> Result<()> {
        if self.compatible_with(kind) {
            Ok(())
        } else {
            Err(Error::MetricDomainMismatch {
                metric: self.to_string(),
                domain: kind.to_string(),
            })
        }
    }

    /// The natural metric for a domain kind.
    pub fn default_for(kind: DomainKind) -> Metric {
        match kind {
            DomainKind::Binary => Metric::Hamming,
            DomainKind::Continuous => Metric::Manhattan,
        }
    }

    pub(crate) fn distance_values(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Hamming => a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Distance between two vectors of the same domain.
pub fn distance(x: &FeatureVector, y: &FeatureVector, metric: Metric) -> Result<f64> {
    if x.domain() != y.domain() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    metric.check_domain(x.domain().kind())?;
    Ok(metric.distance_values(x.values(), y.values()))
}

/// Minimum distance from `x` to any vector of `set`, with the index of one
/// achieving vector. Ties break to the lowest index.
pub fn distance_to_set(
    x: &FeatureVector,
    set: &crate::dataset::LabeledDataset,
    metric: Metric,
) -> Result<(f64, usize)> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    metric.check_domain(x.domain().kind())?;
    if set.domain() != x.domain() {
        return Err(Error::DimensionMismatch {
            expected: set.domain().dimension(),
            got: x.len(),
        });
    }
    let mut best = f64::INFINITY;
    let mut best_index = 0;
    for (i, rec) in set.iter().enumerate() {
        let d = metric.distance_values(x.values(), rec.values());
        if d < best {
            best = d;
            best_index = i;
        }
    }
    Ok((best, best_index))
}

/// A feature vector with the features in `unknown` masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct Portion {
    domain: FeatureDomain,
    /// Known feature values; entries at masked indices are zeroed and
    /// carry no information.
    values: Vec<f64>,
    /// Sorted masked indices, 1 <= |unknown| < m.
    unknown: Vec<usize>,
    label: Option<usize>,
}

impl Portion {
    pub fn domain(&self) -> FeatureDomain {
        self.domain
    }

    pub fn known_values(&self) -> &[f64] {
        &self.values
    }

    pub fn unknown_indices(&self) -> &[usize] {
        &self.unknown
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn is_masked(&self, index: usize) -> bool {
        self.unknown.binary_search(&index).is_ok()
    }
}

impl std::fmt::Display for Portion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for i in 0..self.values.len() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if self.is_masked(i) {
                write!(f, "*")?;
            } else {
                write!(f, "{}", self.values[i])?;
            }
        }
        write!(f, ")")
    }
}

/// Mask the features of `x` at the indices in `unknown`.
pub fn make_portion(x: &FeatureVector, unknown: &[usize]) -> Result<Portion> {
    let m = x.len();
    if unknown.is_empty() {
        return Err(Error::InvalidUnknownSet("unknown set is empty".into()));
    }
    let mut sorted: Vec<usize> = unknown.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != unknown.len() {
        return Err(Error::InvalidUnknownSet("duplicate indices".into()));
    }
    if let Some(&max) = sorted.last() {
        if max >= m {
            return Err(Error::InvalidUnknownSet(format!(
                "index {max} out of range for dimension {m}"
            )));
        }
    }
    if sorted.len() >= m {
        return Err(Error::InvalidUnknownSet(
            "unknown set must leave at least one feature known".into(),
        ));
    }
    let mut values = x.values().to_vec();
    for &i in &sorted {
        values[i] = 0.0;
    }
    Ok(Portion {
        domain: x.domain(),
        values,
        unknown: sorted,
        label: x.label(),
    })
}

/// Default cap on the number of enumerated siblings.
pub const DEFAULT_SIBLING_CAP: u64 = 1 << 20;

/// The candidate completions of a portion, one per assignment of bin
/// representatives to the masked features.
///
/// Candidates are indexable in a fixed odometer order (the last masked index
/// varies fastest) rather than stored, so large sets stay cheap to hold.
#[derive(Debug, Clone)]
pub struct SiblingSet {
    portion: Portion,
    bins: usize,
    representatives: Vec<f64>,
    cardinality: u64,
}

impl SiblingSet {
    pub fn portion(&self) -> &Portion {
        &self.portion
    }

    pub fn bins_per_feature(&self) -> usize {
        self.bins
    }

    /// Number of candidates, `bins ^ |unknown|`.
    pub fn cardinality(&self) -> u64 {
        self.cardinality
    }

    /// Bin representative values, in bin order.
    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    /// The bin index a raw feature value falls in.
    pub fn bin_of(&self, value: f64) -> usize {
        match self.portion.domain.kind() {
            DomainKind::Binary => {
                if value == 0.0 {
                    0
                } else {
                    1
                }
            }
            DomainKind::Continuous => {
                let (lo, hi) = self.portion.domain.bounds();
                let width = (hi - lo) / self.bins as f64;
                (((value - lo) / width) as usize).min(self.bins - 1)
            }
        }
    }

    /// Decompose a candidate index into per-masked-feature bin digits,
    /// ordered like `unknown_indices()`.
    pub fn digits_of(&self, index: u64, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.portion.unknown.len());
        let mut rem = index;
        let base = self.bins as u64;
        for slot in (0..out.len()).rev() {
            out[slot] = (rem % base) as usize;
            rem /= base;
        }
    }

    /// Candidate index of the sibling whose masked features fall in the same
    /// bins as `truth`.
    pub fn index_of(&self, truth: &FeatureVector) -> Result<u64> {
        if truth.domain() != self.portion.domain {
            return Err(Error::DimensionMismatch {
                expected: self.portion.domain.dimension(),
                got: truth.len(),
            });
        }
        let mut index = 0u64;
        for &i in &self.portion.unknown {
            index = index * self.bins as u64 + self.bin_of(truth.values()[i]) as u64;
        }
        Ok(index)
    }

    /// Write the masked-feature values of candidate `index` into `out`.
    pub fn assignment(&self, index: u64, digits: &mut [usize], out: &mut [f64]) {
        self.digits_of(index, digits);
        for (slot, &digit) in digits.iter().enumerate() {
            out[slot] = self.representatives[digit];
        }
    }

    /// Materialize candidate `index` as a full vector. The label is the
    /// portion's label.
    pub fn candidate(&self, index: u64) -> FeatureVector {
        let unknown = &self.portion.unknown;
        let mut digits = vec![0usize; unknown.len()];
        self.digits_of(index, &mut digits);
        let mut values = self.portion.values.clone();
        for (slot, &i) in unknown.iter().enumerate() {
            values[i] = self.representatives[digits[slot]];
        }
        FeatureVector {
            domain: self.portion.domain,
            values,
            label: self.portion.label,
        }
    }

    /// Iterate over all candidates in index order.
    pub fn iter(&self) -> impl Iterator<Item = FeatureVector> + '_ {
        (0..self.cardinality).map(move |i| self.candidate(i))
    }
}

/// Enumerate the siblings of a portion with the default candidate cap.
pub fn enumerate_siblings(portion: &Portion, bins_per_feature: usize) -> Result<SiblingSet> {
    enumerate_siblings_capped(portion, bins_per_feature, DEFAULT_SIBLING_CAP)
}

/// Enumerate the siblings of a portion, refusing (rather than truncating)
/// when the candidate count exceeds `cap`.
pub fn enumerate_siblings_capped(
    portion: &Portion,
    bins_per_feature: usize,
    cap: u64,
) -> Result<SiblingSet> {
    let domain = portion.domain;
    let representatives: Vec<f64> = match domain.kind() {
        DomainKind::Binary => {
            if bins_per_feature != 2 {
                return Err(Error::InvalidParameter(
                    "binary features have exactly 2 value bins".into(),
                ));
            }
            vec![0.0, 1.0]
        }
        DomainKind::Continuous => {
            if !(2..=10).contains(&bins_per_feature) {
                return Err(Error::InvalidParameter(
                    "continuous features take between 2 and 10 value bins".into(),
                ));
            }
            let (lo, hi) = domain.bounds();
            let width = (hi - lo) / bins_per_feature as f64;
            (0..bins_per_feature)
                .map(|i| lo + width * (i as f64 + 0.5))
                .collect()
        }
    };
    let cardinality = (bins_per_feature as u128).pow(portion.unknown.len() as u32);
    if cardinality > cap as u128 {
        return Err(Error::SiblingCapExceeded { cardinality, cap });
    }
    Ok(SiblingSet {
        portion: portion.clone(),
        bins: bins_per_feature,
        representatives,
        cardinality: cardinality as u64,
    })
}

/// Minimal radius r such that every sibling set with `unknowns` masked
/// features is contained in the r-ball around the original vector.
///
/// Hamming: r = i. Manhattan on [-1,1]: r = 2i. Euclidean on [-1,1]:
/// r = sqrt(4 i).
pub fn radius_for_unknowns(metric: Metric, unknowns: usize) -> Result<f64> {
    if unknowns == 0 {
        return Err(Error::InvalidParameter(
            "number of unknown features must be at least 1".into(),
        ));
    }
    let i = unknowns as f64;
    Ok(match metric {
        Metric::Hamming => i,
        Metric::Manhattan => 2.0 * i,
        Metric::Euclidean => (4.0 * i).sqrt(),
    })
}

/// Expected distance of a uniformly random guess of `unknowns` features from
/// their true values: 2m'/3 for Manhattan on [-1,1], m'/2 for Hamming.
pub fn expected_random_guess_distance(metric: Metric, unknowns: usize) -> Result<f64> {
    if unknowns == 0 {
        return Err(Error::InvalidParameter(
            "number of unknown features must be at least 1".into(),
        ));
    }
    let m = unknowns as f64;
    match metric {
        Metric::Manhattan => Ok(2.0 * m / 3.0),
        Metric::Hamming => Ok(m / 2.0),
        Metric::Euclidean => Err(Error::MetricDomainMismatch {
            metric: "euclidean".into(),
            domain: "random-guess distance".into(),
        }),
    }
}
