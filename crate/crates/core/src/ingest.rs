//! CSV dataset ingestion: parsing, validation, normalization, label
//! remapping and seeded splitting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::experiment::kmeans_labels;
use crate::seed::derive_seed;
use crate::space::{DomainKind, FeatureDomain, FeatureVector};

/// Where class labels come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRule {
    /// A named CSV column.
    Column(String),
    /// Cluster the feature rows into k classes.
    DeriveKmeans(usize),
}

impl LabelRule {
    /// Parse `"column"` or `"derive:kmeans(k)"`.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("derive:kmeans(") {
            let k: usize = rest
                .strip_suffix(')')
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("bad label rule {s:?}, want derive:kmeans(k)"))
                })?;
            Ok(LabelRule::DeriveKmeans(k))
        } else {
            Ok(LabelRule::Column(s.to_string()))
        }
    }
}

impl std::fmt::Display for LabelRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelRule::Column(name) => write!(f, "{name}"),
            LabelRule::DeriveKmeans(k) => write!(f, "derive:kmeans({k})"),
        }
    }
}

/// How a dataset file is read and split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub label: LabelRule,
    pub domain: DomainKind,
    pub train_fraction: f64,
    pub test_fraction: f64,
    /// Min-max normalize continuous features to [-1, 1].
    pub normalize: bool,
}

/// Affine per-column scaling applied to continuous features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Normalization {
    pub columns: Vec<ColumnScale>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ColumnScale {
    pub min: f64,
    pub max: f64,
}

impl ColumnScale {
    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            -1.0 + 2.0 * (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    pub fn invert(&self, u: f64) -> f64 {
        if self.max > self.min {
            self.min + (u + 1.0) / 2.0 * (self.max - self.min)
        } else {
            self.min
        }
    }
}

/// An ingested dataset with its split and provenance metadata.
pub struct LoadedDataset {
    pub full: LabeledDataset,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub normalization: Option<Normalization>,
    pub feature_names: Vec<String>,
    /// Raw label value per class index, when labels came from a column.
    pub label_values: Option<Vec<f64>>,
}

/// Read, validate, label, normalize and split a CSV dataset.
pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<LoadedDataset> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)
        || !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)
        || spec.train_fraction + spec.test_fraction > 1.0
    {
        return Err(Error::Dataset(
            "split fractions must lie in (0,1) and sum to at most 1".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&spec.path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();

    let label_column = match &spec.label {
        LabelRule::Column(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Dataset(format!("unknown label column {name:?}")))?,
        ),
        LabelRule::DeriveKmeans(_) => None,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_column)
        .map(|(_, h)| h.clone())
        .collect();
    let m = feature_names.len();
    if m == 0 {
        return Err(Error::Dataset("no feature columns".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<f64> = Vec::new();
    for (row_index, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Dataset(format!(
                "row {}: {} cells, header has {}",
                row_index + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(m);
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::Dataset(format!(
                    "row {}, column {:?}: non-numeric cell {cell:?}",
                    row_index + 1,
                    headers[col]
                ))
            })?;
            if Some(col) == label_column {
                raw_labels.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dataset("dataset has no rows".into()));
    }

    // normalize / validate features
    let normalization = match (spec.domain, spec.normalize) {
        (DomainKind::Continuous, true) => {
            let mut columns = Vec::with_capacity(m);
            for j in 0..m {
                let min = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
                let max = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
                columns.push(ColumnScale { min, max });
            }
            for row in &mut rows {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = columns[j].apply(*v).clamp(-1.0, 1.0);
                }
            }
            Some(Normalization { columns })
        }
        _ => None,
    };

    // labels
    let (labels, label_values) = match &spec.label {
        LabelRule::Column(_) => {
            let mut distinct: Vec<f64> = raw_labels.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let labels = raw_labels
                .iter()
                .map(|v| distinct.partition_point(|d| d < v))
                .collect();
            (labels, Some(distinct))
        }
        LabelRule::DeriveKmeans(k) => {
            let labels = kmeans_labels(&rows, *k, 100, derive_seed(seed, "kmeans"))?;
            (labels, None)
        }
    };
    let n_classes = labels.iter().copied().max().unwrap() + 1;

    let domain = FeatureDomain::new(spec.domain, m)?;
    let records: Vec<FeatureVector> = rows
        .into_iter()
        .zip(&labels)
        .map(|(values, &label)| FeatureVector::new(domain, values, Some(label)))
        .collect::<Result<_>>()?;
    let full = LabeledDataset::new(domain, n_classes, records)?;
    let (train, test) = full.split_fractions(
        spec.train_fraction,
        spec.test_fraction,
        derive_seed(seed, "split"),
    )?;
    Ok(LoadedDataset {
        full,
        train,
        test,
        normalization,
        feature_names,
        label_values,
    })
}

/// Write a dataset as CSV with a trailing label column.
pub fn write_dataset_csv(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let m = dataset.domain().dimension();
    let mut header: Vec<String> = (0..m).map(|i| format!("f{i}")).collect();
    header.push("label".to_string());
    writer.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(m + 1);
    for rec in dataset.iter() {
        row.clear();
        for &v in rec.values() {
            row.push(format_value(v));
        }
        row.push(rec.label().unwrap().to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        // shortest round-trippable form
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn parses_binary_csv_with_label_column() {
        let f = write_tmp("a,b,c,label\n0,1,0,5\n1,1,0,5\n0,0,1,9\n1,0,1,9\n");
        let spec = DatasetSpec {
            path: f.path().to_path_buf(),
            label: LabelRule::Column("label".into()),
            domain: DomainKind::Binary,
            train_fraction: 0.5,
            test_fraction: 0.25,
            normalize: false,
        };
        let loaded = load_dataset(&spec, 1).unwrap();
        assert_eq!(loaded.full.len(), 4);
        assert_eq!(loaded.full.domain().dimension(), 3);
        assert_eq!(loaded.full.n_classes(), 2);
        // raw labels 5 and 9 remap to 0 and 1 in sorted order
        assert_eq!(loaded.label_values, Some(vec![5.0, 9.0]));
        assert_eq!(loaded.full.get(0).label(), Some(0));
        assert_eq!(loaded.full.get(2).label(), Some(1));
        assert_eq!(loaded.train.len(), 2);
        assert_eq!(loaded.test.len(), 1);
    }

    #[test]
    fn normalization_maps_range_to_unit_interval_exactly() {
        let f = write_tmp("x,y,label\n10,0,0\n30,1,1\n20,0.5,0\n");
        let spec = DatasetSpec {
            path: f.path().to_path_buf(),
            label: LabelRule::Column("label".into()),
            domain: DomainKind::Continuous,
            train_fraction: 0.34,
            test_fraction: 0.33,
            normalize: true,
        };
        let loaded = load_dataset(&spec, 1).unwrap();
        let col0: Vec<f64> = loaded.full.iter().map(|r| r.values()[0]).collect();
        assert_eq!(col0, vec![-1.0, 1.0, 0.0]);
        // affine and invertible
        let norm = loaded.normalization.unwrap();
        for (&u, raw) in col0.iter().zip([10.0, 30.0, 20.0]) {
            assert!((norm.columns[0].invert(u) - raw).abs() < 1e-9);
        }
    }

    #[test]
    fn ragged_and_non_numeric_rows_are_rejected() {
        let ragged = write_tmp("a,b,label\n0,1,0\n1,0\n");
        let spec = DatasetSpec {
            path: ragged.path().to_path_buf(),
            label: LabelRule::Column("label".into()),
            domain: DomainKind::Binary,
            train_fraction: 0.5,
            test_fraction: 0.25,
            normalize: false,
        };
        assert!(load_dataset(&spec, 1).is_err());

        let bad = write_tmp("a,b,label\n0,hello,0\n");
        let spec = DatasetSpec {
            path: bad.path().to_path_buf(),
            ..spec
        };
        assert!(matches!(load_dataset(&spec, 1), Err(Error::Dataset(_))));
    }

    #[test]
    fn unknown_label_column_is_rejected() {
        let f = write_tmp("a,b\n0,1\n");
        let spec = DatasetSpec {
            path: f.path().to_path_buf(),
            label: LabelRule::Column("label".into()),
            domain: DomainKind::Binary,
            train_fraction: 0.5,
            test_fraction: 0.25,
            normalize: false,
        };
        assert!(matches!(load_dataset(&spec, 1), Err(Error::Dataset(_))));
    }

    #[test]
    fn kmeans_labels_match_direct_call() {
        let mut content = String::from("x,y\n");
        let mut rows = Vec::new();
        let mut rng = crate::seed::rng_from_seed(297);
        use rand::Rng;
        for i in 0..40 {
            let c = if i % 2 == 0 { 0.6 } else { -0.6 };
            let x = (c + rng.random_range(-0.1..=0.1f64)).clamp(-1.0, 1.0);
            let y = (c + rng.random_range(-0.1..=0.1f64)).clamp(-1.0, 1.0);
            content.push_str(&format!("{x},{y}\n"));
            rows.push(vec![x, y]);
        }
        let f = write_tmp(&content);
        let spec = DatasetSpec {
            path: f.path().to_path_buf(),
            label: LabelRule::DeriveKmeans(2),
            domain: DomainKind::Continuous,
            train_fraction: 0.5,
            test_fraction: 0.25,
            normalize: false,
        };
        let seed = 33;
        let loaded = load_dataset(&spec, seed).unwrap();
        let direct = kmeans_labels(&rows, 2, 100, derive_seed(seed, "kmeans")).unwrap();
        let got: Vec<usize> = loaded.full.iter().map(|r| r.label().unwrap()).collect();
        assert_eq!(got, direct);
    }

    #[test]
    fn label_rule_parsing() {
        assert_eq!(
            LabelRule::parse("derive:kmeans(5)").unwrap(),
            LabelRule::DeriveKmeans(5)
        );
        assert_eq!(
            LabelRule::parse("klass").unwrap(),
            LabelRule::Column("klass".into())
        );
        assert!(LabelRule::parse("derive:kmeans(x)").is_err());
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let ds = crate::dataset::synth_dataset(
            crate::dataset::SynthKind::BinaryClusters,
            10,
            30,
            3,
            0.3,
            199,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        write_dataset_csv(&path, &ds).unwrap();
        let spec = DatasetSpec {
            path: path.clone(),
            label: LabelRule::Column("label".into()),
            domain: DomainKind::Binary,
            train_fraction: 0.5,
            test_fraction: 0.25,
            normalize: false,
        };
        let loaded = load_dataset(&spec, 1).unwrap();
        assert_eq!(loaded.full.len(), ds.len());
        for (a, b) in loaded.full.iter().zip(ds.iter()) {
            assert_eq!(a.values(), b.values());
            assert_eq!(a.label(), b.label());
        }
    }
}
