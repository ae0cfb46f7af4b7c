//! Structured experiment reports and their serialized forms.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Mi,
    Smi,
    Ai,
    Aai,
    Sweep,
    Theorem1,
    DecisionRegions,
    Train,
}

/// Tie statistics from attribute-inference style attacks.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TieStats {
    /// Challenges whose top-score set had more than one candidate.
    pub tied_challenges: u64,
    /// Total challenges evaluated.
    pub total_challenges: u64,
    /// Largest tie set seen.
    pub max_tie: u64,
}

/// One experiment run: its advantage and AUC numbers, tie statistics, and
/// the exact configuration and seed that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub kind: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advantage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    /// AUC per distance group, keyed by the formatted group value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc_per_distance: Option<BTreeMap<String, f64>>,
    /// AUC per (class, distance group).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc_per_class: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_stats: Option<TieStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub seed: u64,
    /// Verbatim snapshot of the run configuration.
    pub config: serde_json::Value,
    /// Kind-specific payload (sweep tables, region volumes, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl ExperimentReport {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            kind,
            scorer: None,
            advantage: None,
            auc: None,
            auc_per_distance: None,
            auc_per_class: None,
            tie_stats: None,
            trials: None,
            seed,
            config: serde_json::Value::Null,
            extra: BTreeMap::new(),
        }
    }

    /// Serialize to the report document format (pretty JSON with a trailing
    /// newline; field order is fixed, so identical runs yield identical
    /// bytes).
    pub fn to_document(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::Dataset(format!("report serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_document()?.as_bytes())?;
        Ok(())
    }

    pub fn from_document(doc: &str) -> Result<Self> {
        serde_json::from_str(doc)
            .map_err(|e| crate::error::Error::Dataset(format!("report parse: {e}")))
    }
}

/// Write a two-column plot-data table (`group<TAB>value`), one row per entry.
pub fn write_plot_data<K: std::fmt::Display, V: std::fmt::Display>(
    path: &Path,
    rows: &[(K, V)],
) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for (k, v) in rows {
        writeln!(f, "{k}\t{v}")?;
    }
    Ok(())
}

/// Format a distance-group key the way reports and plot files do.
pub fn format_group_key(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e9 {
        format!("{}", value as i64)
    } else {
        format!("{value:.2}")
    }
}
