//! Exact / within-k agreement and 7×7 confusion matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fstlab_core::FstLabel;
use serde::{Deserialize, Serialize};

use crate::correlation::LabelVectorPair;
use crate::{ImageId, StatsError};

/// Counts indexed `[label_a.index()][label_b.index()]`: row/column 0 is
/// not-applicable, 1..6 are the skin types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 7]; 7],
    pub total: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(FstLabel, FstLabel)]) -> Self {
        let mut counts = [[0u64; 7]; 7];
        for (a, b) in pairs {
            counts[a.index()][b.index()] += 1;
        }
        ConfusionMatrix {
            counts,
            total: pairs.len() as u64,
        }
    }

    pub fn get(&self, a: FstLabel, b: FstLabel) -> u64 {
        self.counts[a.index()][b.index()]
    }

    pub fn trace(&self) -> u64 {
        (0..7).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_totals(&self) -> [u64; 7] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn col_totals(&self) -> [u64; 7] {
        let mut t = [0; 7];
        for row in &self.counts {
            for (j, c) in row.iter().enumerate() {
                t[j] += c;
            }
        }
        t
    }

    /// Cell percentage of its column total (0 for empty columns).
    pub fn col_percentages(&self) -> [[f64; 7]; 7] {
        let cols = self.col_totals();
        let mut out = [[0.0; 7]; 7];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if cols[j] > 0 {
                    out[i][j] = 100.0 * c as f64 / cols[j] as f64;
                }
            }
        }
        out
    }

    /// Cell percentage of its row total (0 for empty rows).
    pub fn row_percentages(&self) -> [[f64; 7]; 7] {
        let rows = self.row_totals();
        let mut out = [[0.0; 7]; 7];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if rows[i] > 0 {
                    out[i][j] = 100.0 * c as f64 / rows[i] as f64;
                }
            }
        }
        out
    }

    /// Long-form CSV: `label_a,label_b,count,col_pct,row_pct`.
    pub fn to_csv(&self) -> String {
        let cp = self.col_percentages();
        let rp = self.row_percentages();
        let mut s = String::from("label_a,label_b,count,col_pct,row_pct\n");
        for i in 0..7 {
            for j in 0..7 {
                let (a, b) = (FstLabel::from_index(i).unwrap(), FstLabel::from_index(j).unwrap());
                let _ = writeln!(s, "{a},{b},{},{:.2},{:.2}", self.counts[i][j], cp[i][j], rp[i][j]);
            }
        }
        s
    }

    /// Aligned table of counts with column percentages in parentheses.
    pub fn to_text(&self, name_a: &str, name_b: &str) -> String {
        let cp = self.col_percentages();
        let mut s = format!("rows: {name_a}, columns: {name_b}, n = {}\n", self.total);
        let _ = write!(s, "{:>5}", "");
        for j in 0..7 {
            let _ = write!(s, "{:>13}", FstLabel::from_index(j).unwrap().roman());
        }
        s.push('\n');
        for i in 0..7 {
            let _ = write!(s, "{:>5}", FstLabel::from_index(i).unwrap().roman());
            for j in 0..7 {
                let _ = write!(s, "{:>13}", format!("{} ({:.0}%)", self.counts[i][j], cp[i][j]));
            }
            s.push('\n');
        }
        s
    }
}

fn paired(
    labels_a: &BTreeMap<ImageId, FstLabel>,
    labels_b: &BTreeMap<ImageId, FstLabel>,
) -> Result<Vec<(FstLabel, FstLabel)>, StatsError> {
    if let Some(id) = labels_b.keys().find(|id| !labels_a.contains_key(*id)) {
        return Err(StatsError::MissingLabel(id.clone()));
    }
    labels_a
        .iter()
        .map(|(id, &a)| {
            labels_b
                .get(id)
                .map(|&b| (a, b))
                .ok_or_else(|| StatsError::MissingLabel(id.clone()))
        })
        .collect()
}

pub fn confusion_matrix(
    labels_a: &BTreeMap<ImageId, FstLabel>,
    labels_b: &BTreeMap<ImageId, FstLabel>,
) -> Result<ConfusionMatrix, StatsError> {
    let pairs = paired(labels_a, labels_b)?;
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(ConfusionMatrix::from_pairs(&pairs))
}

/// Fraction of applicable pairs whose types differ by at most `k`.
pub fn within_k_agreement(pairs: &LabelVectorPair, k: u8) -> Result<f64, StatsError> {
    let (n, hits) = pairs
        .pairs
        .iter()
        .filter_map(|(a, b)| a.distance(*b))
        .fold((0usize, 0usize), |(n, h), d| (n + 1, h + usize::from(d <= k)));
    if n == 0 {
        return Err(StatsError::NoApplicablePairs);
    }
    Ok(hits as f64 / n as f64)
}

pub fn exact_agreement(pairs: &LabelVectorPair) -> Result<f64, StatsError> {
    within_k_agreement(pairs, 0)
}
