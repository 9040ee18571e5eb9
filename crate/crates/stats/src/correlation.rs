use std::collections::BTreeMap;

use fstlab_core::FstLabel;
use serde::{Deserialize, Serialize};

use crate::{ImageId, StatsError};

/// Per-image label pairs from two methods.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelVectorPair {
    pub pairs: Vec<(FstLabel, FstLabel)>,
}

impl LabelVectorPair {
    pub fn new(pairs: Vec<(FstLabel, FstLabel)>) -> Self {
        LabelVectorPair { pairs }
    }

    /// Pairs for images labeled by both methods, in image-id order.
    pub fn align(a: &BTreeMap<ImageId, FstLabel>, b: &BTreeMap<ImageId, FstLabel>) -> Self {
        let pairs = a
            .iter()
            .filter_map(|(id, &la)| b.get(id).map(|&lb| (la, lb)))
            .collect();
        LabelVectorPair { pairs }
    }

    /// Numeric projections of pairs where neither side is not-applicable.
    pub fn numeric(&self) -> (Vec<f64>, Vec<f64>) {
        self.pairs
            .iter()
            .filter_map(|(a, b)| Some((f64::from(a.numeric()?), f64::from(b.numeric()?))))
            .unzip()
    }

    pub fn n_effective(&self) -> usize {
        self.pairs
            .iter()
            .filter(|(a, b)| a.is_applicable() && b.is_applicable())
            .count()
    }
}

/// Sample Pearson correlation (two-pass).
pub fn pearson_f64(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DegenerateInput(format!(
            "length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::DegenerateInput(format!("{n} pairs, need at least 3")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of the numeric projections, not-applicable pairs dropped.
pub fn pearson(pairs: &LabelVectorPair) -> Result<f64, StatsError> {
    let (x, y) = pairs.numeric();
    pearson_f64(&x, &y)
}
