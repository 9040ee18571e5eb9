use fstlab_core::FstLabel;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Distribution of emitted labels given the true label.
///
/// Rows and columns use [`FstLabel::index`] order (NA first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfusionKernel {
    /// `accuracy` on the true type, the rest split evenly between the two
    /// neighbouring types. At I and VI the single neighbour takes all of it.
    /// A not-applicable truth is kept with `accuracy` and otherwise spread
    /// uniformly over I..VI.
    OffByOne { accuracy: f64 },
    Matrix { rows: [[f64; 7]; 7] },
}

impl Default for ConfusionKernel {
    fn default() -> Self {
        ConfusionKernel::OffByOne { accuracy: 0.8 }
    }
}

impl ConfusionKernel {
    pub fn identity() -> Self {
        ConfusionKernel::OffByOne { accuracy: 1.0 }
    }

    pub fn row(&self, truth: FstLabel) -> [f64; 7] {
        match self {
            ConfusionKernel::Matrix { rows } => rows[truth.index()],
            ConfusionKernel::OffByOne { accuracy } => {
                let p = *accuracy;
                let mut row = [0.0; 7];
                let t = truth.index();
                row[t] = p;
                if t == 0 {
                    for c in &mut row[1..] {
                        *c = (1.0 - p) / 6.0;
                    }
                } else {
                    let neighbours: Vec<usize> = [t - 1, t + 1].into_iter().filter(|&i| (1..=6).contains(&i)).collect();
                    for &i in &neighbours {
                        row[i] = (1.0 - p) / neighbours.len() as f64;
                    }
                }
                row
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ConfusionKernel::OffByOne { accuracy } = self {
            if !(0.0..=1.0).contains(accuracy) {
                return Err(format!("accuracy {accuracy} outside [0, 1]"));
            }
        }
        for truth in FstLabel::ALL {
            let row = self.row(truth);
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(format!("row {truth} has a negative or non-finite entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("row {truth} sums to {sum}"));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, truth: FstLabel, rng: &mut R) -> FstLabel {
        let dist = WeightedIndex::new(self.row(truth)).expect("validated kernel row");
        FstLabel::from_index(dist.sample(rng)).expect("index < 7")
    }
}
