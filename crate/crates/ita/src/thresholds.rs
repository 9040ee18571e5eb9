//! ITA → skin-type cut points and their calibration against expert labels.
//!
//! Calibration initializes each cut between adjacent classes at the mean of
//! the lighter class's first quartile and the darker class's third quartile
//! (per-image ITA, expert-1 classes), then walks the cuts lightest-first and
//! shifts each by the integer offset in −5..=5 degrees that maximizes the
//! number of images where both experts and the ITA label agree. Each shift
//! is applied before the next cut is scanned.

use std::collections::BTreeMap;

use fstlab_core::FstLabel;
use serde::{Deserialize, Serialize};

/// Five strictly decreasing cut points, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItaThresholds {
    pub t12: f64,
    pub t23: f64,
    pub t34: f64,
    pub t45: f64,
    pub t56: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("skin type {0} has no images with an ITA value and an expert label")]
    Underdetermined(FstLabel),
    #[error("calibrated thresholds are not strictly decreasing: {0:?}")]
    Degenerate([f64; 5]),
}

impl Default for ItaThresholds {
    /// Commonly used ITA category boundaries: 55, 41, 28, 10, −30 degrees.
    fn default() -> Self {
        ItaThresholds {
            t12: 55.0,
            t23: 41.0,
            t34: 28.0,
            t45: 10.0,
            t56: -30.0,
        }
    }
}

impl ItaThresholds {
    pub fn from_array(t: [f64; 5]) -> Result<Self, CalibrationError> {
        if t.windows(2).all(|w| w[0] > w[1]) && t.iter().all(|v| v.is_finite()) {
            Ok(ItaThresholds {
                t12: t[0],
                t23: t[1],
                t34: t[2],
                t45: t[3],
                t56: t[4],
            })
        } else {
            Err(CalibrationError::Degenerate(t))
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.t12, self.t23, self.t34, self.t45, self.t56]
    }

    pub fn is_ordered(&self) -> bool {
        Self::from_array(self.as_array()).is_ok()
    }
}

/// Map an ITA to a skin type. A value equal to a cut belongs to the darker class.
pub fn ita_to_fst(ita_deg: f64, thresholds: &ItaThresholds) -> FstLabel {
    classify(ita_deg, &thresholds.as_array())
}

fn classify(ita: f64, cuts: &[f64; 5]) -> FstLabel {
    cuts.iter()
        .position(|&t| ita > t)
        .map_or(FstLabel::VI, |k| FstLabel::TYPES[k])
}

/// Quantile with linear interpolation between order statistics
/// (`h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStep {
    /// 0 for T12 through 4 for T56.
    pub index: usize,
    pub start: f64,
    pub offset: i32,
    pub concordance_before: usize,
    pub concordance_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub thresholds: ItaThresholds,
    pub initial: [f64; 5],
    pub initial_concordance: usize,
    pub final_concordance: usize,
    pub steps: Vec<ThresholdStep>,
}

/// Images where expert 1, expert 2 and the ITA label all agree.
pub fn concordance(
    ita_by_image: &BTreeMap<String, f64>,
    gold_e1: &BTreeMap<String, FstLabel>,
    gold_e2: &BTreeMap<String, FstLabel>,
    cuts: &[f64; 5],
) -> usize {
    ita_by_image
        .iter()
        .filter(|(id, &ita)| {
            let (Some(&e1), Some(&e2)) = (gold_e1.get(*id), gold_e2.get(*id)) else {
                return false;
            };
            e1.is_applicable() && e1 == e2 && classify(ita, cuts) == e1
        })
        .count()
}

/// Offsets in preference order: 0, −1, +1, −2, +2, … so that the first
/// strict improvement wins ties by smaller |offset|, then smaller offset.
fn offsets() -> impl Iterator<Item = i32> {
    std::iter::once(0).chain((1..=5).flat_map(|k| [-k, k]))
}

pub fn calibrate_thresholds(
    ita_by_image: &BTreeMap<String, f64>,
    gold_e1: &BTreeMap<String, FstLabel>,
    gold_e2: &BTreeMap<String, FstLabel>,
) -> Result<Calibration, CalibrationError> {
    let mut classes: [Vec<f64>; 6] = Default::default();
    for (id, &ita) in ita_by_image {
        if let Some(k) = gold_e1.get(id).and_then(|l| l.numeric()) {
            classes[usize::from(k) - 1].push(ita);
        }
    }
    for (k, values) in classes.iter_mut().enumerate() {
        if values.is_empty() {
            return Err(CalibrationError::Underdetermined(FstLabel::TYPES[k]));
        }
        values.sort_by(f64::total_cmp);
    }

    let mut cuts = [0.0; 5];
    for (k, cut) in cuts.iter_mut().enumerate() {
        *cut = 0.5 * (quantile(&classes[k], 0.25) + quantile(&classes[k + 1], 0.75));
    }
    let initial = cuts;
    let initial_concordance = concordance(ita_by_image, gold_e1, gold_e2, &cuts);

    let mut steps = Vec::with_capacity(5);
    let mut current = initial_concordance;
    for index in 0..5 {
        let start = cuts[index];
        let before = current;
        let mut best = (0, before);
        for offset in offsets() {
            let mut trial = cuts;
            trial[index] = start + f64::from(offset);
            let c = concordance(ita_by_image, gold_e1, gold_e2, &trial);
            if c > best.1 {
                best = (offset, c);
            }
        }
        cuts[index] = start + f64::from(best.0);
        current = best.1;
        steps.push(ThresholdStep {
            index,
            start,
            offset: best.0,
            concordance_before: before,
            concordance_after: current,
        });
    }

    Ok(Calibration {
        thresholds: ItaThresholds::from_array(cuts)?,
        initial,
        initial_concordance,
        final_concordance: current,
        steps,
    })
}
