//! Stratified selection of images for expert review.
//!
//! Images are partitioned by method A's label (including not-applicable)
//! crossed with whether the two methods disagree by more than a threshold.
//! A fixed number of images is drawn from each cell.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::label::FstLabel;
use crate::model::ImageId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReviewError {
    #[error("image {0} has a label from method A but not from method B")]
    MissingLabel(ImageId),
}

/// Disagreement by more than `threshold` units; any pair involving
/// not-applicable counts as discrepant unless both sides are not-applicable.
pub fn is_discrepant(a: FstLabel, b: FstLabel, threshold: u8) -> bool {
    match a.distance(b) {
        Some(d) => d > threshold,
        None => a != b,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label_a: FstLabel,
    pub discrepant: bool,
    pub available: usize,
    pub selected: Vec<ImageId>,
    /// Fewer members than requested; every member was selected.
    pub short: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSelection {
    pub strata: Vec<Stratum>,
    /// Every discrepant candidate, sorted by id.
    pub discrepant: Vec<ImageId>,
    pub n_candidates: usize,
}

impl ReviewSelection {
    pub fn selected(&self) -> Vec<ImageId> {
        let mut all: Vec<_> = self.strata.iter().flat_map(|s| s.selected.iter().cloned()).collect();
        all.sort();
        all
    }

    pub fn discrepant_fraction(&self) -> f64 {
        if self.n_candidates == 0 {
            0.0
        } else {
            self.discrepant.len() as f64 / self.n_candidates as f64
        }
    }

    pub fn has_short_strata(&self) -> bool {
        self.strata.iter().any(|s| s.short)
    }
}

/// Draw `n_per_stratum` images uniformly without replacement from each
/// (label_a, discrepant) cell. Cells smaller than requested return all their
/// members and are marked `short`. Deterministic for a fixed seed.
pub fn select_review_set(
    labels_a: &BTreeMap<ImageId, FstLabel>,
    labels_b: &BTreeMap<ImageId, FstLabel>,
    n_per_stratum: usize,
    discrepancy_threshold: u8,
    rng_seed: u64,
) -> Result<ReviewSelection, ReviewError> {
    let mut cells: BTreeMap<(FstLabel, bool), Vec<ImageId>> = BTreeMap::new();
    let mut discrepant = Vec::new();
    for (id, &a) in labels_a {
        let b = *labels_b
            .get(id)
            .ok_or_else(|| ReviewError::MissingLabel(id.clone()))?;
        let disc = is_discrepant(a, b, discrepancy_threshold);
        if disc {
            discrepant.push(id.clone());
        }
        cells.entry((a, disc)).or_default().push(id.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let strata = cells
        .into_iter()
        .map(|((label_a, disc), members)| {
            let available = members.len();
            let short = available < n_per_stratum;
            let mut selected: Vec<ImageId> = if short {
                members
            } else {
                index::sample(&mut rng, available, n_per_stratum)
                    .into_iter()
                    .map(|i| members[i].clone())
                    .collect()
            };
            selected.sort();
            Stratum {
                label_a,
                discrepant: disc,
                available,
                selected,
                short,
            }
        })
        .collect();

    Ok(ReviewSelection {
        strata,
        discrepant,
        n_candidates: labels_a.len(),
    })
}
