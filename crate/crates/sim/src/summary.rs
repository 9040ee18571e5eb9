use std::collections::BTreeMap;

use fstlab_core::event::Event;
use fstlab_core::model::{AnnotatorId, ImageId};
use fstlab_core::{EventPayload, FstLabel, QualificationState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_images: usize,
    pub n_submissions: usize,
    pub settled: usize,
    pub escalated: usize,
    pub halted: usize,
    pub settlement_rate: f64,
    /// Submissions on an image up to and including the one that settled it,
    /// averaged over settled images.
    pub mean_annotations_to_settle: Option<f64>,
    /// Fraction of settled images whose consensus equals the truth.
    pub truth_agreement: Option<f64>,
    pub qualified: usize,
    pub non_qualified: usize,
    pub disqualified: usize,
    /// Annotators that reached Qualified at any point.
    pub ever_qualified: usize,
    pub budget_exhausted: bool,
}

/// Metrics recomputed from the event log alone.
pub fn summarize(events: &[Event], truth: &BTreeMap<ImageId, FstLabel>, budget: Option<usize>) -> Summary {
    let mut n_images = 0;
    let mut n_submissions = 0;
    let mut per_image: BTreeMap<&str, usize> = BTreeMap::new();
    let mut settled: BTreeMap<&str, (FstLabel, usize)> = BTreeMap::new();
    let mut escalated = 0;
    let mut halted = 0;
    let mut quals: BTreeMap<&AnnotatorId, QualificationState> = BTreeMap::new();
    let mut ever: BTreeMap<&AnnotatorId, bool> = BTreeMap::new();

    for e in events {
        match &e.payload {
            EventPayload::DatasetIngested { images } => n_images += images.len(),
            EventPayload::AnnotationSubmitted { annotation } => {
                n_submissions += 1;
                *per_image.entry(&annotation.image_id).or_default() += 1;
                quals
                    .entry(&annotation.annotator_id)
                    .or_insert(QualificationState::NonQualified);
                ever.entry(&annotation.annotator_id).or_insert(false);
            }
            EventPayload::ConsensusSettled { image_id, label, .. } => {
                let n = per_image.get(image_id.as_str()).copied().unwrap_or(0);
                settled.entry(image_id).or_insert((*label, n));
            }
            EventPayload::ImageEscalated { .. } => escalated += 1,
            EventPayload::ImageHalted { .. } => halted += 1,
            EventPayload::QualificationChanged { annotator_id, to, .. } => {
                quals.insert(annotator_id, *to);
                if *to == QualificationState::Qualified {
                    ever.insert(annotator_id, true);
                }
            }
            EventPayload::FlagFiled { .. } | EventPayload::Adjudicated { .. } => {}
        }
    }

    let n_settled = settled.len();
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    let matches = settled
        .iter()
        .filter(|(id, (label, _))| truth.get(**id) == Some(label))
        .count();
    let count = |s| quals.values().filter(|&&q| q == s).count();
    let resolved = n_settled + escalated + halted;
    Summary {
        n_images,
        n_submissions,
        settled: n_settled,
        escalated,
        halted,
        settlement_rate: ratio(n_settled, n_images).unwrap_or(0.0),
        mean_annotations_to_settle: ratio(settled.values().map(|(_, n)| n).sum(), n_settled),
        truth_agreement: ratio(matches, n_settled),
        qualified: count(QualificationState::Qualified),
        non_qualified: count(QualificationState::NonQualified),
        disqualified: count(QualificationState::Disqualified),
        ever_qualified: ever.values().filter(|&&e| e).count(),
        budget_exhausted: budget.is_some_and(|b| n_submissions >= b) && resolved < n_images,
    }
}
