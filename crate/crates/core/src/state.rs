//! Platform state and the event-application function.
//!
//! [`PlatformState::apply`] is the only mutator. Replaying a log through it
//! reproduces the live state exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::ProtocolConfig;
use crate::consensus::{agreement_difficulty, AgreementError, Tally};
use crate::event::{Event, EventPayload};
use crate::label::FstLabel;
use crate::model::{Annotation, AnnotatorId, FailureReport, FlagKind, ImageId, ImageRecord};
use crate::profile::{AnnotatorProfile, QualificationState, Score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageStatus {
    Open,
    Settled,
    Halted,
    Escalated,
    Adjudicated,
}

impl ImageStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ImageStatus::Open => "Open",
            ImageStatus::Settled => "Settled",
            ImageStatus::Halted => "Halted",
            ImageStatus::Escalated => "Escalated",
            ImageStatus::Adjudicated => "Adjudicated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjudication {
    pub expert_id: String,
    pub label: FstLabel,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageState {
    pub record: ImageRecord,
    pub tally: Tally,
    pub status: ImageStatus,
    /// Present iff status is Settled or Adjudicated.
    pub settled_label: Option<FstLabel>,
    /// Last label reached by crowd consensus, kept after halting or adjudication.
    pub crowd_label: Option<FstLabel>,
    pub adjudication: Option<Adjudication>,
    pub incorrect_flags: u32,
    pub inappropriate_flags: u32,
    /// Seq of the event that moved the image into the review queue.
    pub review_since: Option<u64>,
    /// Indices into [`PlatformState::annotations`], submission order.
    pub annotations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub annotation: Annotation,
    /// Included in the image tally.
    pub counted: bool,
    /// A reference label has been applied to this annotation (whether or not
    /// the annotator still accepted scores).
    pub scored: bool,
}

/// Read-only summary of one image's consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusState {
    pub image_id: ImageId,
    pub tally: Tally,
    pub status: ImageStatus,
    pub settled_label: Option<FstLabel>,
    pub agreement: Option<f64>,
    pub difficulty: Option<f64>,
    pub incorrect_flags: u32,
    pub inappropriate_flags: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event log corrupt: expected seq {expected}, found {found}")]
    Corruption { expected: u64, found: u64 },
    #[error("event {seq} inconsistent with state: {reason}")]
    Inconsistent { seq: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformState {
    pub config: ProtocolConfig,
    pub images: BTreeMap<ImageId, ImageState>,
    pub annotations: Vec<AnnotationEntry>,
    pub profiles: BTreeMap<AnnotatorId, AnnotatorProfile>,
    pub flags: Vec<FailureReport>,
    labeled: BTreeSet<(AnnotatorId, ImageId)>,
    pub last_seq: u64,
}

impl PlatformState {
    pub fn new(config: ProtocolConfig) -> Self {
        PlatformState {
            config,
            images: BTreeMap::new(),
            annotations: Vec::new(),
            profiles: BTreeMap::new(),
            flags: Vec::new(),
            labeled: BTreeSet::new(),
            last_seq: 0,
        }
    }

    /// Rebuild state from a seq-ordered, gap-free event stream.
    pub fn replay<'a>(
        config: ProtocolConfig,
        events: impl IntoIterator<Item = &'a Event>,
    ) -> Result<Self, ReplayError> {
        let mut state = PlatformState::new(config);
        for ev in events {
            state.apply(ev)?;
        }
        Ok(state)
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageState> {
        self.images.get(image_id)
    }

    pub fn profile(&self, annotator_id: &str) -> Option<&AnnotatorProfile> {
        self.profiles.get(annotator_id)
    }

    pub fn qualification(&self, annotator_id: &str) -> QualificationState {
        self.profiles
            .get(annotator_id)
            .map_or(QualificationState::NonQualified, |p| p.state)
    }

    pub fn has_labeled(&self, annotator_id: &str, image_id: &str) -> bool {
        self.labeled
            .contains(&(annotator_id.to_string(), image_id.to_string()))
    }

    pub fn image_annotations<'a>(
        &'a self,
        image: &'a ImageState,
    ) -> impl Iterator<Item = &'a AnnotationEntry> + 'a {
        image.annotations.iter().map(move |&i| &self.annotations[i])
    }

    /// Weighted agreement and difficulty over the counted annotations of a
    /// settled or adjudicated image, using current annotator weights.
    pub fn agreement_difficulty(&self, image_id: &str) -> Result<(f64, f64), AgreementError> {
        let image = self.images.get(image_id).ok_or(AgreementError::NotSettled)?;
        let label = image.settled_label.ok_or(AgreementError::NotSettled)?;
        let weighted = self
            .image_annotations(image)
            .filter(|e| e.counted)
            .map(|e| {
                let w = self
                    .profiles
                    .get(&e.annotation.annotator_id)
                    .map_or(0.0, |p| p.weight);
                (w, e.annotation.label == label)
            });
        agreement_difficulty(weighted)
    }

    pub fn consensus_state(&self, image_id: &str) -> Option<ConsensusState> {
        let image = self.images.get(image_id)?;
        let (agreement, difficulty) = match self.agreement_difficulty(image_id) {
            Ok((a, d)) => (Some(a), Some(d)),
            Err(_) => (None, None),
        };
        Some(ConsensusState {
            image_id: image_id.to_string(),
            tally: image.tally.clone(),
            status: image.status,
            settled_label: image.settled_label,
            agreement,
            difficulty,
            incorrect_flags: image.incorrect_flags,
            inappropriate_flags: image.inappropriate_flags,
        })
    }

    /// Apply one event. Returns the annotators whose score windows changed,
    /// in the order they were scored.
    pub fn apply(&mut self, event: &Event) -> Result<Vec<AnnotatorId>, ReplayError> {
        let expected = self.last_seq + 1;
        if event.seq != expected {
            return Err(ReplayError::Corruption {
                expected,
                found: event.seq,
            });
        }
        let seq = event.seq;
        let bad = |reason: String| ReplayError::Inconsistent { seq, reason };
        let mut scored = Vec::new();

        match &event.payload {
            EventPayload::DatasetIngested { images } => {
                for rec in images {
                    if self.images.contains_key(&rec.image_id) {
                        return Err(bad(format!("duplicate image {}", rec.image_id)));
                    }
                }
                for rec in images {
                    self.images.insert(
                        rec.image_id.clone(),
                        ImageState {
                            record: rec.clone(),
                            tally: Tally::default(),
                            status: ImageStatus::Open,
                            settled_label: None,
                            crowd_label: None,
                            adjudication: None,
                            incorrect_flags: 0,
                            inappropriate_flags: 0,
                            review_since: None,
                            annotations: Vec::new(),
                        },
                    );
                }
            }
            EventPayload::AnnotationSubmitted { annotation } => {
                let key = (annotation.annotator_id.clone(), annotation.image_id.clone());
                if self.labeled.contains(&key) {
                    return Err(bad(format!(
                        "duplicate annotation by {} on {}",
                        key.0, key.1
                    )));
                }
                let counted = annotation.qualified_at_submission || self.config.raw_mode;
                let idx = self.annotations.len();
                let image = self
                    .images
                    .get_mut(&annotation.image_id)
                    .ok_or_else(|| bad(format!("unknown image {}", annotation.image_id)))?;
                image.tally.record(annotation.label, counted);
                image.annotations.push(idx);
                let gold = image.record.gold_reference();
                self.labeled.insert(key);
                self.profiles
                    .entry(annotation.annotator_id.clone())
                    .or_insert_with(|| AnnotatorProfile::new(annotation.annotator_id.clone()));
                self.annotations.push(AnnotationEntry {
                    annotation: annotation.clone(),
                    counted,
                    scored: false,
                });
                if let Some(reference) = gold {
                    if let Some(id) = self.resolve_score(idx, reference, true) {
                        scored.push(id);
                    }
                }
            }
            EventPayload::FlagFiled { report } => {
                let image = self
                    .images
                    .get_mut(&report.image_id)
                    .ok_or_else(|| bad(format!("unknown image {}", report.image_id)))?;
                match report.kind {
                    FlagKind::IncorrectLabel => image.incorrect_flags += 1,
                    FlagKind::InappropriateOrIrrelevant => image.inappropriate_flags += 1,
                }
                self.flags.push(report.clone());
            }
            EventPayload::ConsensusSettled {
                image_id, label, ..
            } => {
                let image = self
                    .images
                    .get_mut(image_id)
                    .ok_or_else(|| bad(format!("unknown image {image_id}")))?;
                image.status = ImageStatus::Settled;
                image.settled_label = Some(*label);
                image.crowd_label = Some(*label);
                scored = self.score_pending(image_id, *label);
            }
            EventPayload::ImageHalted { image_id } => {
                let image = self
                    .images
                    .get_mut(image_id)
                    .ok_or_else(|| bad(format!("unknown image {image_id}")))?;
                image.status = ImageStatus::Halted;
                image.settled_label = None;
                image.review_since = Some(seq);
            }
            EventPayload::ImageEscalated { image_id } => {
                let image = self
                    .images
                    .get_mut(image_id)
                    .ok_or_else(|| bad(format!("unknown image {image_id}")))?;
                image.status = ImageStatus::Escalated;
                image.review_since = Some(seq);
            }
            EventPayload::Adjudicated {
                image_id,
                expert_id,
                label,
            } => {
                let image = self
                    .images
                    .get_mut(image_id)
                    .ok_or_else(|| bad(format!("unknown image {image_id}")))?;
                image.status = ImageStatus::Adjudicated;
                image.settled_label = Some(*label);
                image.adjudication = Some(Adjudication {
                    expert_id: expert_id.clone(),
                    label: *label,
                    seq,
                });
                scored = self.score_pending(image_id, *label);
            }
            EventPayload::QualificationChanged {
                annotator_id,
                from,
                to,
            } => {
                let profile = self
                    .profiles
                    .get_mut(annotator_id)
                    .ok_or_else(|| bad(format!("unknown annotator {annotator_id}")))?;
                if profile.state != *from {
                    return Err(bad(format!(
                        "annotator {annotator_id} is {:?}, event says {from:?}",
                        profile.state
                    )));
                }
                profile.state = *to;
            }
        }
        self.last_seq = seq;
        Ok(scored)
    }

    /// Score every not-yet-scored annotation of an image against `reference`.
    fn score_pending(&mut self, image_id: &str, reference: FstLabel) -> Vec<AnnotatorId> {
        let pending: Vec<usize> = self.images[image_id]
            .annotations
            .iter()
            .copied()
            .filter(|&i| !self.annotations[i].scored)
            .collect();
        pending
            .into_iter()
            .filter_map(|i| self.resolve_score(i, reference, false))
            .collect()
    }

    fn resolve_score(&mut self, idx: usize, reference: FstLabel, gold: bool) -> Option<AnnotatorId> {
        let entry = &mut self.annotations[idx];
        entry.scored = true;
        let matched = entry.annotation.label == reference;
        let profile = self.profiles.get_mut(&entry.annotation.annotator_id)?;
        if !profile.accepts_scores(&self.config) {
            return None;
        }
        profile.push_score(Score { matched, gold }, &self.config);
        Some(profile.annotator_id.clone())
    }
}
