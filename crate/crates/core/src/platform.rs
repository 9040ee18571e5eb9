//! Command handling for the consensus protocol.
//!
//! Each command validates against the current state, appends the resulting
//! events to the log, and applies them. Derived events (settlement,
//! escalation, halting, qualification changes) are appended right after the
//! event that caused them.

use serde::{Deserialize, Serialize};

use crate::config::ProtocolConfig;
use crate::consensus::{check_consensus, ConsensusDecision};
use crate::event::{Event, EventLog, EventPayload, EventStore, LogError, SettleRule};
use crate::label::FstLabel;
use crate::model::{Annotation, AnnotatorId, FailureReport, ImageId, ImageRecord, Principal, Role};
use crate::profile::QualificationState;
use crate::state::{ConsensusState, ImageStatus, PlatformState, ReplayError};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown image {0}")]
    UnknownImage(ImageId),
    #[error("image {0} already exists")]
    DuplicateImage(ImageId),
    #[error("annotator {annotator_id} already labeled image {image_id}")]
    DuplicateAnnotation {
        annotator_id: AnnotatorId,
        image_id: ImageId,
    },
    #[error("image {image_id} is {status:?}, not open for annotation")]
    ImageNotOpen {
        image_id: ImageId,
        status: ImageStatus,
    },
    #[error("image {image_id} is {status:?} and cannot be reviewed")]
    NotReviewable {
        image_id: ImageId,
        status: ImageStatus,
    },
    #[error("{principal} lacks the role required for this action")]
    PermissionDenied { principal: String },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

impl ProtocolError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::UnknownImage(_) => "unknown_image",
            ProtocolError::DuplicateImage(_) => "duplicate_image",
            ProtocolError::DuplicateAnnotation { .. } => "duplicate_annotation",
            ProtocolError::ImageNotOpen { .. } => "image_not_open",
            ProtocolError::NotReviewable { .. } => "not_reviewable",
            ProtocolError::PermissionDenied { .. } => "permission_denied",
            ProtocolError::Log(_) => "storage_failure",
            ProtocolError::Replay(_) => "log_corruption",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionOutcome {
    pub accepted: bool,
    pub annotation_id: String,
    pub seq: u64,
    /// Whether the annotation entered the image tally.
    pub counted: bool,
    pub new_status: ImageStatus,
    pub settled_label: Option<FstLabel>,
    pub qualification_state: QualificationState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub n_images: usize,
    pub n_gold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReviewReason {
    Tie,
    Flagged,
}

/// An entry in the expert review queue. Carries no tally data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub image_id: ImageId,
    pub file_path: String,
    pub reason: ReviewReason,
}

pub struct Platform<S> {
    state: PlatformState,
    log: EventLog<S>,
}

impl<S: EventStore> Platform<S> {
    pub fn new(config: ProtocolConfig, store: S) -> Self {
        Platform {
            state: PlatformState::new(config),
            log: EventLog::new(store),
        }
    }

    /// Rebuild from existing events, then keep appending to `store`.
    pub fn open(config: ProtocolConfig, store: S, events: &[Event]) -> Result<Self, ReplayError> {
        let state = PlatformState::replay(config, events)?;
        let log = EventLog::resume(store, state.last_seq);
        Ok(Platform { state, log })
    }

    pub fn state(&self) -> &PlatformState {
        &self.state
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.state.config
    }

    pub fn log(&self) -> &EventLog<S> {
        &self.log
    }

    pub fn into_parts(self) -> (PlatformState, S) {
        (self.state, self.log.into_store())
    }

    fn emit(&mut self, payload: EventPayload) -> Result<(Event, Vec<AnnotatorId>), ProtocolError> {
        let event = self.log.append(payload)?;
        let scored = self.state.apply(&event)?;
        Ok((event, scored))
    }

    fn emit_transitions(&mut self, annotators: Vec<AnnotatorId>) -> Result<(), ProtocolError> {
        for id in annotators {
            let Some(profile) = self.state.profile(&id) else {
                continue;
            };
            if let Some(to) = profile.pending_transition(self.config()) {
                let from = profile.state;
                self.emit(EventPayload::QualificationChanged {
                    annotator_id: id,
                    from,
                    to,
                })?;
            }
        }
        Ok(())
    }

    pub fn ingest(&mut self, images: Vec<ImageRecord>) -> Result<IngestSummary, ProtocolError> {
        let mut seen = std::collections::BTreeSet::new();
        for rec in &images {
            if self.state.images.contains_key(&rec.image_id) || !seen.insert(&rec.image_id) {
                return Err(ProtocolError::DuplicateImage(rec.image_id.clone()));
            }
        }
        let summary = IngestSummary {
            n_images: images.len(),
            n_gold: images.iter().filter(|r| r.is_gold_seed).count(),
        };
        if !images.is_empty() {
            self.emit(EventPayload::DatasetIngested { images })?;
        }
        Ok(summary)
    }

    pub fn submit_annotation(
        &mut self,
        annotator_id: &str,
        image_id: &str,
        label: FstLabel,
    ) -> Result<SubmissionOutcome, ProtocolError> {
        let image = self
            .state
            .image(image_id)
            .ok_or_else(|| ProtocolError::UnknownImage(image_id.to_string()))?;
        if self.state.has_labeled(annotator_id, image_id) {
            return Err(ProtocolError::DuplicateAnnotation {
                annotator_id: annotator_id.to_string(),
                image_id: image_id.to_string(),
            });
        }
        if image.status != ImageStatus::Open {
            return Err(ProtocolError::ImageNotOpen {
                image_id: image_id.to_string(),
                status: image.status,
            });
        }

        let seq = self.log.next_seq();
        let annotation = Annotation {
            annotation_id: format!("ann-{seq}"),
            image_id: image_id.to_string(),
            annotator_id: annotator_id.to_string(),
            label,
            submitted_at: seq,
            qualified_at_submission: self.state.qualification(annotator_id)
                == QualificationState::Qualified,
        };
        let annotation_id = annotation.annotation_id.clone();
        let (_, scored) = self.emit(EventPayload::AnnotationSubmitted { annotation })?;
        self.emit_transitions(scored)?;

        let tally = &self.state.images[image_id].tally;
        match check_consensus(tally, self.config()) {
            ConsensusDecision::NoConsensus => {}
            ConsensusDecision::Consensus(settled) => {
                let rule = if tally
                    .leader()
                    .is_some_and(|(_, lead)| lead >= self.config().lead_margin)
                {
                    SettleRule::LeadMargin
                } else {
                    SettleRule::MajorityAtCap
                };
                let (_, scored) = self.emit(EventPayload::ConsensusSettled {
                    image_id: image_id.to_string(),
                    label: settled,
                    rule,
                })?;
                self.emit_transitions(scored)?;
            }
            ConsensusDecision::TieAtCap => {
                self.emit(EventPayload::ImageEscalated {
                    image_id: image_id.to_string(),
                })?;
            }
        }

        let image = &self.state.images[image_id];
        let entry = &self.state.annotations[*image.annotations.last().expect("just added")];
        Ok(SubmissionOutcome {
            accepted: true,
            annotation_id,
            seq,
            counted: entry.counted,
            new_status: image.status,
            settled_label: image.settled_label,
            qualification_state: self.state.qualification(annotator_id),
        })
    }

    pub fn file_failure_report(&mut self, report: FailureReport) -> Result<ImageStatus, ProtocolError> {
        let image_id = report.image_id.clone();
        if self.state.image(&image_id).is_none() {
            return Err(ProtocolError::UnknownImage(image_id));
        }
        self.emit(EventPayload::FlagFiled { report })?;
        let image = &self.state.images[&image_id];
        let cfg = self.config();
        let tripped = image.inappropriate_flags >= cfg.inappropriate_halt
            || image.incorrect_flags >= cfg.incorrect_halt;
        if tripped && matches!(image.status, ImageStatus::Open | ImageStatus::Settled) {
            self.emit(EventPayload::ImageHalted {
                image_id: image_id.clone(),
            })?;
        }
        Ok(self.state.images[&image_id].status)
    }

    /// Expert adjudication. The expert's label takes precedence over any
    /// crowd consensus.
    pub fn adjudicate(
        &mut self,
        principal: &Principal,
        image_id: &str,
        label: FstLabel,
    ) -> Result<ConsensusState, ProtocolError> {
        if principal.role != Role::Expert {
            return Err(ProtocolError::PermissionDenied {
                principal: principal.principal_id.clone(),
            });
        }
        let image = self
            .state
            .image(image_id)
            .ok_or_else(|| ProtocolError::UnknownImage(image_id.to_string()))?;
        if !matches!(
            image.status,
            ImageStatus::Halted | ImageStatus::Escalated | ImageStatus::Settled
        ) {
            return Err(ProtocolError::NotReviewable {
                image_id: image_id.to_string(),
                status: image.status,
            });
        }
        let (_, scored) = self.emit(EventPayload::Adjudicated {
            image_id: image_id.to_string(),
            expert_id: principal.principal_id.clone(),
            label,
        })?;
        self.emit_transitions(scored)?;
        Ok(self
            .state
            .consensus_state(image_id)
            .expect("image exists"))
    }

    /// Halted and escalated images, in the order they entered review.
    pub fn review_queue(&self) -> Vec<ReviewItem> {
        review_queue(&self.state)
    }
}

pub fn review_queue(state: &PlatformState) -> Vec<ReviewItem> {
    let mut items: Vec<_> = state
        .images
        .values()
        .filter_map(|img| {
            let reason = match img.status {
                ImageStatus::Halted => ReviewReason::Flagged,
                ImageStatus::Escalated => ReviewReason::Tie,
                _ => return None,
            };
            Some((
                img.review_since.unwrap_or(0),
                ReviewItem {
                    image_id: img.record.image_id.clone(),
                    file_path: img.record.file_path.clone(),
                    reason,
                },
            ))
        })
        .collect();
    items.sort_by(|a, b| (a.0, &a.1.image_id).cmp(&(b.0, &b.1.image_id)));
    items.into_iter().map(|(_, item)| item).collect()
}
