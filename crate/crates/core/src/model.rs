//! Records stored in the platform state and carried by events.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::label::FstLabel;

pub type ImageId = String;
pub type AnnotatorId = String;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: ImageId,
    /// Path relative to the dataset's image root.
    pub file_path: String,
    pub source: String,
    /// Expert id to label. Empty for images without expert annotations.
    #[serde(default)]
    pub gold_labels: BTreeMap<String, FstLabel>,
    pub is_gold_seed: bool,
}

impl ImageRecord {
    pub fn new(
        image_id: impl Into<String>,
        file_path: impl Into<String>,
        source: impl Into<String>,
        gold_labels: BTreeMap<String, FstLabel>,
    ) -> Self {
        let is_gold_seed = !gold_labels.is_empty();
        ImageRecord {
            image_id: image_id.into(),
            file_path: file_path.into(),
            source: source.into(),
            gold_labels,
            is_gold_seed,
        }
    }

    /// The expert label used to score annotators: the label of the first
    /// expert in id order.
    pub fn gold_reference(&self) -> Option<FstLabel> {
        self.gold_labels.values().next().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotation_id: String,
    pub image_id: ImageId,
    pub annotator_id: AnnotatorId,
    pub label: FstLabel,
    /// Sequence number of the event that recorded this annotation.
    pub submitted_at: u64,
    /// Whether the annotator was qualified when submitting. Never changes afterwards.
    pub qualified_at_submission: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlagKind {
    IncorrectLabel,
    InappropriateOrIrrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReport {
    pub image_id: ImageId,
    pub annotator_id: AnnotatorId,
    pub kind: FlagKind,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Annotator,
    Expert,
    Admin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub principal_id: String,
    pub role: Role,
}

impl Principal {
    pub fn new(principal_id: impl Into<String>, role: Role) -> Self {
        Principal {
            principal_id: principal_id.into(),
            role,
        }
    }
}
