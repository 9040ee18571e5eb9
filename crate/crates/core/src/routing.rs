//! Task routing: which image an annotator should label next.

use serde::{Deserialize, Serialize};

use crate::model::{AnnotatorId, ImageId};
use crate::state::{ImageState, ImageStatus, PlatformState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignmentReason {
    LeastAnnotated,
    GoldProbe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskAssignment {
    pub image_id: ImageId,
    pub file_url: String,
    pub assigned_to: AnnotatorId,
    pub reason: AssignmentReason,
}

/// Pick the open image with the fewest counted annotations that the
/// annotator has not labeled, ties broken by image id. With `gold_probe`,
/// prefer an eligible gold image and fall back to the normal rule when none
/// is left. `None` means there is no work for this annotator.
pub fn next_task(state: &PlatformState, annotator_id: &str, gold_probe: bool) -> Option<TaskAssignment> {
    let eligible = || {
        state.images.values().filter(move |img| {
            img.status == ImageStatus::Open && !state.has_labeled(annotator_id, &img.record.image_id)
        })
    };
    let least = |it: &mut dyn Iterator<Item = &ImageState>| {
        // BTreeMap iteration is by image id, so min_by_key keeps the first id on ties.
        it.min_by_key(|img| img.tally.total_qualified)
            .map(|img| img.record.clone())
    };

    if gold_probe {
        if let Some(rec) = least(&mut eligible().filter(|img| img.record.is_gold_seed)) {
            return Some(TaskAssignment {
                image_id: rec.image_id,
                file_url: rec.file_path,
                assigned_to: annotator_id.to_string(),
                reason: AssignmentReason::GoldProbe,
            });
        }
    }
    least(&mut eligible()).map(|rec| TaskAssignment {
        image_id: rec.image_id,
        file_url: rec.file_path,
        assigned_to: annotator_id.to_string(),
        reason: AssignmentReason::LeastAnnotated,
    })
}
