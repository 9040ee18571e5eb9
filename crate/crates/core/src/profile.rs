//! Annotator qualification: a sliding window of match/mismatch scores
//! against reference labels drives the NonQualified → Qualified →
//! Disqualified state machine.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::ProtocolConfig;
use crate::model::AnnotatorId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QualificationState {
    NonQualified,
    Qualified,
    Disqualified,
}

/// One scored annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub matched: bool,
    /// Scored against an expert gold label (as opposed to a crowd consensus).
    pub gold: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("annotator {0} is disqualified and can no longer be scored")]
pub struct ScoringDisqualified(pub AnnotatorId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub annotator_id: AnnotatorId,
    pub state: QualificationState,
    /// Most recent scores, oldest first, at most `qual_window` long.
    pub score_window: VecDeque<Score>,
    pub scored_total: u64,
    pub weight: f64,
}

impl AnnotatorProfile {
    pub fn new(annotator_id: impl Into<AnnotatorId>) -> Self {
        AnnotatorProfile {
            annotator_id: annotator_id.into(),
            state: QualificationState::NonQualified,
            score_window: VecDeque::new(),
            scored_total: 0,
            weight: 0.0,
        }
    }

    pub fn is_qualified(&self) -> bool {
        self.state == QualificationState::Qualified
    }

    pub fn window_matches(&self) -> usize {
        self.score_window.iter().filter(|s| s.matched).count()
    }

    /// Matches over window length; `None` on an empty window.
    pub fn windowed_agreement(&self) -> Option<f64> {
        if self.score_window.is_empty() {
            return None;
        }
        Some(self.window_matches() as f64 / self.score_window.len() as f64)
    }

    /// Whether new scores are still recorded for this annotator.
    pub fn accepts_scores(&self, config: &ProtocolConfig) -> bool {
        self.state != QualificationState::Disqualified || config.allow_requalification
    }

    /// Record a score, trim the window and refresh the weight. Does not
    /// change the qualification state; see [`Self::pending_transition`].
    pub fn push_score(&mut self, score: Score, config: &ProtocolConfig) {
        self.score_window.push_back(score);
        while self.score_window.len() > config.qual_window as usize {
            self.score_window.pop_front();
        }
        self.scored_total += 1;
        self.weight = self.compute_weight(config);
    }

    fn compute_weight(&self, config: &ProtocolConfig) -> f64 {
        let (hits, len) = self
            .score_window
            .iter()
            .filter(|s| !config.weights_from_gold_only || s.gold)
            .fold((0usize, 0usize), |(h, n), s| (h + usize::from(s.matched), n + 1));
        if len == 0 {
            0.0
        } else {
            hits as f64 / len as f64
        }
    }

    /// The state the qualification rule moves this profile to, if any.
    pub fn pending_transition(&self, config: &ProtocolConfig) -> Option<QualificationState> {
        let agreement = self.windowed_agreement()?;
        match self.state {
            QualificationState::Qualified if agreement < config.qual_min_agreement => {
                Some(QualificationState::Disqualified)
            }
            QualificationState::Qualified => None,
            QualificationState::Disqualified if !config.allow_requalification => None,
            QualificationState::NonQualified | QualificationState::Disqualified => {
                let ready = self.scored_total >= u64::from(config.qual_min_scored)
                    && agreement >= config.qual_min_agreement;
                ready.then_some(QualificationState::Qualified)
            }
        }
    }

    /// Push a score and apply any resulting transition.
    pub fn score_and_requalify(
        &mut self,
        score: Score,
        config: &ProtocolConfig,
    ) -> Result<QualificationState, ScoringDisqualified> {
        if !self.accepts_scores(config) {
            return Err(ScoringDisqualified(self.annotator_id.clone()));
        }
        self.push_score(score, config);
        if let Some(next) = self.pending_transition(config) {
            self.state = next;
        }
        Ok(self.state)
    }
}
