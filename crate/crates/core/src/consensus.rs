//! Tally bookkeeping and the settlement rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ProtocolConfig;
use crate::label::FstLabel;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    /// Counted annotations per label; labels with zero count are absent.
    pub counts: BTreeMap<FstLabel, u32>,
    /// Sum of `counts`.
    pub total_qualified: u32,
    /// Every annotation recorded for the image, counted or not.
    pub total_all: u32,
}

impl Tally {
    pub fn from_counts(counts: impl IntoIterator<Item = (FstLabel, u32)>) -> Self {
        let mut t = Tally::default();
        for (label, n) in counts {
            for _ in 0..n {
                t.record(label, true);
            }
        }
        t
    }

    pub fn count(&self, label: FstLabel) -> u32 {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn record(&mut self, label: FstLabel, counted: bool) {
        self.total_all += 1;
        if counted {
            *self.counts.entry(label).or_insert(0) += 1;
            self.total_qualified += 1;
        }
    }

    /// The unique label with the highest count and its lead over the
    /// runner-up. `None` when empty or when the top count is shared.
    pub fn leader(&self) -> Option<(FstLabel, u32)> {
        let mut best: Option<(FstLabel, u32)> = None;
        let mut second = 0;
        for (&label, &n) in &self.counts {
            match best {
                Some((_, b)) if n > b => {
                    second = b;
                    best = Some((label, n));
                }
                Some((_, b)) => second = second.max(n).min(b),
                None => best = Some((label, n)),
            }
        }
        let (label, top) = best?;
        (top > second).then_some((label, top - second))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConsensusDecision {
    NoConsensus,
    /// Settled by lead margin or by majority at the cap.
    Consensus(FstLabel),
    /// Cap reached with the top count shared.
    TieAtCap,
}

/// Settlement rule: a category leading every other by `lead_margin`
/// settles; otherwise, once `max_annotations` counted annotations exist,
/// the plurality label settles or a shared top count is a tie.
pub fn check_consensus(tally: &Tally, config: &ProtocolConfig) -> ConsensusDecision {
    let leader = tally.leader();
    if let Some((label, lead)) = leader {
        if lead >= config.lead_margin {
            return ConsensusDecision::Consensus(label);
        }
    }
    if tally.total_qualified >= config.max_annotations {
        return match leader {
            Some((label, _)) => ConsensusDecision::Consensus(label),
            None => ConsensusDecision::TieAtCap,
        };
    }
    ConsensusDecision::NoConsensus
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgreementError {
    #[error("image has no consensus label yet")]
    NotSettled,
    #[error("image has no weighted qualified annotations")]
    NoQualifiedAnnotations,
}

/// Weighted agreement and difficulty from `(weight, matches_consensus)` pairs.
///
/// `A = Σw[match] / Σw`, `D = Σw[mismatch] / Σw`.
pub fn agreement_difficulty(
    weighted: impl IntoIterator<Item = (f64, bool)>,
) -> Result<(f64, f64), AgreementError> {
    let (mut hit, mut miss) = (0.0, 0.0);
    for (w, matched) in weighted {
        if matched {
            hit += w;
        } else {
            miss += w;
        }
    }
    let total = hit + miss;
    if total <= 0.0 {
        return Err(AgreementError::NoQualifiedAnnotations);
    }
    Ok((hit / total, miss / total))
}
