//! A deliberately naive re-implementation of the consensus protocol.
//!
//! Only raw facts are stored (annotations, flags, pushed scores, sticky
//! statuses). Tallies, consensus decisions and qualification states are
//! recomputed from those facts every time they are needed. Parameters are
//! hard-coded to the published values and all ratios use integer arithmetic.

use std::collections::BTreeMap;

use fstlab_core::{FlagKind, FstLabel, ImageRecord, ImageStatus, PlatformState, QualificationState};

use super::streams::Cmd;

const LEAD: u32 = 3;
const CAP: u32 = 20;
const MIN_SCORED: usize = 25;
const WINDOW: usize = 50;
const INCORRECT_HALT: u32 = 2;
const INAPPROPRIATE_HALT: u32 = 1;

/// `m / n >= 0.40` without floating point.
fn at_least_forty_percent(m: usize, n: usize) -> bool {
    5 * m >= 2 * n
}

fn slot(label: FstLabel) -> usize {
    FstLabel::ALL.iter().position(|&l| l == label).unwrap()
}

#[derive(Debug, Clone)]
struct Img {
    gold: Option<FstLabel>,
    status: ImageStatus,
    label: Option<FstLabel>,
    incorrect: u32,
    inappropriate: u32,
    /// Positions in `Oracle::anns`.
    anns: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Ann {
    who: String,
    label: FstLabel,
    counted: bool,
    scored: bool,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    raw_mode: bool,
    images: BTreeMap<String, Img>,
    anns: Vec<Ann>,
    history: BTreeMap<String, Vec<bool>>,
}

impl Oracle {
    pub fn new(raw_mode: bool) -> Self {
        Oracle {
            raw_mode,
            images: BTreeMap::new(),
            anns: Vec::new(),
            history: BTreeMap::new(),
        }
    }

    /// Walk the whole score history from the first score.
    pub fn qualification(&self, who: &str) -> QualificationState {
        let mut st = QualificationState::NonQualified;
        let Some(h) = self.history.get(who) else {
            return st;
        };
        for i in 0..h.len() {
            let w = &h[(i + 1).saturating_sub(WINDOW)..=i];
            let m = w.iter().filter(|&&b| b).count();
            match st {
                QualificationState::Qualified if !at_least_forty_percent(m, w.len()) => {
                    st = QualificationState::Disqualified;
                }
                QualificationState::NonQualified if i + 1 >= MIN_SCORED && at_least_forty_percent(m, w.len()) => {
                    st = QualificationState::Qualified;
                }
                _ => {}
            }
        }
        st
    }

    /// (window matches, window length, scores ever pushed)
    pub fn window(&self, who: &str) -> (usize, usize, u64) {
        let h = self.history.get(who).map_or(&[][..], |v| v.as_slice());
        let w = &h[h.len().saturating_sub(WINDOW)..];
        (w.iter().filter(|&&b| b).count(), w.len(), h.len() as u64)
    }

    /// Counts per label, counted total, and all annotations.
    fn tally(&self, image: &str) -> ([u32; 7], u32, u32) {
        let mut counts = [0u32; 7];
        let (mut q, mut all) = (0, 0);
        for a in self.images[image].anns.iter().map(|&i| &self.anns[i]) {
            all += 1;
            if a.counted {
                counts[slot(a.label)] += 1;
                q += 1;
            }
        }
        (counts, q, all)
    }

    /// `Some(Ok(label))` settles, `Some(Err(()))` is a tie at the cap.
    fn decide(counts: &[u32; 7], total: u32) -> Option<Result<FstLabel, ()>> {
        for l in 0..7 {
            let others = (0..7).filter(|&j| j != l).map(|j| counts[j]).max().unwrap();
            if counts[l] >= others + LEAD {
                return Some(Ok(FstLabel::ALL[l]));
            }
        }
        if total >= CAP {
            let top = *counts.iter().max().unwrap();
            let holders: Vec<usize> = (0..7).filter(|&l| counts[l] == top).collect();
            return Some(if holders.len() == 1 {
                Ok(FstLabel::ALL[holders[0]])
            } else {
                Err(())
            });
        }
        None
    }

    fn score(&mut self, idx: usize, reference: FstLabel) {
        self.anns[idx].scored = true;
        let who = self.anns[idx].who.clone();
        if self.qualification(&who) == QualificationState::Disqualified {
            return;
        }
        let matched = self.anns[idx].label == reference;
        self.history.entry(who).or_default().push(matched);
    }

    fn score_pending(&mut self, image: &str, reference: FstLabel) {
        let pending: Vec<usize> = self.images[image]
            .anns
            .iter()
            .copied()
            .filter(|&i| !self.anns[i].scored)
            .collect();
        for i in pending {
            self.score(i, reference);
        }
    }

    /// Re-run the settlement rule over every open image.
    fn settle_all(&mut self) {
        let ids: Vec<String> = self.images.keys().cloned().collect();
        for id in ids {
            if self.images[&id].status != ImageStatus::Open {
                continue;
            }
            let (counts, q, _) = self.tally(&id);
            match Self::decide(&counts, q) {
                None => {}
                Some(Ok(label)) => {
                    let img = self.images.get_mut(&id).unwrap();
                    img.status = ImageStatus::Settled;
                    img.label = Some(label);
                    self.score_pending(&id, label);
                }
                Some(Err(())) => self.images.get_mut(&id).unwrap().status = ImageStatus::Escalated,
            }
        }
    }

    /// Apply one command. `Ok(Some(counted))` for accepted submissions.
    pub fn apply(&mut self, cmd: &Cmd) -> Result<Option<bool>, &'static str> {
        let out = match cmd {
            Cmd::Ingest(records) => self.ingest(records),
            Cmd::Submit { who, image, label } => self.submit(who, image, *label),
            Cmd::Flag { image, kind, .. } => self.flag(image, *kind),
            Cmd::Adjudicate { image, label } => self.adjudicate(image, *label),
        };
        self.settle_all();
        out
    }

    fn ingest(&mut self, records: &[ImageRecord]) -> Result<Option<bool>, &'static str> {
        if records.iter().any(|r| self.images.contains_key(&r.image_id)) {
            return Err("duplicate_image");
        }
        for r in records {
            let gold = r.gold_labels.values().next().copied();
            self.images.insert(
                r.image_id.clone(),
                Img {
                    gold,
                    status: ImageStatus::Open,
                    label: None,
                    incorrect: 0,
                    inappropriate: 0,
                    anns: Vec::new(),
                },
            );
        }
        Ok(None)
    }

    fn submit(&mut self, who: &str, image: &str, label: FstLabel) -> Result<Option<bool>, &'static str> {
        let img = self.images.get(image).ok_or("unknown_image")?;
        if img.anns.iter().any(|&i| self.anns[i].who == who) {
            return Err("duplicate_annotation");
        }
        if img.status != ImageStatus::Open {
            return Err("image_not_open");
        }
        let gold = img.gold;
        let counted = self.raw_mode || self.qualification(who) == QualificationState::Qualified;
        let idx = self.anns.len();
        self.images.get_mut(image).unwrap().anns.push(idx);
        self.anns.push(Ann {
            who: who.to_string(),
            label,
            counted,
            scored: false,
        });
        if let Some(g) = gold {
            self.score(idx, g);
        }
        Ok(Some(counted))
    }

    fn flag(&mut self, image: &str, kind: FlagKind) -> Result<Option<bool>, &'static str> {
        let img = self.images.get_mut(image).ok_or("unknown_image")?;
        match kind {
            FlagKind::IncorrectLabel => img.incorrect += 1,
            FlagKind::InappropriateOrIrrelevant => img.inappropriate += 1,
        }
        let tripped = img.inappropriate >= INAPPROPRIATE_HALT || img.incorrect >= INCORRECT_HALT;
        if tripped && matches!(img.status, ImageStatus::Open | ImageStatus::Settled) {
            img.status = ImageStatus::Halted;
            img.label = None;
        }
        Ok(None)
    }

    fn adjudicate(&mut self, image: &str, label: FstLabel) -> Result<Option<bool>, &'static str> {
        let img = self.images.get_mut(image).ok_or("unknown_image")?;
        if !matches!(
            img.status,
            ImageStatus::Halted | ImageStatus::Escalated | ImageStatus::Settled
        ) {
            return Err("not_reviewable");
        }
        img.status = ImageStatus::Adjudicated;
        img.label = Some(label);
        self.score_pending(image, label);
        Ok(None)
    }

    /// Compare every image and the listed annotators against engine state.
    pub fn check(&self, state: &PlatformState, annotators: &[String]) -> Result<(), String> {
        if state.images.len() != self.images.len() {
            return Err(format!("{} images vs {}", state.images.len(), self.images.len()));
        }
        for (id, img) in &self.images {
            let e = state.image(id).ok_or_else(|| format!("engine lacks {id}"))?;
            if e.status != img.status || e.settled_label != img.label {
                return Err(format!(
                    "{id}: engine {:?}/{:?}, oracle {:?}/{:?}",
                    e.status, e.settled_label, img.status, img.label
                ));
            }
            if (e.incorrect_flags, e.inappropriate_flags) != (img.incorrect, img.inappropriate) {
                return Err(format!("{id}: flag counters differ"));
            }
            let (counts, q, all) = self.tally(id);
            let mut engine_counts = [0u32; 7];
            for (&l, &n) in &e.tally.counts {
                engine_counts[slot(l)] = n;
            }
            if engine_counts != counts || e.tally.total_qualified != q || e.tally.total_all != all {
                return Err(format!("{id}: tally {:?} vs {counts:?}/{q}/{all}", e.tally));
            }
        }
        for who in annotators {
            let st = state.qualification(who);
            let oracle_st = self.qualification(who);
            if st != oracle_st {
                return Err(format!("{who}: engine {st:?}, oracle {oracle_st:?}"));
            }
            let engine_window = state.profile(who).map_or((0, 0, 0), |p| {
                (p.window_matches(), p.score_window.len(), p.scored_total)
            });
            if engine_window != self.window(who) {
                return Err(format!("{who}: window {engine_window:?} vs {:?}", self.window(who)));
            }
        }
        Ok(())
    }
}
