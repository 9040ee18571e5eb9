use std::collections::BTreeMap;

use fstlab_core::event::Event;
use fstlab_core::model::{AnnotatorId, ImageId};
use fstlab_core::routing::next_task;
use fstlab_core::{
    FstLabel, ImageRecord, ImageStatus, MemoryStore, Platform, PlatformState, ProtocolConfig, QualificationState,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::ConfusionKernel;
use crate::pool::random_truth;
use crate::summary::{summarize, Summary};
use crate::SimError;

/// Expert id under which gold labels are recorded.
pub const GOLD_EXPERT: &str = "truth";

const STREAM_GOLD: u64 = 1;
const STREAM_SCHEDULE: u64 = 2;
const STREAM_LABELS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorSpec {
    pub annotator_id: AnnotatorId,
    #[serde(default)]
    pub confusion_kernel: ConfusionKernel,
    #[serde(default = "one")]
    pub arrival_rate: f64,
}

fn one() -> f64 {
    1.0
}

impl AnnotatorSpec {
    pub fn new(annotator_id: impl Into<AnnotatorId>, confusion_kernel: ConfusionKernel) -> Self {
        AnnotatorSpec {
            annotator_id: annotator_id.into(),
            confusion_kernel,
            arrival_rate: 1.0,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), SimError> {
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "{}: arrival_rate must be positive",
                self.annotator_id
            )));
        }
        self.confusion_kernel
            .validate()
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", self.annotator_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_images: usize,
    /// True labels. Left empty, `n_images` labels are drawn from the seed.
    pub truth: BTreeMap<ImageId, FstLabel>,
    pub population: Vec<AnnotatorSpec>,
    pub protocol: ProtocolConfig,
    pub gold_fraction: f64,
    pub seed: u64,
    /// Maximum number of submissions; `None` runs until nobody has work.
    pub budget: Option<usize>,
    /// Route annotators who are not yet qualified to gold images first.
    pub gold_probe_until_qualified: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_images: 100,
            truth: BTreeMap::new(),
            population: Vec::new(),
            protocol: ProtocolConfig::default(),
            gold_fraction: 0.25,
            seed: 0,
            budget: None,
            gold_probe_until_qualified: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.gold_fraction) {
            return Err(SimError::InvalidConfig(format!(
                "gold_fraction {} outside [0, 1]",
                self.gold_fraction
            )));
        }
        if !self.truth.is_empty() && self.truth.len() != self.n_images {
            return Err(SimError::InvalidConfig(format!(
                "truth has {} images but n_images is {}",
                self.truth.len(),
                self.n_images
            )));
        }
        if self.truth.values().any(|l| !l.is_applicable()) {
            return Err(SimError::InvalidConfig("truth labels must be applicable".into()));
        }
        self.protocol
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.population {
            a.validate()?;
            if !seen.insert(&a.annotator_id) {
                return Err(SimError::InvalidConfig(format!("duplicate annotator {}", a.annotator_id)));
            }
        }
        Ok(())
    }

    pub fn resolved_truth(&self) -> BTreeMap<ImageId, FstLabel> {
        if self.truth.is_empty() {
            random_truth(self.n_images, self.seed)
        } else {
            self.truth.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub truth: BTreeMap<ImageId, FstLabel>,
    pub events: Vec<Event>,
    pub state: PlatformState,
    pub summary: Summary,
}

/// Run the crowd until every image has left Open, nobody has an eligible
/// task, or the budget is spent.
pub fn run_simulation(cfg: &SimConfig) -> Result<Transcript, SimError> {
    cfg.validate()?;
    let truth = cfg.resolved_truth();

    let stream = |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(s);
        rng
    };
    let mut ids: Vec<&ImageId> = truth.keys().collect();
    ids.shuffle(&mut stream(STREAM_GOLD));
    let n_gold = (cfg.gold_fraction * truth.len() as f64).round() as usize;
    let gold: std::collections::BTreeSet<&ImageId> = ids.into_iter().take(n_gold).collect();
    let records = truth
        .iter()
        .map(|(id, &label)| {
            let labels = if gold.contains(id) {
                BTreeMap::from([(GOLD_EXPERT.to_string(), label)])
            } else {
                BTreeMap::new()
            };
            ImageRecord::new(id.clone(), format!("sim/{id}.png"), "sim", labels)
        })
        .collect();

    let mut platform = Platform::new(cfg.protocol.clone(), MemoryStore::default());
    platform.ingest(records)?;

    let mut schedule_rng = stream(STREAM_SCHEDULE);
    let mut label_rng = stream(STREAM_LABELS);
    let mut credit = vec![0.0f64; cfg.population.len()];
    let mut idle = vec![false; cfg.population.len()];
    let mut submitted = 0usize;
    let budget = cfg.budget.unwrap_or(usize::MAX);

    'rounds: while submitted < budget && idle.iter().any(|i| !i) && any_open(platform.state()) {
        let mut turns = Vec::new();
        for (i, spec) in cfg.population.iter().enumerate() {
            if idle[i] {
                continue;
            }
            credit[i] += spec.arrival_rate;
            while credit[i] >= 1.0 {
                credit[i] -= 1.0;
                turns.push(i);
            }
        }
        turns.shuffle(&mut schedule_rng);
        for i in turns {
            if submitted >= budget {
                break 'rounds;
            }
            if idle[i] {
                continue;
            }
            let spec = &cfg.population[i];
            let state = platform.state();
            let probe = cfg.gold_probe_until_qualified
                && state.qualification(&spec.annotator_id) != QualificationState::Qualified;
            let Some(task) = next_task(state, &spec.annotator_id, probe) else {
                idle[i] = true;
                continue;
            };
            let label = spec.confusion_kernel.sample(truth[&task.image_id], &mut label_rng);
            platform.submit_annotation(&spec.annotator_id, &task.image_id, label)?;
            submitted += 1;
        }
    }

    let (state, store) = platform.into_parts();
    let summary = summarize(&store.events, &truth, cfg.budget);
    Ok(Transcript {
        truth,
        events: store.events,
        state,
        summary,
    })
}

fn any_open(state: &PlatformState) -> bool {
    state.images.values().any(|i| i.status == ImageStatus::Open)
}
