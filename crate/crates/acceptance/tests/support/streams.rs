//! Random command streams over a warmed-up platform with annotators in
//! mixed qualification states.

use std::collections::BTreeMap;

use fstlab_core::{
    Event, EventStore, FailureReport, FlagKind, FstLabel, ImageRecord, MemoryStore, Platform, Principal,
    ProtocolConfig, Role,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::Oracle;

pub const ANNOTATORS: usize = 40;
const GOLD_IMAGES: usize = 30;

#[derive(Debug, Clone)]
pub enum Cmd {
    Ingest(Vec<ImageRecord>),
    Submit { who: String, image: String, label: FstLabel },
    Flag { who: String, image: String, kind: FlagKind },
    Adjudicate { image: String, label: FstLabel },
}

pub fn run<S: EventStore>(p: &mut Platform<S>, cmd: &Cmd) -> Result<Option<bool>, &'static str> {
    match cmd {
        Cmd::Ingest(records) => p.ingest(records.clone()).map(|_| None),
        Cmd::Submit { who, image, label } => p.submit_annotation(who, image, *label).map(|o| Some(o.counted)),
        Cmd::Flag { who, image, kind } => p
            .file_failure_report(FailureReport {
                image_id: image.clone(),
                annotator_id: who.clone(),
                kind: *kind,
                text: String::new(),
            })
            .map(|_| None),
        Cmd::Adjudicate { image, label } => p
            .adjudicate(&Principal::new("dr", Role::Expert), image, *label)
            .map(|_| None),
    }
    .map_err(|e| e.code())
}

fn gold_record(id: &str, label: FstLabel) -> ImageRecord {
    let mut g = BTreeMap::new();
    g.insert("expert1".to_string(), label);
    ImageRecord::new(id, format!("{id}.jpg"), "textbook", g)
}

fn other_label(label: FstLabel, rng: &mut ChaCha8Rng) -> FstLabel {
    loop {
        let l = *FstLabel::ALL.choose(rng).unwrap();
        if l != label {
            return l;
        }
    }
}

/// Engine log, oracle and annotator ids after a shared warm-up.
#[derive(Clone)]
pub struct Base {
    pub config: ProtocolConfig,
    pub events: Vec<Event>,
    pub oracle: Oracle,
    pub annotators: Vec<String>,
}

/// Warm-up on gold images. Each annotator follows one of six histories:
/// none, 25 correct, 15 wrong then 10 correct (qualifies at exactly 0.40),
/// 9 of 25 correct, the 10-of-25 history plus one miss (disqualified), and
/// 24 correct (one short of the minimum).
pub fn build_base(seed: u64, raw_mode: bool) -> Result<Base, String> {
    let config = ProtocolConfig {
        raw_mode,
        ..ProtocolConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold: Vec<(String, FstLabel)> = (0..GOLD_IMAGES)
        .map(|i| (format!("g{i:02}"), *FstLabel::TYPES.choose(&mut rng).unwrap()))
        .collect();
    let annotators: Vec<String> = (0..ANNOTATORS).map(|i| format!("a{i:02}")).collect();

    let mut cmds = vec![Cmd::Ingest(gold.iter().map(|(id, l)| gold_record(id, *l)).collect())];
    for who in &annotators {
        let archetype = rng.random_range(0..10);
        let pattern: Vec<bool> = match archetype {
            0 => vec![],
            1..=4 => vec![true; 25],
            5 => [vec![false; 15], vec![true; 10]].concat(),
            6 => {
                let mut v = [vec![true; 9], vec![false; 16]].concat();
                for i in (1..v.len()).rev() {
                    v.swap(i, rng.random_range(0..=i));
                }
                v
            }
            7 => [vec![false; 15], vec![true; 10], vec![false]].concat(),
            _ => vec![true; 24],
        };
        for (i, ok) in pattern.into_iter().enumerate() {
            let (id, l) = &gold[i];
            let label = if ok { *l } else { other_label(*l, &mut rng) };
            cmds.push(Cmd::Submit {
                who: who.clone(),
                image: id.clone(),
                label,
            });
        }
    }

    let mut p = Platform::new(config.clone(), MemoryStore::default());
    let mut oracle = Oracle::new(raw_mode);
    for cmd in &cmds {
        let e = run(&mut p, cmd);
        let o = oracle.apply(cmd);
        if e != o {
            return Err(format!("warm-up {cmd:?}: engine {e:?}, oracle {o:?}"));
        }
    }
    oracle.check(p.state(), &annotators)?;
    let (_, store) = p.into_parts();
    Ok(Base {
        config,
        events: store.events,
        oracle,
        annotators,
    })
}

/// 1 to 3 fresh images (some gold-seeded), each receiving 3 to 40 events,
/// interleaved at random. Image ids are `{tag}0..`.
pub fn stream(seed: u64, tag: &str, annotators: &[String]) -> Vec<Cmd> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_images = rng.random_range(1..=3);
    let mut records = Vec::new();
    let mut queues: Vec<Vec<Cmd>> = Vec::new();
    for k in 0..n_images {
        let id = format!("{tag}{k}");
        records.push(if rng.random_bool(0.3) {
            gold_record(&id, *FstLabel::ALL.choose(&mut rng).unwrap())
        } else {
            ImageRecord::new(&id, format!("{id}.jpg"), "atlas", BTreeMap::new())
        });
        let main = *FstLabel::ALL.choose(&mut rng).unwrap();
        let second = other_label(main, &mut rng);
        let mode = rng.random_range(0..3);
        let n_events = rng.random_range(3..=40);
        let mut q = Vec::with_capacity(n_events);
        for _ in 0..n_events {
            let r: f64 = rng.random();
            let who = annotators.choose(&mut rng).unwrap().clone();
            let image = id.clone();
            q.push(if r < 0.02 {
                Cmd::Flag {
                    who,
                    image,
                    kind: FlagKind::InappropriateOrIrrelevant,
                }
            } else if r < 0.07 {
                Cmd::Flag {
                    who,
                    image,
                    kind: FlagKind::IncorrectLabel,
                }
            } else if r < 0.10 {
                Cmd::Adjudicate {
                    image,
                    label: *FstLabel::ALL.choose(&mut rng).unwrap(),
                }
            } else {
                let u: f64 = rng.random();
                let label = match mode {
                    0 if u < 0.7 => main,
                    1 if u < 0.475 => main,
                    1 if u < 0.95 => second,
                    _ => *FstLabel::ALL.choose(&mut rng).unwrap(),
                };
                Cmd::Submit { who, image, label }
            });
        }
        q.reverse();
        queues.push(q);
    }

    let mut cmds = vec![Cmd::Ingest(records)];
    loop {
        let live: Vec<usize> = (0..queues.len()).filter(|&i| !queues[i].is_empty()).collect();
        let Some(&i) = live.choose(&mut rng) else {
            break;
        };
        cmds.push(queues[i].pop().unwrap());
    }
    cmds
}
