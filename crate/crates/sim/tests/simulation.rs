use std::collections::BTreeMap;

use fstlab_core::{EventPayload, PlatformState, QualificationState};
use fstlab_sim::{
    annotation_pool, random_truth, run_simulation, summarize, AnnotatorSpec, ConfusionKernel, SimConfig,
};
use fstlab_stats::{bootstrap_crowd_curve, CrowdCurveConfig};

fn crowd(n: usize, accuracy: f64) -> Vec<AnnotatorSpec> {
    (0..n)
        .map(|i| AnnotatorSpec::new(format!("a{i:02}"), ConfusionKernel::OffByOne { accuracy }))
        .collect()
}

fn config(n_images: usize, population: Vec<AnnotatorSpec>, seed: u64) -> SimConfig {
    SimConfig {
        n_images,
        population,
        gold_fraction: 0.4,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn perfect_annotators_settle_on_truth() {
    let t = run_simulation(&config(80, crowd(8, 1.0), 1)).unwrap();
    assert!(t.summary.settled > 0);
    assert_eq!(t.summary.truth_agreement, Some(1.0));
    for img in t.state.images.values() {
        if let Some(l) = img.settled_label {
            assert_eq!(l, t.truth[&img.record.image_id]);
        }
    }
    assert_eq!(t.summary.qualified, 8);
}

#[test]
fn empty_population_settles_nothing() {
    let t = run_simulation(&config(10, vec![], 0)).unwrap();
    assert_eq!(t.summary.settlement_rate, 0.0);
    assert_eq!(t.summary.n_submissions, 0);
    assert_eq!(t.summary.truth_agreement, None);
}

#[test]
fn runs_are_deterministic_and_replayable() {
    let mut pop = crowd(6, 0.7);
    pop[0].arrival_rate = 2.5;
    pop[1].arrival_rate = 0.3;
    let cfg = config(60, pop, 42);
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a.events, b.events);
    let replayed = PlatformState::replay(cfg.protocol.clone(), &a.events).unwrap();
    assert_eq!(replayed, a.state);
    let other = run_simulation(&SimConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.events, other.events);
}

#[test]
fn budget_stops_early() {
    let cfg = SimConfig {
        budget: Some(17),
        ..config(50, crowd(5, 0.8), 3)
    };
    let t = run_simulation(&cfg).unwrap();
    assert_eq!(t.summary.n_submissions, 17);
    assert!(t.summary.budget_exhausted);
}

#[test]
fn config_round_trips_through_json() {
    let json = r#"{
        "n_images": 12,
        "seed": 5,
        "gold_fraction": 0.5,
        "population": [
            {"annotator_id": "x", "confusion_kernel": {"off_by_one": {"accuracy": 0.9}}, "arrival_rate": 2.0},
            {"annotator_id": "y"}
        ],
        "protocol": {"lead_margin": 2}
    }"#;
    let cfg: SimConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg.protocol.lead_margin, 2);
    assert_eq!(cfg.protocol.max_annotations, 20);
    assert_eq!(cfg.population[1].confusion_kernel, ConfusionKernel::default());
    let back: SimConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    run_simulation(&cfg).unwrap();
}

#[test]
fn invalid_configs_are_rejected() {
    let bad_gold = SimConfig {
        gold_fraction: 1.5,
        ..config(5, crowd(1, 0.5), 0)
    };
    assert!(run_simulation(&bad_gold).is_err());
    let mut pop = crowd(1, 0.5);
    pop[0].arrival_rate = 0.0;
    assert!(run_simulation(&config(5, pop, 0)).is_err());
    assert!(run_simulation(&config(5, vec![pop_dup(), pop_dup()], 0)).is_err());
}

fn pop_dup() -> AnnotatorSpec {
    AnnotatorSpec::new("same", ConfusionKernel::identity())
}

/// Count everything again directly from the log with plain loops.
#[test]
fn summary_matches_recount() {
    let mut pop = crowd(5, 0.85);
    pop.extend(crowd(10, 0.5).into_iter().map(|mut a| {
        a.annotator_id = format!("weak-{}", a.annotator_id);
        a
    }));
    pop.push(AnnotatorSpec::new("random", ConfusionKernel::OffByOne { accuracy: 0.0 }));
    let cfg = SimConfig {
        protocol: fstlab_core::ProtocolConfig {
            lead_margin: 2,
            max_annotations: 6,
            qual_min_scored: 10,
            qual_window: 20,
            ..Default::default()
        },
        ..config(120, pop, 9)
    };
    let t = run_simulation(&cfg).unwrap();

    let mut subs = 0;
    let mut settle_events = Vec::new();
    let mut last_state: BTreeMap<String, QualificationState> = BTreeMap::new();
    for (i, e) in t.events.iter().enumerate() {
        match &e.payload {
            EventPayload::AnnotationSubmitted { annotation } => {
                subs += 1;
                last_state
                    .entry(annotation.annotator_id.clone())
                    .or_insert(QualificationState::NonQualified);
            }
            EventPayload::ConsensusSettled { image_id, label, .. } => settle_events.push((i, image_id.clone(), *label)),
            EventPayload::QualificationChanged { annotator_id, to, .. } => {
                last_state.insert(annotator_id.clone(), *to);
            }
            _ => {}
        }
    }
    let mut to_settle = 0usize;
    let mut correct = 0usize;
    for (i, id, label) in &settle_events {
        to_settle += t.events[..*i]
            .iter()
            .filter(|e| matches!(&e.payload, EventPayload::AnnotationSubmitted { annotation } if &annotation.image_id == id))
            .count();
        if t.truth[id] == *label {
            correct += 1;
        }
    }
    let s = &t.summary;
    assert_eq!(s, &summarize(&t.events, &t.truth, cfg.budget));
    assert_eq!(s.n_images, 120);
    assert_eq!(s.n_submissions, subs);
    assert_eq!(s.settled, settle_events.len());
    assert!(s.settled > 0);
    assert_eq!(s.settlement_rate, settle_events.len() as f64 / 120.0);
    assert_eq!(s.mean_annotations_to_settle, Some(to_settle as f64 / settle_events.len() as f64));
    assert_eq!(s.truth_agreement, Some(correct as f64 / settle_events.len() as f64));
    let count = |q| last_state.values().filter(|&&v| v == q).count();
    assert_eq!(s.qualified, count(QualificationState::Qualified));
    assert_eq!(s.disqualified, count(QualificationState::Disqualified));
    assert_eq!(s.non_qualified, count(QualificationState::NonQualified));
    assert_eq!(s.qualified + s.disqualified + s.non_qualified, 16);
    // settled labels in state agree with the log
    for (_, id, label) in &settle_events {
        assert_eq!(t.state.images[id].settled_label, Some(*label));
    }
}

fn single_annotator_on_gold(accuracy: f64, seed: u64) -> fstlab_sim::Summary {
    let cfg = SimConfig {
        n_images: 75,
        population: crowd(1, accuracy),
        gold_fraction: 1.0,
        seed,
        ..SimConfig::default()
    };
    let t = run_simulation(&cfg).unwrap();
    assert_eq!(t.summary.n_submissions, 75);
    t.summary
}

#[test]
fn accurate_annotator_usually_qualifies() {
    let qualified = (0..1000)
        .filter(|&s| single_annotator_on_gold(0.6, s).qualified == 1)
        .count();
    assert!(qualified >= 950, "{qualified}/1000");
}

#[test]
fn poor_annotator_rarely_qualifies() {
    let ever = (0..1000)
        .filter(|&s| single_annotator_on_gold(0.2, s).ever_qualified == 1)
        .count();
    assert!(ever <= 50, "{ever}/1000");
}

#[test]
fn better_kernels_do_not_lower_truth_agreement() {
    let seeds = 30;
    let mean_agreement = |accuracy: f64| {
        (0..seeds)
            .map(|s| {
                let t = run_simulation(&config(100, crowd(10, accuracy), 500 + s)).unwrap();
                assert!(t.summary.settled > 0);
                t.summary.truth_agreement.unwrap()
            })
            .sum::<f64>()
            / seeds as f64
    };
    let grid = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
    let means: Vec<f64> = grid.iter().map(|&a| mean_agreement(a)).collect();
    for w in means.windows(2) {
        assert!(w[1] >= w[0], "{means:?}");
    }
}

#[test]
fn simulated_pools_show_crowd_size_plateau() {
    let truth = random_truth(60, 8);
    let pool = annotation_pool(&truth, &crowd(120, 0.5), 96, 8).unwrap();
    let pts = bootstrap_crowd_curve(&pool, &truth, &CrowdCurveConfig::default()).unwrap();
    assert_eq!(pts.len(), 6);
    assert!(pts[2].mean_rho > pts[0].mean_rho);
    assert!((pts[5].mean_rho - pts[4].mean_rho).abs() < (pts[2].mean_rho - pts[0].mean_rho).abs());
}
