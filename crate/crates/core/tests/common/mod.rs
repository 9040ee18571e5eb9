#![allow(dead_code)]

use std::collections::BTreeMap;

use fstlab_core::{FstLabel, ImageRecord, MemoryStore, Platform, ProtocolConfig, QualificationState};

pub const WARMUP: usize = 25;

pub fn gold(id: &str, label: FstLabel) -> ImageRecord {
    let mut g = BTreeMap::new();
    g.insert("expert1".to_string(), label);
    ImageRecord::new(id, format!("{id}.jpg"), "textbook", g)
}

pub fn plain(id: &str) -> ImageRecord {
    ImageRecord::new(id, format!("{id}.jpg"), "atlas", BTreeMap::new())
}

/// Platform with `WARMUP` gold images (label I) plus `open` plain images
/// `img0..`, and `annotators` annotators `q0..` qualified by labeling every
/// gold image correctly.
pub fn platform_with_qualified(open: usize, annotators: usize) -> Platform<MemoryStore> {
    platform_with_qualified_cfg(open, annotators, ProtocolConfig::default())
}

pub fn platform_with_qualified_cfg(
    open: usize,
    annotators: usize,
    config: ProtocolConfig,
) -> Platform<MemoryStore> {
    let mut p = Platform::new(config, MemoryStore::default());
    let mut images: Vec<_> = (0..WARMUP).map(|i| gold(&format!("g{i:02}"), FstLabel::I)).collect();
    images.extend((0..open).map(|i| plain(&format!("img{i}"))));
    p.ingest(images).unwrap();
    for a in 0..annotators {
        let id = format!("q{a}");
        for i in 0..WARMUP {
            p.submit_annotation(&id, &format!("g{i:02}"), FstLabel::I).unwrap();
        }
        assert_eq!(p.state().qualification(&id), QualificationState::Qualified);
    }
    p
}
