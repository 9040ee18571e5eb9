//! Crowd-size curves: how well the mean of `k` crowd labels tracks a reference.

use std::collections::BTreeMap;

use fstlab_core::FstLabel;
use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::pearson_f64;
use crate::{ImageId, StatsError};

const Z_95: f64 = 1.959_964;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithoutReplacement,
    WithReplacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrowdCurveConfig {
    pub sizes: Vec<usize>,
    pub draws: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

impl Default for CrowdCurveConfig {
    fn default() -> Self {
        CrowdCurveConfig {
            sizes: vec![3, 6, 12, 24, 48, 96],
            draws: 25,
            seed: 0,
            sampling: Sampling::WithoutReplacement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowdCurvePoint {
    pub sample_size: usize,
    pub mean_rho: f64,
    pub sd_rho: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// For every size and draw, sample `size` labels per image, average the
/// applicable ones, and correlate the per-image means with `reference`.
///
/// Images whose reference is not-applicable or missing are skipped. Each
/// draw uses its own ChaCha stream, so results do not depend on the order
/// draws are evaluated in.
pub fn bootstrap_crowd_curve(
    pool: &BTreeMap<ImageId, Vec<FstLabel>>,
    reference: &BTreeMap<ImageId, FstLabel>,
    cfg: &CrowdCurveConfig,
) -> Result<Vec<CrowdCurvePoint>, StatsError> {
    if cfg.sizes.is_empty() || cfg.draws == 0 {
        return Err(StatsError::EmptyInput);
    }
    let items: Vec<(&ImageId, &[FstLabel], f64)> = pool
        .iter()
        .filter_map(|(id, labels)| {
            let r = reference.get(id)?.numeric()?;
            Some((id, labels.as_slice(), f64::from(r)))
        })
        .collect();
    if items.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let max_size = cfg.sizes.iter().copied().max().unwrap_or(0);
    let need = match cfg.sampling {
        Sampling::WithoutReplacement => max_size,
        Sampling::WithReplacement => 1,
    };
    if let Some((id, labels, _)) = items.iter().find(|(_, l, _)| l.len() < need) {
        return Err(StatsError::PoolTooSmall {
            image: (*id).clone(),
            have: labels.len(),
            need,
        });
    }

    cfg.sizes
        .iter()
        .enumerate()
        .map(|(si, &size)| {
            let rhos = (0..cfg.draws)
                .map(|d| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(((si as u64) << 32) | d as u64);
                    one_draw(&items, size, cfg.sampling, &mut rng)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(summarize(size, &rhos))
        })
        .collect()
}

fn one_draw(
    items: &[(&ImageId, &[FstLabel], f64)],
    size: usize,
    sampling: Sampling,
    rng: &mut ChaCha8Rng,
) -> Result<f64, StatsError> {
    let mut means = Vec::with_capacity(items.len());
    let mut refs = Vec::with_capacity(items.len());
    for (_, labels, r) in items {
        let (mut sum, mut k) = (0.0, 0usize);
        let mut add = |l: FstLabel| {
            if let Some(v) = l.numeric() {
                sum += f64::from(v);
                k += 1;
            }
        };
        match sampling {
            Sampling::WithoutReplacement => {
                index::sample(rng, labels.len(), size).iter().for_each(|i| add(labels[i]))
            }
            Sampling::WithReplacement => (0..size).for_each(|_| add(*labels.choose(rng).unwrap())),
        }
        if k > 0 {
            means.push(sum / k as f64);
            refs.push(*r);
        }
    }
    pearson_f64(&means, &refs)
}

fn summarize(size: usize, rhos: &[f64]) -> CrowdCurvePoint {
    let n = rhos.len() as f64;
    let mean = rhos.iter().sum::<f64>() / n;
    let sd = if rhos.len() > 1 {
        (rhos.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    CrowdCurvePoint {
        sample_size: size,
        mean_rho: mean,
        sd_rho: sd,
        ci_low: (mean - Z_95 * sd).max(-1.0).min(mean),
        ci_high: (mean + Z_95 * sd).min(1.0).max(mean),
    }
}
