use std::collections::BTreeMap;

use fstlab_core::model::ImageId;
use fstlab_core::FstLabel;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::run::AnnotatorSpec;
use crate::SimError;

/// `n` images `img00000..` with types drawn uniformly from I..VI.
pub fn random_truth(n: usize, seed: u64) -> BTreeMap<ImageId, FstLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (image_id(i), FstLabel::TYPES[rng.random_range(0..6)]))
        .collect()
}

pub(crate) fn image_id(i: usize) -> ImageId {
    format!("img{i:05}")
}

/// Protocol-free annotation pools: `per_image` labels per image, each from an
/// annotator drawn by arrival rate.
pub fn annotation_pool(
    truth: &BTreeMap<ImageId, FstLabel>,
    population: &[AnnotatorSpec],
    per_image: usize,
    seed: u64,
) -> Result<BTreeMap<ImageId, Vec<FstLabel>>, SimError> {
    if population.is_empty() {
        return Err(SimError::InvalidConfig("empty population".into()));
    }
    for a in population {
        a.validate()?;
    }
    let pick = WeightedIndex::new(population.iter().map(|a| a.arrival_rate))
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(truth
        .iter()
        .map(|(id, &t)| {
            let labels = (0..per_image)
                .map(|_| population[pick.sample(&mut rng)].confusion_kernel.sample(t, &mut rng))
                .collect();
            (id.clone(), labels)
        })
        .collect())
}
