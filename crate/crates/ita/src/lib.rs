//! Algorithmic skin-type annotator.
//!
//! An image is segmented with a rule-based skin mask, the masked pixels are
//! converted to CIELAB (D65), each pixel's individual typology angle is
//! computed and aggregated, and the result is binned into a Fitzpatrick type
//! with five cut points that can be calibrated against expert labels.

pub mod ita;
pub mod lab;
pub mod mask;
pub mod thresholds;

use fstlab_core::FstLabel;
use image::RgbImage;
use serde::{Deserialize, Serialize};

pub use ita::{aggregate_ita, compute_ita, ita_deg, Aggregation, ItaMeasurement};
pub use lab::{srgb_to_lab, LabColor};
pub use mask::{skin_mask, SkinMask, SkinRule};
pub use thresholds::{calibrate_thresholds, ita_to_fst, Calibration, CalibrationError, ItaThresholds};

#[derive(Debug, thiserror::Error)]
pub enum ItaError {
    #[error("image has zero area")]
    EmptyImage,
    #[error("no skin pixels detected")]
    NoSkinDetected,
    #[error("mask is {mask:?} but image is {image:?}")]
    MaskMismatch { image: (u32, u32), mask: (u32, u32) },
    #[error("cannot read image: {0}")]
    Decode(#[from] image::ImageError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ItaConfig {
    pub skin_rule: SkinRule,
    pub aggregation: Aggregation,
    pub thresholds: ItaThresholds,
}

/// Per-image algorithmic annotation. `fst` is `NotApplicable` (with a zero
/// pixel count and NaN angle) when no skin was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItaResult {
    pub mean_ita_deg: f64,
    pub masked_pixel_count: usize,
    pub fst: FstLabel,
}

pub fn annotate(image: &RgbImage, config: &ItaConfig) -> Result<ItaResult, ItaError> {
    let mask = skin_mask(image, &config.skin_rule)?;
    match compute_ita(image, &mask, config.aggregation) {
        Ok(m) => Ok(ItaResult {
            mean_ita_deg: m.mean_ita_deg,
            masked_pixel_count: m.masked_pixel_count,
            fst: ita_to_fst(m.mean_ita_deg, &config.thresholds),
        }),
        Err(ItaError::NoSkinDetected) => Ok(ItaResult {
            mean_ita_deg: f64::NAN,
            masked_pixel_count: 0,
            fst: FstLabel::NotApplicable,
        }),
        Err(e) => Err(e),
    }
}

pub fn annotate_path(path: &std::path::Path, config: &ItaConfig) -> Result<ItaResult, ItaError> {
    let img = image::open(path)?.to_rgb8();
    annotate(&img, config)
}
