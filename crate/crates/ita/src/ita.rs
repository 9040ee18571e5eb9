//! Individual typology angle over masked skin pixels.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::lab::{srgb_to_lab, LabColor};
use crate::mask::SkinMask;
use crate::ItaError;

/// `atan2(L* - 50, b*)` in degrees. Higher is lighter.
pub fn ita_deg(lab: LabColor) -> f64 {
    (lab.l - 50.0).atan2(lab.b).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl Aggregation {
    fn aggregate(self, mut values: Vec<f64>) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

/// Aggregate ITA over already-converted skin pixels.
pub fn aggregate_ita(pixels: &[LabColor], aggregation: Aggregation) -> Result<f64, ItaError> {
    if pixels.is_empty() {
        return Err(ItaError::NoSkinDetected);
    }
    Ok(aggregation.aggregate(pixels.iter().map(|&p| ita_deg(p)).collect()))
}

/// ITA of the masked pixels of an image, before mapping to a skin type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItaMeasurement {
    pub mean_ita_deg: f64,
    pub masked_pixel_count: usize,
}

pub fn compute_ita(
    image: &RgbImage,
    mask: &SkinMask,
    aggregation: Aggregation,
) -> Result<ItaMeasurement, ItaError> {
    let dims = image.dimensions();
    if dims != (mask.width, mask.height) {
        return Err(ItaError::MaskMismatch {
            image: dims,
            mask: (mask.width, mask.height),
        });
    }
    let pixels: Vec<LabColor> = image
        .pixels()
        .zip(&mask.bits)
        .filter(|(_, &m)| m)
        .map(|(p, _)| srgb_to_lab(p.0))
        .collect();
    let value = aggregate_ita(&pixels, aggregation)?;
    Ok(ItaMeasurement {
        mean_ita_deg: value,
        masked_pixel_count: pixels.len(),
    })
}
