//! Rule-based skin-pixel segmentation in RGB and BT.601 full-range YCbCr.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::ItaError;

/// Skin-pixel rule. A pixel is skin when all RGB and YCbCr conditions hold:
/// `R > r_min`, `G > g_min`, `B > b_min`, `R > G`, `R > B` (when
/// `require_red_dominant`), `Y > y_min`, `cb_min <= Cb <= cb_max`,
/// `cr_min <= Cr <= cr_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkinRule {
    pub r_min: u8,
    pub g_min: u8,
    pub b_min: u8,
    pub require_red_dominant: bool,
    pub y_min: f64,
    pub cb_min: f64,
    pub cb_max: f64,
    pub cr_min: f64,
    pub cr_max: f64,
}

impl Default for SkinRule {
    fn default() -> Self {
        SkinRule {
            r_min: 95,
            g_min: 40,
            b_min: 20,
            require_red_dominant: true,
            y_min: 80.0,
            cb_min: 85.0,
            cb_max: 135.0,
            cr_min: 135.0,
            cr_max: 180.0,
        }
    }
}

/// BT.601 full-range (JPEG) YCbCr.
pub fn rgb_to_ycbcr([r, g, b]: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    [y, cb, cr]
}

impl SkinRule {
    pub fn is_skin(&self, px: [u8; 3]) -> bool {
        let [r, g, b] = px;
        if r <= self.r_min || g <= self.g_min || b <= self.b_min {
            return false;
        }
        if self.require_red_dominant && (r <= g || r <= b) {
            return false;
        }
        let [y, cb, cr] = rgb_to_ycbcr(px);
        y > self.y_min
            && (self.cb_min..=self.cb_max).contains(&cb)
            && (self.cr_min..=self.cr_max).contains(&cr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkinMask {
    pub width: u32,
    pub height: u32,
    /// Row-major, `true` = skin candidate.
    pub bits: Vec<bool>,
}

impl SkinMask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }
}

pub fn skin_mask(image: &RgbImage, rule: &SkinRule) -> Result<SkinMask, ItaError> {
    let (width, height) = image.dimensions();
    if width == 0 || height == 0 {
        return Err(ItaError::EmptyImage);
    }
    let bits = image.pixels().map(|p| rule.is_skin(p.0)).collect();
    Ok(SkinMask {
        width,
        height,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(px: [u8; 3]) -> RgbImage {
        RgbImage::from_pixel(4, 3, image::Rgb(px))
    }

    #[test]
    fn white_is_not_skin() {
        let [_, cb, cr] = rgb_to_ycbcr([255, 255, 255]);
        assert!((cb - 128.0).abs() < 1e-9 && (cr - 128.0).abs() < 1e-9);
        let m = skin_mask(&uniform([255, 255, 255]), &SkinRule::default()).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn light_skin_tone_is_skin() {
        // Y≈199.677, Cb≈101.094, Cr≈148.915 by hand
        let [y, cb, cr] = rgb_to_ycbcr([229, 194, 152]);
        assert!((y - 199.677).abs() < 1e-3);
        assert!((cb - 101.094).abs() < 1e-3);
        assert!((cr - 148.915).abs() < 1e-3);
        let m = skin_mask(&uniform([229, 194, 152]), &SkinRule::default()).unwrap();
        assert_eq!(m.count(), 12);
        assert_eq!((m.width, m.height), (4, 3));
    }

    #[test]
    fn pure_green_is_not_skin() {
        let m = skin_mask(&uniform([0, 255, 0]), &SkinRule::default()).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn zero_area_is_rejected() {
        let img = RgbImage::new(0, 5);
        assert!(matches!(skin_mask(&img, &SkinRule::default()), Err(ItaError::EmptyImage)));
    }

    #[test]
    fn mask_is_deterministic() {
        let img = RgbImage::from_fn(16, 16, |x, y| image::Rgb([(x * 16) as u8, (y * 16) as u8, 120]));
        let rule = SkinRule::default();
        assert_eq!(skin_mask(&img, &rule).unwrap(), skin_mask(&img, &rule).unwrap());
    }
}
