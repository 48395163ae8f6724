//! Sobel gradient magnitudes and the pooled quality score.
//!
//! The gradient field is computed once over the whole preprocessed image
//! (replicate-padded at the border) and sampled inside character patch
//! bounding boxes. The score is the standard deviation of all sampled
//! magnitudes; a pixel covered by several patches contributes once per
//! patch.

use std::path::Path;

use serde::Serialize;

use crate::imgio::{self, GrayImage};
use crate::mser::{extract_character_patches, CharacterPatch, MserParams};
use crate::{Error, Result};

pub const DEFAULT_DOWNSAMPLE_LIMIT: usize = 1000;

/// Per-pixel gradient magnitude raster.
#[derive(Debug, Clone)]
pub struct GradientField {
    width: usize,
    height: usize,
    mag: Vec<f64>,
}

impl GradientField {
    pub fn new(width: usize, height: usize, mag: Vec<f64>) -> Self {
        assert_eq!(mag.len(), width * height);
        assert!(
            mag.iter().all(|&m| m >= 0.0),
            "magnitudes must be non-negative"
        );
        GradientField { width, height, mag }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mag(&self) -> &[f64] {
        &self.mag
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mag[y * self.width + x]
    }
}

/// Pooled quality score with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct QualityScore {
    /// Standard deviation of gradient magnitudes over all patch pixels.
    pub value: f64,
    pub patch_count: usize,
    /// N: pixels summed over all patches (overlaps counted per patch).
    pub pixel_count: usize,
    /// m_a: mean gradient magnitude over the same pixels.
    pub mean_gradient: f64,
    /// Set when no patches were found; value is 0 in that case.
    pub degenerate: bool,
}

impl QualityScore {
    fn degenerate() -> Self {
        QualityScore {
            value: 0.0,
            patch_count: 0,
            pixel_count: 0,
            mean_gradient: 0.0,
            degenerate: true,
        }
    }
}

/// Gradient magnitude per pixel: sqrt(gx^2 + gy^2) of the two 3x3 Sobel
/// responses, replicate padding at the border.
pub fn sobel_gradient(img: &GrayImage) -> GradientField {
    let w = img.width();
    let h = img.height();
    let mut mag = Vec::with_capacity(w * h);
    let sample = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        img.get(x, y) as f64
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let tl = sample(x - 1, y - 1);
            let tc = sample(x, y - 1);
            let tr = sample(x + 1, y - 1);
            let ml = sample(x - 1, y);
            let mr = sample(x + 1, y);
            let bl = sample(x - 1, y + 1);
            let bc = sample(x, y + 1);
            let br = sample(x + 1, y + 1);
            let gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            let gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
            mag.push((gx * gx + gy * gy).sqrt());
        }
    }
    GradientField {
        width: w,
        height: h,
        mag,
    }
}

/// Standard deviation of magnitudes over all patch pixels (the literal
/// double sum: overlapping patches count shared pixels once per patch).
pub fn pool_score(field: &GradientField, patches: &[CharacterPatch]) -> Result<QualityScore> {
    for p in patches {
        if p.bbox.x_max as usize >= field.width || p.bbox.y_max as usize >= field.height {
            return Err(Error::Contract(format!(
                "patch {:?} exceeds field bounds {}x{}",
                p.bbox, field.width, field.height
            )));
        }
    }
    if patches.is_empty() {
        return Ok(QualityScore::degenerate());
    }
    let mut n = 0usize;
    let mut sum = 0.0;
    for p in patches {
        for y in p.bbox.y_min..=p.bbox.y_max {
            for x in p.bbox.x_min..=p.bbox.x_max {
                sum += field.get(x as usize, y as usize);
                n += 1;
            }
        }
    }
    let mean = sum / n as f64;
    let mut sq = 0.0;
    for p in patches {
        for y in p.bbox.y_min..=p.bbox.y_max {
            for x in p.bbox.x_min..=p.bbox.x_max {
                let d = field.get(x as usize, y as usize) - mean;
                sq += d * d;
            }
        }
    }
    Ok(QualityScore {
        value: (sq / n as f64).sqrt(),
        patch_count: patches.len(),
        pixel_count: n,
        mean_gradient: mean,
        degenerate: false,
    })
}

/// Score an already preprocessed image; also returns the patches so callers
/// can dump them.
pub fn score_image(
    img: &GrayImage,
    params: &MserParams,
) -> Result<(QualityScore, Vec<CharacterPatch>)> {
    let patches = extract_character_patches(img, params)?;
    let field = sobel_gradient(img);
    let score = pool_score(&field, &patches)?;
    Ok((score, patches))
}

/// Full pipeline for one file: decode, downsample, detect patches, pool.
pub fn score_document(
    path: &Path,
    params: &MserParams,
    downsample_limit: usize,
) -> Result<QualityScore> {
    let img = imgio::load_image(path)?;
    let img = imgio::downsample_if_large(img, downsample_limit);
    score_image(&img, params).map(|(score, _)| score)
}
