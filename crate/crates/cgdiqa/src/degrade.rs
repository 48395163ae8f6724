//! Synthetic degradation: Gaussian blur and deterministic test pages.
//!
//! The test page generator stands in for real captured documents when the
//! benchmark dataset is not available: a white page scattered with dark
//! glyph-like blobs whose sizes and aspect ratios fall inside the
//! character-patch filters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imgio::GrayImage;

/// Gaussian blur parameters. Radius defaults to ceil(3*sigma); weights are
/// renormalized after truncation.
#[derive(Debug, Clone, Copy)]
pub struct BlurSpec {
    pub sigma: f64,
    pub kernel_radius: usize,
}

impl BlurSpec {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma >= 0.0);
        BlurSpec {
            sigma,
            kernel_radius: (3.0 * sigma).ceil() as usize,
        }
    }

    /// Normalized 1-D kernel, length 2*radius+1.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.kernel_radius as isize;
        let s2 = 2.0 * self.sigma * self.sigma;
        let mut k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / s2).exp()).collect();
        let sum: f64 = k.iter().sum();
        for w in &mut k {
            *w /= sum;
        }
        k
    }
}

/// Separable Gaussian convolution with replicate padding; sigma 0 is the
/// identity.
pub fn gaussian_blur(img: &GrayImage, spec: &BlurSpec) -> GrayImage {
    if spec.sigma == 0.0 || spec.kernel_radius == 0 {
        return img.clone();
    }
    let k = spec.kernel();
    let r = spec.kernel_radius as isize;
    let (w, h) = (img.width(), img.height());
    // horizontal pass into reals, vertical pass, then one rounding
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (ki, &kw) in k.iter().enumerate() {
                let sx = (x + ki as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kw * img.get(sx, y) as f64;
            }
            tmp[y * w + x as usize] = acc;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, &kw) in k.iter().enumerate() {
                let sy = (y + ki as isize - r).clamp(0, h as isize - 1) as usize;
                acc += kw * tmp[sy * w + x];
            }
            out[y as usize * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::new(w, h, out)
}

fn fill_rect(img: &mut GrayImage, x0: usize, y0: usize, gw: usize, gh: usize, v: u8) {
    for y in y0..(y0 + gh).min(img.height()) {
        for x in x0..(x0 + gw).min(img.width()) {
            img.set(x, y, v);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn draw_glyph(
    img: &mut GrayImage,
    shape: u8,
    x0: usize,
    y0: usize,
    gw: usize,
    gh: usize,
    stroke: usize,
    value: u8,
) {
    let s = stroke.max(1);
    match shape {
        0 => fill_rect(img, x0, y0, (s + 2).min(gw), gh, value), // solid bar
        1 => {
            // L-shape
            fill_rect(img, x0, y0, s, gh, value);
            fill_rect(img, x0, y0 + gh - s, gw, s, value);
        }
        2 => {
            // ring: rectangle outline
            fill_rect(img, x0, y0, gw, s, value);
            fill_rect(img, x0, y0 + gh - s, gw, s, value);
            fill_rect(img, x0, y0, s, gh, value);
            fill_rect(img, x0 + gw - s, y0, s, gh, value);
        }
        3 => {
            // H-shape
            fill_rect(img, x0, y0, s, gh, value);
            fill_rect(img, x0 + gw - s, y0, s, gh, value);
            fill_rect(img, x0, y0 + gh / 2 - s / 2, gw, s, value);
        }
        _ => {
            // T-shape
            fill_rect(img, x0, y0, gw, s, value);
            fill_rect(img, x0 + gw / 2 - s / 2, y0, s, gh, value);
        }
    }
}

/// Deterministic synthetic document page: white background with rows of
/// dark stroke-built glyphs (bars, L-shapes, rings, H- and T-shapes)
/// sized 6-40 px. Ink level and stroke width are graded the way real
/// print responds to defocus: most glyphs are faint thin body text that
/// blur extinguishes immediately, a minority is progressively bolder,
/// and occasional headline rows of large bold glyphs persist under
/// heavy blur. This makes both the detected patch count and the score
/// fall off as blur grows, as they do on captured documents.
pub fn make_test_page(width: usize, height: usize, seed: u64) -> GrayImage {
    assert!(width >= 64 && height >= 64, "page must be at least 64x64");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = GrayImage::filled(width, height, 255);
    let margin = 4usize;
    let mut y = margin;
    let mut row_idx = 0usize;
    loop {
        let headline = row_idx % 12 == 11 && height >= 200;
        let cell = if headline { 44 } else { 24 };
        if y + cell > height - margin {
            break;
        }
        let cols = (width - 2 * margin) / cell;
        for cx in 0..cols {
            let x0 = margin + cx * cell;
            if headline {
                let (gw, gh, stroke, value) = if cx % 2 == 0 {
                    // bold compact glyph that stays detectable under heavy blur
                    (
                        rng.gen_range(13..=16),
                        rng.gen_range(13..=16),
                        rng.gen_range(3..=4),
                        rng.gen_range(0..=30u8),
                    )
                } else {
                    // large decorative outline, too big for the area filter
                    (
                        rng.gen_range(22..=36),
                        rng.gen_range(22..=36),
                        rng.gen_range(2..=3),
                        rng.gen_range(0..=60u8),
                    )
                };
                let shape = rng.gen_range(1..5u8); // no thin bars at this size
                let jx = rng.gen_range(0..(cell - margin - gw).max(1));
                let jy = rng.gen_range(0..(cell - margin - gh).max(1));
                draw_glyph(&mut img, shape, x0 + jx, y + jy, gw, gh, stroke, value);
            } else {
                // body text: faint majority, graded bolder minority
                let roll = rng.gen_range(0..1000u32);
                let (value, stroke, lo, hi) = match roll {
                    0..=59 => continue, // blank cell
                    60..=819 => (rng.gen_range(221..=237u8), 1, 10, 16),
                    820..=944 => (rng.gen_range(150..=185u8), rng.gen_range(1..=2), 7, 12),
                    _ => (rng.gen_range(90..=140u8), rng.gen_range(1..=2), 8, 14),
                };
                let gw: usize = rng.gen_range(lo..=hi);
                let gh: usize = rng.gen_range(lo..=hi);
                let shape = rng.gen_range(0..5u8);
                let jx = rng.gen_range(0..(cell - margin - gw).max(1));
                let jy = rng.gen_range(0..(cell - margin - gh).max(1));
                draw_glyph(&mut img, shape, x0 + jx, y + jy, gw, gh, stroke, value);
            }
        }
        y += cell;
        row_idx += 1;
    }
    img
}
