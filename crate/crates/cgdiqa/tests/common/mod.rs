//! Shared brute-force oracles for the integration and acceptance tests.
//!
//! Everything here is deliberately naive: straight double loops, per-level
//! flood fills, rank-by-enumeration. Slow but obviously correct, so the
//! optimized library code can be checked against it.

#![allow(dead_code)]

use std::collections::HashMap;

use cgdiqa::imgio::GrayImage;
use cgdiqa::mser::BBox;
use rand::Rng;

/// Naive Sobel: correlate both 3x3 kernels tap by tap with replicate
/// (clamp-to-edge) padding and take the Euclidean norm.
pub fn naive_sobel(img: &GrayImage) -> Vec<f64> {
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let sx = (x + dx).clamp(0, w - 1) as usize;
                    let sy = (y + dy).clamp(0, h - 1) as usize;
                    let v = img.get(sx, sy) as f64;
                    gx += v * KX[(dy + 1) as usize][(dx + 1) as usize];
                    gy += v * KY[(dy + 1) as usize][(dx + 1) as usize];
                }
            }
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// One distinct threshold-set component found by brute force.
/// `level` is the lowest threshold at which this exact pixel set occurs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleNode {
    pub level: u8,
    pub area: u32,
    pub bbox: BBox,
}

/// Brute-force extremal-region enumeration: for every gray level, label the
/// 4-connected components of the threshold set `{p : v(p) <= t}` (or
/// `>= t` for light-on-dark via inversion by the caller), deduplicate by
/// exact pixel set, and keep each set's minimal level.
pub fn oracle_component_nodes(img: &GrayImage, light_on_dark: bool) -> Vec<OracleNode> {
    let img = if light_on_dark {
        img.inverted()
    } else {
        img.clone()
    };
    let (w, h) = (img.width(), img.height());
    let mut seen: HashMap<Vec<usize>, OracleNode> = HashMap::new();
    let mut levels: Vec<u8> = img.data().to_vec();
    levels.sort_unstable();
    levels.dedup();
    for &t in &levels {
        let mut visited = vec![false; w * h];
        for start in 0..w * h {
            if visited[start] || img.data()[start] > t {
                continue;
            }
            // flood fill one component of the threshold set
            let mut stack = vec![start];
            visited[start] = true;
            let mut pixels = Vec::new();
            while let Some(p) = stack.pop() {
                pixels.push(p);
                let (x, y) = (p % w, p / w);
                let mut push = |q: usize| {
                    if !visited[q] && img.data()[q] <= t {
                        visited[q] = true;
                        stack.push(q);
                    }
                };
                if x > 0 {
                    push(p - 1);
                }
                if x + 1 < w {
                    push(p + 1);
                }
                if y > 0 {
                    push(p - w);
                }
                if y + 1 < h {
                    push(p + w);
                }
            }
            pixels.sort_unstable();
            let bbox = pixel_bbox(&pixels, w);
            let node = OracleNode {
                level: t,
                area: pixels.len() as u32,
                bbox,
            };
            seen.entry(pixels).or_insert(node);
        }
    }
    let mut nodes: Vec<OracleNode> = seen.into_values().collect();
    nodes.sort();
    nodes
}

fn pixel_bbox(pixels: &[usize], w: usize) -> BBox {
    let mut bbox = BBox {
        x_min: u32::MAX,
        y_min: u32::MAX,
        x_max: 0,
        y_max: 0,
    };
    for &p in pixels {
        let (x, y) = ((p % w) as u32, (p / w) as u32);
        bbox.x_min = bbox.x_min.min(x);
        bbox.y_min = bbox.y_min.min(y);
        bbox.x_max = bbox.x_max.max(x);
        bbox.y_max = bbox.y_max.max(y);
    }
    bbox
}

/// Average ranks by enumeration: rank of v = (count of smaller values) + 1,
/// averaged over the positions its ties would occupy.
pub fn oracle_average_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let smaller = values.iter().filter(|&&u| u < v).count() as f64;
            let equal = values.iter().filter(|&&u| u == v).count() as f64;
            // ties occupy ranks smaller+1 ..= smaller+equal; take their mean
            smaller + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation straight from the definition.
pub fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

/// Standard deviation of all listed values (population form), by enumeration.
pub fn oracle_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Random image with the requested number of quantized gray levels.
pub fn random_image<R: Rng>(rng: &mut R, w: usize, h: usize, levels: usize) -> GrayImage {
    let step = 255 / (levels - 1).max(1);
    let data = (0..w * h)
        .map(|_| (rng.gen_range(0..levels) * step) as u8)
        .collect();
    GrayImage::new(w, h, data)
}
