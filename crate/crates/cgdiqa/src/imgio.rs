//! Image decoding, grayscale conversion, and conditional downsampling.
//!
//! Supported inputs: binary PGM (P5, maxval 255) and 8-bit PNG
//! (grayscale or RGB). RGB is reduced with BT.601 luma. Images whose
//! longest side exceeds the downsample limit are rescaled so that side
//! becomes exactly the limit, bilinear, aspect preserved.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert_eq!(
            data.len(),
            width * height,
            "data length must be width*height"
        );
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel-wise 255 - v.
    pub fn inverted(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| 255 - v).collect(),
        }
    }
}

/// BT.601 luma from 8-bit RGB, rounded to nearest.
#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// Decode a PGM or PNG file into a grayscale image.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|(offset, message)| Error::Format {
            path: path.to_path_buf(),
            offset,
            message,
        })
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes).map_err(|(offset, message)| Error::Format {
            path: path.to_path_buf(),
            offset,
            message,
        })
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            message: "unsupported format (expected P5 PGM or PNG)".into(),
        })
    }
}

type FormatErr = (usize, String);

/// Decode binary PGM. Maxval must be 255; comments (`#`) allowed in the header.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, FormatErr> {
    if !bytes.starts_with(b"P5") {
        return Err((0, "missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err((pos, "truncated header".into())),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err((pos, "expected decimal integer in header".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse()
            .map_err(|_| (start, "integer overflow in header".into()))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err((2, "zero image dimension".into()));
    }
    if maxval != 255 {
        return Err((pos, format!("unsupported maxval {maxval} (only 255)")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err((pos, "expected single whitespace before raster".into())),
    }
    let need = width * height;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err((
            bytes.len(),
            format!("raster truncated: need {need} bytes, have {}", raster.len()),
        ));
    }
    Ok(GrayImage::new(width, height, raster[..need].to_vec()))
}

fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, FormatErr> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| (0, format!("png: {e}")))?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| (0, format!("png: {e}")))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err((
            0,
            format!("png: unsupported bit depth {:?}", info.bit_depth),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let data = match info.color_type {
        png::ColorType::Grayscale => buf[..w * h].to_vec(),
        png::ColorType::Rgb => buf[..w * h * 3]
            .chunks_exact(3)
            .map(|p| luma_bt601(p[0], p[1], p[2]))
            .collect(),
        other => return Err((0, format!("png: unsupported color type {other:?}"))),
    };
    Ok(GrayImage::new(w, h, data))
}

/// Canonical P5 encoding: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?);
    w.write_all(&encode_pgm(img)).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Rescale so the longest side equals `limit` when it exceeds it;
/// otherwise return the input untouched.
pub fn downsample_if_large(img: GrayImage, limit: usize) -> GrayImage {
    assert!(limit > 0);
    if img.width <= limit && img.height <= limit {
        return img;
    }
    let f = limit as f64 / img.width.max(img.height) as f64;
    let nw = ((img.width as f64 * f).round() as usize).max(1);
    let nh = ((img.height as f64 * f).round() as usize).max(1);
    resize_bilinear(&img, nw, nh)
}

/// Bilinear resample with pixel-center alignment and clamped sampling.
pub fn resize_bilinear(img: &GrayImage, nw: usize, nh: usize) -> GrayImage {
    let sx = img.width as f64 / nw as f64;
    let sy = img.height as f64 / nh as f64;
    let mut data = Vec::with_capacity(nw * nh);
    for dy in 0..nh {
        let fy = ((dy as f64 + 0.5) * sy - 0.5).clamp(0.0, (img.height - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let wy = fy - y0 as f64;
        for dx in 0..nw {
            let fx = ((dx as f64 + 0.5) * sx - 0.5).clamp(0.0, (img.width - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let wx = fx - x0 as f64;
            let top = img.get(x0, y0) as f64 * (1.0 - wx) + img.get(x1, y0) as f64 * wx;
            let bot = img.get(x0, y1) as f64 * (1.0 - wx) + img.get(x1, y1) as f64 * wx;
            let v = top * (1.0 - wy) + bot * wy;
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(nw, nh, data)
}
