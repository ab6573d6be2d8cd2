//! Decoding, center cropping and corpus assembly.
//!
//! All intensities are doubles in `[0, 1]`; 8-bit sources are divided by 255.
//! A corpus is stored image-major, row-major, channel-last, which is also the
//! payload order of the `ECT1` dump format.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use image::ColorType;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Dimension, Error, Result};
use crate::plane::{gray_value, Channel, Plane};

/// Magic bytes opening a tensor dump.
pub const ECT_MAGIC: &[u8; 4] = b"ECT1";

/// A decoded RGB source image before cropping.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceImage {
    width: usize,
    height: usize,
    /// Row-major, channel-last.
    pixels: Vec<f64>,
    source_path: String,
}

impl SourceImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        source_path: impl Into<String>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height}x3 image",
                pixels.len()
            )));
        }
        check_unit_range(&pixels)?;
        Ok(Self {
            width,
            height,
            pixels,
            source_path: source_path.into(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.pixels[(y * self.width + x) * 3 + c]
    }
}

/// N equally sized square crops with stable 1-based labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusTensor {
    n: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    image_ids: Vec<u32>,
}

impl CorpusTensor {
    /// Builds a corpus from raw channel-last data. Labels are `1..=n`.
    pub fn from_raw(n: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientImages {
                needed: 2,
                found: n,
            });
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "crop dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != n * height * width * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {n} images of {width}x{height}x3",
                data.len()
            )));
        }
        check_unit_range(&data)?;
        Ok(Self {
            n,
            height,
            width,
            data,
            image_ids: (1..=n as u32).collect(),
        })
    }

    /// Stacks per-image crops (each `[red, green, blue]`) in the given order.
    pub fn from_crops(crops: Vec<[Plane; 3]>) -> Result<Self> {
        let Some(first) = crops.first() else {
            return Err(Error::InsufficientImages {
                needed: 2,
                found: 0,
            });
        };
        let (h, w) = (first[0].height(), first[0].width());
        let mut data = Vec::with_capacity(crops.len() * h * w * 3);
        for (i, crop) in crops.iter().enumerate() {
            if crop.iter().any(|p| p.height() != h || p.width() != w) {
                return Err(Error::DimensionMismatch(format!(
                    "crop {} does not match the {w}x{h} shape of the first crop",
                    i + 1
                )));
            }
            for y in 0..h {
                for x in 0..w {
                    data.extend(crop.iter().map(|p| p.get(y, x)));
                }
            }
        }
        Self::from_raw(crops.len(), h, w, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Side length for square corpora.
    pub fn crop_size(&self) -> usize {
        self.width
    }

    /// Number of pixels per plane.
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn image_ids(&self) -> &[u32] {
        &self.image_ids
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, image: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[((image * self.height + y) * self.width + x) * 3 + c]
    }

    /// Channel-last pixels of one image.
    pub fn image(&self, image: usize) -> &[f64] {
        let len = self.pixel_count() * 3;
        &self.data[image * len..(image + 1) * len]
    }

    /// One image's plane for a channel; gray is `(r + g + b) / 3`.
    pub fn channel_plane(&self, image: usize, channel: Channel) -> Plane {
        let px = self.image(image);
        let data: Vec<f64> = match channel.rgb_index() {
            Some(c) => px.chunks_exact(3).map(|p| p[c]).collect(),
            None => px
                .chunks_exact(3)
                .map(|p| gray_value(p[0], p[1], p[2]))
                .collect(),
        };
        Plane::from_parts(self.width, self.height, data)
    }

    /// Copy with the images reordered; `order[k]` is the source index of image `k`.
    /// Labels follow their images.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if order.len() != self.n
            || order
                .iter()
                .any(|&i| i >= self.n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidParameter("order is not a permutation".into()));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.image(i));
        }
        Ok(Self {
            n: self.n,
            height: self.height,
            width: self.width,
            data,
            image_ids: order.iter().map(|&i| self.image_ids[i]).collect(),
        })
    }

    /// Serializes to the `ECT1` dump format.
    pub fn to_ect_bytes(&self) -> Vec<u8> {
        encode_ect(self.n, self.height, self.width, &self.data)
    }

    pub fn from_ect_bytes(bytes: &[u8]) -> Result<Self> {
        let (n, h, w, data) = decode_ect(bytes)?;
        Self::from_raw(n, h, w, data)
    }

    pub fn read_ect(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_ect_bytes(&bytes)
    }
}

/// Encodes `n` images of `height`×`width`×3 doubles: magic, three `u32` LE
/// dimensions, then the `f64` LE payload.
pub fn encode_ect(n: usize, height: usize, width: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(
        data.len(),
        n * height * width * 3,
        "payload length mismatch"
    );
    let mut out = Vec::with_capacity(16 + data.len() * 8);
    out.extend_from_slice(ECT_MAGIC);
    for dim in [n, height, width] {
        let dim = u32::try_from(dim).expect("dimension exceeds u32");
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_ect`]; returns `(n, height, width, payload)`.
pub fn decode_ect(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>)> {
    if bytes.len() < 16 || &bytes[..4] != ECT_MAGIC {
        return Err(Error::Format("missing ECT1 header".into()));
    }
    let dim = |k: usize| {
        let b: [u8; 4] = bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap();
        u32::from_le_bytes(b) as usize
    };
    let (n, h, w) = (dim(0), dim(1), dim(2));
    let count = n
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(3))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let payload = &bytes[16..];
    if payload.len() != count * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes for {n}x{h}x{w}x3, found {}",
            count * 8,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n, h, w, data))
}

/// Top-left corner of the centered `crop`×`crop` window: half the margin,
/// rounded down, so an odd leftover pixel lands on the right/bottom.
pub fn crop_offset(width: usize, height: usize, crop: usize) -> (usize, usize) {
    ((width - crop) / 2, (height - crop) / 2)
}

/// Extracts the centered square window as `[red, green, blue]` planes.
pub fn center_crop(image: &SourceImage, crop_size: usize) -> Result<[Plane; 3]> {
    if crop_size == 0 {
        return Err(Error::InvalidParameter("crop size must be positive".into()));
    }
    for (dimension, actual) in [
        (Dimension::Width, image.width),
        (Dimension::Height, image.height),
    ] {
        if actual < crop_size {
            return Err(Error::ImageTooSmall {
                path: image.source_path.clone(),
                dimension,
                actual: actual as u32,
                crop: crop_size as u32,
            });
        }
    }
    let (ox, oy) = crop_offset(image.width, image.height, crop_size);
    let mut planes = [0usize; 3].map(|_| Plane::filled(crop_size, crop_size, 0.0));
    for y in 0..crop_size {
        for x in 0..crop_size {
            for (c, plane) in planes.iter_mut().enumerate() {
                plane.set(y, x, image.get(y + oy, x + ox, c));
            }
        }
    }
    Ok(planes)
}

/// Decodes a JPEG or PNG file into a three-channel image.
///
/// Grayscale sources and four-component (CMYK/YCCK) JPEGs are rejected.
/// Alpha is discarded.
pub fn decode_image(path: &Path) -> Result<SourceImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image_bytes(&bytes, path)
}

pub fn decode_image_bytes(bytes: &[u8], path: &Path) -> Result<SourceImage> {
    if let Some(components) = jpeg_component_count(bytes) {
        if components != 3 {
            return Err(Error::UnsupportedColor {
                path: path.to_path_buf(),
                layout: format!("{components}-component JPEG"),
            });
        }
    }
    let format = image::guess_format(bytes).map_err(|e| decode_err(path, e))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Jpeg) {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: format!("unsupported format {format:?}"),
        });
    }
    let decoded =
        image::load_from_memory_with_format(bytes, format).map_err(|e| decode_err(path, e))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<f64> = match decoded.color() {
        ColorType::Rgb8 | ColorType::Rgba8 => decoded
            .to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 255.0)
            .collect(),
        ColorType::Rgb16 | ColorType::Rgba16 => decoded
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 65535.0)
            .collect(),
        ColorType::Rgb32F | ColorType::Rgba32F => decoded
            .to_rgb32f()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v).clamp(0.0, 1.0))
            .collect(),
        other => {
            return Err(Error::UnsupportedColor {
                path: path.to_path_buf(),
                layout: format!("{other:?}"),
            })
        }
    };
    SourceImage::new(width, height, pixels, path.display().to_string())
}

fn decode_err(path: &Path, e: image::ImageError) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Number of components declared in a JPEG frame header, if `bytes` is a JPEG
/// with a readable SOF segment.
fn jpeg_component_count(bytes: &[u8]) -> Option<u8> {
    if bytes.len() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8 {
        return None;
    }
    let mut i = 2;
    while i + 4 <= bytes.len() {
        if bytes[i] != 0xFF {
            return None;
        }
        let marker = bytes[i + 1];
        if marker == 0xFF {
            i += 1;
            continue;
        }
        if marker == 0xD8 || marker == 0x01 || (0xD0..=0xD7).contains(&marker) {
            i += 2;
            continue;
        }
        let len = u16::from_be_bytes([bytes[i + 2], bytes[i + 3]]) as usize;
        let is_sof = matches!(marker, 0xC0..=0xCF) && !matches!(marker, 0xC4 | 0xC8 | 0xCC);
        if is_sof {
            // length(2) precision(1) height(2) width(2) components(1)
            return bytes.get(i + 9).copied();
        }
        if marker == 0xDA || marker == 0xD9 {
            return None;
        }
        i += 2 + len;
    }
    None
}

/// Decodes and crops every file, keeping input order. Labels are `1..=N`.
///
/// Files are processed in parallel; the first failing path in list order is
/// reported and no tensor is returned.
pub fn load_corpus<P: AsRef<Path> + Sync>(paths: &[P], crop_size: usize) -> Result<CorpusTensor> {
    if paths.is_empty() {
        return Err(Error::InsufficientImages {
            needed: 2,
            found: 0,
        });
    }
    let crops: Vec<Result<[Plane; 3]>> = paths
        .par_iter()
        .map(|p| decode_image(p.as_ref()).and_then(|img| center_crop(&img, crop_size)))
        .collect();
    let crops = crops.into_iter().collect::<Result<Vec<_>>>()?;
    CorpusTensor::from_crops(crops)
}

/// Lists JPEG/PNG files in a directory, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("jpg" | "jpeg" | "png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Deterministic landscape-like test corpus.
///
/// Each image is a vertical two-band gradient, sky over ground, with seeded
/// per-image variation: horizon height, palette, a separable texture, a few
/// dark "trees" and pixel noise. A fraction of images are snow scenes (bright
/// ground under a dark sky) or texture-dominated close-ups, so the correlation
/// network has both clusters and isolates.
pub fn generate_synthetic_corpus(n: usize, crop_size: usize, seed: u64) -> Result<CorpusTensor> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 images, got {n}"
        )));
    }
    if crop_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "need crop_size >= 2, got {crop_size}"
        )));
    }
    let images: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| synthetic_image(crop_size, seed, i as u64))
        .collect();
    CorpusTensor::from_raw(n, crop_size, crop_size, images.concat())
}

#[derive(Clone, Copy)]
enum Scene {
    Day,
    Snow,
    CloseUp,
}

fn synthetic_image(size: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    let scene = match rng.gen::<f64>() {
        u if u < 0.6 => Scene::Day,
        u if u < 0.8 => Scene::Snow,
        _ => Scene::CloseUp,
    };
    let horizon: f64 = rng.gen_range(0.4..0.6);
    let (sky_top, sky_low, ground_high, ground_low) = match scene {
        Scene::Day | Scene::CloseUp => (
            color(&mut rng, [0.30, 0.45, 0.80], [0.55, 0.70, 0.95]),
            color(&mut rng, [0.75, 0.60, 0.70], [0.95, 0.80, 0.90]),
            color(&mut rng, [0.25, 0.45, 0.10], [0.40, 0.65, 0.25]),
            color(&mut rng, [0.10, 0.25, 0.05], [0.25, 0.40, 0.15]),
        ),
        Scene::Snow => (
            color(&mut rng, [0.10, 0.10, 0.20], [0.25, 0.25, 0.35]),
            color(&mut rng, [0.30, 0.30, 0.40], [0.45, 0.45, 0.55]),
            color(&mut rng, [0.75, 0.75, 0.80], [0.90, 0.90, 0.95]),
            color(&mut rng, [0.85, 0.85, 0.90], [0.98, 0.98, 0.99]),
        ),
    };
    let texture_amp = match scene {
        Scene::CloseUp => rng.gen_range(0.25..0.4),
        _ => rng.gen_range(0.01..0.06),
    };
    let band_weight = match scene {
        Scene::CloseUp => rng.gen_range(0.0..0.25),
        _ => 1.0,
    };
    let fx: f64 = rng.gen_range(2.0..9.0);
    let fy: f64 = rng.gen_range(2.0..9.0);
    let px: f64 = rng.gen_range(0.0..2.0 * PI);
    let py: f64 = rng.gen_range(0.0..2.0 * PI);
    let tint = color(&mut rng, [-0.4, -0.4, -0.4], [0.4, 0.4, 0.4]);
    let trees: Vec<(f64, f64, f64)> = (0..rng.gen_range(0..4))
        .map(|_| {
            (
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.02..0.06),
                rng.gen_range(0.3..0.8),
            )
        })
        .collect();

    let s = size as f64;
    let tex_x: Vec<f64> = (0..size)
        .map(|x| (2.0 * PI * fx * x as f64 / s + px).sin())
        .collect();
    let tex_y: Vec<f64> = (0..size)
        .map(|y| (2.0 * PI * fy * y as f64 / s + py).sin())
        .collect();

    let mut out = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        let v = (y as f64 + 0.5) / s;
        let base = if v < horizon {
            lerp3(sky_top, sky_low, v / horizon)
        } else {
            lerp3(ground_high, ground_low, (v - horizon) / (1.0 - horizon))
        };
        for x in 0..size {
            let u = (x as f64 + 0.5) / s;
            let tex = 0.5 * (tex_x[x] + tex_y[y]) + tex_x[x] * tex_y[y];
            let mut tree = 0.0;
            for &(cx, half_width, top) in &trees {
                let reach = (v - (1.0 - top)).max(0.0) / top;
                if (u - cx).abs() < half_width * reach && v > 1.0 - top {
                    tree = 1.0;
                }
            }
            for c in 0..3 {
                let banded = band_weight * base[c] + (1.0 - band_weight) * (0.5 + 0.3 * tint[c]);
                let mut value = banded + texture_amp * tex * (1.0 + tint[c]);
                if tree > 0.0 {
                    value *= 0.35;
                }
                value += rng.gen_range(-0.02..0.02);
                out.push(value.clamp(0.0, 1.0));
            }
        }
    }
    out
}

fn color(rng: &mut ChaCha8Rng, lo: [f64; 3], hi: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|c| rng.gen_range(lo[c]..hi[c]))
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|c| a[c] + (b[c] - a[c]) * t)
}

fn check_unit_range(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "intensity {} at offset {i} is outside [0, 1]",
            values[i]
        ))),
        None => Ok(()),
    }
}
