//! Rasters and tables for the analysis outputs.
//!
//! Pixel row 0 is always the top of the image. Eigenimage planes come out of
//! [`crate::eigen::eigenimage`] already in that orientation, so they are
//! drawn without any further flip.

use std::fmt::Write as _;
use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{ImageFormat, Rgb, RgbImage};

use crate::corrnet::CorrelationGraph;
use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::ingest::CorpusTensor;
use crate::plane::{Channel, Plane};

/// Horizontal reference line drawn on the cumulative-variance chart.
pub const VARIANCE_REFERENCE_LINE: f64 = 0.5;

/// JPEG quality for the optional lossy outputs.
pub const JPEG_QUALITY: u8 = 90;

const GUTTER: u32 = 2;

/// Clamp to `[0, 1]` and scale to a byte with round-half-away-from-zero.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Composite of red, green and blue planes.
pub fn compose_rgb(planes: &[Plane; 3]) -> Result<RgbImage> {
    let [r, g, b] = planes;
    if !r.same_shape(g) || !r.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "planes are {}x{}, {}x{} and {}x{}",
            r.width(),
            r.height(),
            g.width(),
            g.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(RgbImage::from_fn(
        r.width() as u32,
        r.height() as u32,
        |x, y| {
            let (y, x) = (y as usize, x as usize);
            Rgb([
                quantize(r.get(y, x)),
                quantize(g.get(y, x)),
                quantize(b.get(y, x)),
            ])
        },
    ))
}

/// Linear ramp between two RGB anchors, sampled at `steps` colors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorRamp {
    pub from: [f64; 3],
    pub to: [f64; 3],
    pub steps: usize,
}

impl ColorRamp {
    pub const DEFAULT_STEPS: usize = 1000;

    pub fn new(from: [f64; 3], to: [f64; 3], steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "a color ramp needs at least 2 steps, got {steps}"
            )));
        }
        Ok(Self { from, to, steps })
    }

    /// Pure channel color to white.
    pub fn to_white(from: [f64; 3]) -> Self {
        Self {
            from,
            to: [1.0; 3],
            steps: Self::DEFAULT_STEPS,
        }
    }

    /// Ramp used for a channel's eigenimages.
    pub fn for_channel(channel: Channel) -> Self {
        match channel {
            Channel::Red => Self::to_white([1.0, 0.0, 0.0]),
            Channel::Green => Self::to_white([0.0, 1.0, 0.0]),
            Channel::Blue => Self::to_white([0.0, 0.0, 1.0]),
            Channel::Gray => Self {
                from: [0.3; 3],
                to: [0.9; 3],
                steps: Self::DEFAULT_STEPS,
            },
        }
    }

    fn lerp(&self, t: f64) -> [u8; 3] {
        [0, 1, 2].map(|c| quantize(self.from[c] + (self.to[c] - self.from[c]) * t))
    }

    /// Color `k` of `steps`; `0` is `from` and `steps - 1` is `to`.
    pub fn color(&self, k: usize) -> [u8; 3] {
        let k = k.min(self.steps - 1);
        self.lerp(k as f64 / (self.steps - 1) as f64)
    }

    /// Color for a position in `[0, 1]`, binned into `steps` equal intervals.
    pub fn lookup(&self, t: f64) -> [u8; 3] {
        let bin = (t.clamp(0.0, 1.0) * self.steps as f64).floor() as usize;
        self.color(bin)
    }

    /// Color halfway between the anchors.
    pub fn midpoint(&self) -> [u8; 3] {
        self.lerp(0.5)
    }
}

/// Min-max normalizes a plane and maps it through a ramp. A constant plane
/// takes the ramp midpoint.
pub fn colormap_plane(plane: &Plane, ramp: &ColorRamp) -> RgbImage {
    let (lo, hi) = plane.min_max();
    let range = hi - lo;
    RgbImage::from_fn(plane.width() as u32, plane.height() as u32, |x, y| {
        let v = plane.get(y as usize, x as usize);
        if range > 0.0 && range.is_finite() {
            Rgb(ramp.lookup((v - lo) / range))
        } else {
            Rgb(ramp.midpoint())
        }
    })
}

/// Number of grid rows needed for `n` tiles.
pub fn montage_rows(n: usize, columns: usize) -> usize {
    n.div_ceil(columns)
}

/// Row-major grid of full-size crops separated by black gutters; unused cells
/// in the last row are white.
pub fn montage(corpus: &CorpusTensor, columns: usize) -> Result<RgbImage> {
    if columns == 0 {
        return Err(Error::InvalidParameter(
            "montage needs at least one column".into(),
        ));
    }
    let (w, h) = (corpus.width() as u32, corpus.height() as u32);
    let rows = montage_rows(corpus.len(), columns) as u32;
    let cols = columns as u32;
    let width = cols * (w + GUTTER) - GUTTER;
    let height = rows * (h + GUTTER) - GUTTER;
    let mut canvas = RgbImage::from_pixel(width, height, Rgb([0, 0, 0]));
    for cell in 0..rows * cols {
        let (ox, oy) = ((cell % cols) * (w + GUTTER), (cell / cols) * (h + GUTTER));
        let image = cell as usize;
        for y in 0..h {
            for x in 0..w {
                let px = if image < corpus.len() {
                    let (yy, xx) = (y as usize, x as usize);
                    Rgb([0, 1, 2].map(|c| quantize(corpus.get(image, yy, xx, c))))
                } else {
                    Rgb([255, 255, 255])
                };
                canvas.put_pixel(ox + x, oy + y, px);
            }
        }
    }
    Ok(canvas)
}

/// Shortest representation that parses back to the same double.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn check_same_n(decomps: &[EigenDecomposition]) -> Result<usize> {
    let n = decomps.first().map(|d| d.components()).unwrap_or(0);
    if let Some(d) = decomps.iter().find(|d| d.components() != n) {
        return Err(Error::ChannelCountMismatch(format!(
            "{} channel has {} components, expected {n}",
            d.channel,
            d.components()
        )));
    }
    Ok(n)
}

/// `channel,component,eigenvalue,proportion,cumulative`, one row per component.
pub fn variance_table_csv(decomps: &[EigenDecomposition]) -> Result<String> {
    check_same_n(decomps)?;
    let mut out = String::from("channel,component,eigenvalue,proportion,cumulative\n");
    for d in decomps {
        for k in 0..d.components() {
            writeln!(
                out,
                "{},{},{},{},{}",
                d.channel,
                k + 1,
                format_f64(d.eigenvalues[k]),
                format_f64(d.proportions[k]),
                format_f64(d.cumulative[k])
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Long-format cumulative-variance series for charting:
/// `channel,component,cumulative`, preceded by a `reference,0,0.5` row
/// carrying the horizontal reference line.
pub fn variance_chart_data(decomps: &[EigenDecomposition]) -> Result<String> {
    check_same_n(decomps)?;
    let mut out = String::from("channel,component,cumulative\n");
    writeln!(out, "reference,0,{}", format_f64(VARIANCE_REFERENCE_LINE)).unwrap();
    for d in decomps {
        for (k, c) in d.cumulative.iter().enumerate() {
            writeln!(out, "{},{},{}", d.channel, k + 1, format_f64(*c)).unwrap();
        }
    }
    Ok(out)
}

/// Graph drawing: black edges, each vertex drawn as a thumbnail of its image
/// (or a red square without a corpus). `coords` are in vertex order.
pub fn render_graph(
    graph: &CorrelationGraph,
    coords: &[[f64; 2]],
    corpus: Option<&CorpusTensor>,
    size: u32,
) -> Result<RgbImage> {
    if coords.len() != graph.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinates for {} vertices",
            coords.len(),
            graph.order()
        )));
    }
    let size = size.max(64);
    let tile = (size / 20).max(8);
    let margin = tile as f64;
    let mut canvas = RgbImage::from_pixel(size, size, Rgb([255, 255, 255]));
    if coords.is_empty() {
        return Ok(canvas);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in coords {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let usable = size as f64 - 2.0 * margin;
    let to_px = |p: [f64; 2]| -> (i64, i64) {
        if span > 0.0 {
            (
                (margin + (p[0] - lo[0]) / span * usable).round() as i64,
                // y up in layout space, down in raster space
                (margin + (hi[1] - p[1]) / span * usable).round() as i64,
            )
        } else {
            ((size / 2) as i64, (size / 2) as i64)
        }
    };
    let pixels: Vec<(i64, i64)> = coords.iter().map(|&p| to_px(p)).collect();

    for (a, b) in graph.edges() {
        draw_line(&mut canvas, pixels[a], pixels[b], Rgb([0, 0, 0]));
    }
    for (v, &(cx, cy)) in pixels.iter().enumerate() {
        let index = corpus.and_then(|c| {
            let id = graph.vertices()[v];
            c.image_ids().iter().position(|&i| i == id).map(|i| (c, i))
        });
        draw_marker(&mut canvas, (cx, cy), tile, index);
    }
    Ok(canvas)
}

fn put(canvas: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < canvas.width() && (y as u32) < canvas.height() {
        canvas.put_pixel(x as u32, y as u32, color);
    }
}

// Bresenham.
fn draw_line(canvas: &mut RgbImage, from: (i64, i64), to: (i64, i64), color: Rgb<u8>) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(canvas, x, y, color);
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_marker(
    canvas: &mut RgbImage,
    center: (i64, i64),
    tile: u32,
    image: Option<(&CorpusTensor, usize)>,
) {
    let t = tile as i64;
    let (x0, y0) = (center.0 - t / 2, center.1 - t / 2);
    for dy in -1..=t {
        for dx in -1..=t {
            let border = dx < 0 || dy < 0 || dx == t || dy == t;
            let color = if border {
                Rgb([0, 0, 0])
            } else if let Some((corpus, i)) = image {
                // nearest-neighbour thumbnail
                let sy = (dy as usize * corpus.height()) / tile as usize;
                let sx = (dx as usize * corpus.width()) / tile as usize;
                Rgb([0, 1, 2].map(|c| quantize(corpus.get(i, sy, sx, c))))
            } else {
                Rgb([220, 30, 30])
            };
            put(canvas, x0 + dx, y0 + dy, color);
        }
    }
}

/// Lossless PNG bytes.
pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    image
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn encode_jpeg(image: &RgbImage, quality: u8) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality)
        .encode_image(image)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_and_clamps() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(1.3), 255);
        assert_eq!(quantize(1.0), 255);
    }

    #[test]
    fn mid_gray_composite() {
        let planes = [0; 3].map(|_| Plane::filled(3, 2, 0.5));
        let img = compose_rgb(&planes).unwrap();
        assert_eq!(img.dimensions(), (3, 2));
        assert!(img.as_raw().iter().all(|&b| b == 128));
    }

    #[test]
    fn composite_shape_mismatch() {
        let planes = [
            Plane::filled(3, 2, 0.5),
            Plane::filled(2, 3, 0.5),
            Plane::filled(3, 2, 0.5),
        ];
        assert!(matches!(
            compose_rgb(&planes),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ramp_endpoints_exact() {
        let ramp = ColorRamp::for_channel(Channel::Red);
        assert_eq!(ramp.color(0), [255, 0, 0]);
        assert_eq!(ramp.color(999), [255, 255, 255]);
        assert_eq!(ramp.lookup(0.0), [255, 0, 0]);
        assert_eq!(ramp.lookup(1.0), [255, 255, 255]);
        assert!(ColorRamp::new([0.0; 3], [1.0; 3], 1).is_err());
    }

    #[test]
    fn two_value_plane_hits_anchors() {
        let plane = Plane::new(2, 1, vec![0.0, 1.0]).unwrap();
        let img = colormap_plane(&plane, &ColorRamp::for_channel(Channel::Blue));
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 255]);
        assert_eq!(img.get_pixel(1, 0).0, [255, 255, 255]);
    }

    #[test]
    fn constant_plane_is_midpoint() {
        let ramp = ColorRamp::for_channel(Channel::Green);
        let img = colormap_plane(&Plane::filled(2, 2, 0.7), &ramp);
        assert!(img.pixels().all(|p| p.0 == [128, 255, 128]));
    }

    #[test]
    fn montage_grid_arithmetic() {
        assert_eq!(montage_rows(30, 5), 6);
        let corpus = crate::ingest::generate_synthetic_corpus(7, 4, 3).unwrap();
        let img = montage(&corpus, 5).unwrap();
        assert_eq!(img.dimensions(), (5 * 6 - 2, 2 * 6 - 2));
        // gutter between first two tiles
        assert_eq!(img.get_pixel(4, 0).0, [0, 0, 0]);
        // three white pads in the last row
        for cell in 7..10u32 {
            let (ox, oy) = ((cell % 5) * 6, 6);
            assert_eq!(img.get_pixel(ox + 1, oy + 1).0, [255, 255, 255]);
        }
    }

    #[test]
    fn montage_single_tile_has_no_gutters() {
        let corpus = crate::ingest::generate_synthetic_corpus(2, 4, 3).unwrap();
        let img = montage(&corpus, 2).unwrap();
        assert_eq!(img.dimensions(), (10, 4));
        assert_eq!(img.get_pixel(4, 0).0, [0, 0, 0]);
        assert!(montage(&corpus, 0).is_err());
    }

    #[test]
    fn line_drawing_covers_endpoints() {
        let mut img = RgbImage::from_pixel(10, 10, Rgb([255, 255, 255]));
        draw_line(&mut img, (1, 1), (8, 5), Rgb([0, 0, 0]));
        assert_eq!(img.get_pixel(1, 1).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(8, 5).0, [0, 0, 0]);
    }

    #[test]
    fn png_roundtrip_is_lossless() {
        let plane = Plane::new(3, 1, vec![0.1, 0.55, 0.9]).unwrap();
        let img = compose_rgb(&[plane.clone(), plane.clone(), plane]).unwrap();
        let bytes = encode_png(&img).unwrap();
        let back = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(back, img);
        assert!(!encode_jpeg(&img, JPEG_QUALITY).unwrap().is_empty());
    }
}
