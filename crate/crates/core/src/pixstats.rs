//! Pixel-by-pixel corpus statistics.
//!
//! Every reduction walks the images in ascending index order for each pixel,
//! so results are bit-identical regardless of how pixels are split across
//! worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::CorpusTensor;
use crate::plane::{gray_value, Plane};

/// Multiplier applied to the spread when building bound images.
pub const DEFAULT_BOUND_SCALE: f64 = 1.96;

/// Per-channel mean over the corpus, `[red, green, blue]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanImage {
    pub planes: [Plane; 3],
}

/// Per-channel variance over the corpus, `[red, green, blue]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceImage {
    pub planes: [Plane; 3],
    pub divisor: VarianceDivisor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceDivisor {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpreadMode {
    /// Scale the variance itself.
    #[default]
    Variance,
    /// Scale the square root of the variance.
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// `mean ∓ scale·spread`, left unclamped.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundImage {
    pub planes: [Plane; 3],
    pub side: BoundSide,
    pub scale: f64,
    pub spread_mode: SpreadMode,
}

impl fmt::Display for SpreadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpreadMode::Variance => "variance",
            SpreadMode::StdDev => "stddev",
        })
    }
}

impl FromStr for SpreadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" | "var" => Ok(SpreadMode::Variance),
            "stddev" | "sd" => Ok(SpreadMode::StdDev),
            other => Err(Error::InvalidParameter(format!(
                "spread mode must be variance or stddev, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for VarianceDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceDivisor::Population => "population",
            VarianceDivisor::Sample => "sample",
        })
    }
}

impl FromStr for VarianceDivisor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" | "n" => Ok(VarianceDivisor::Population),
            "sample" | "n-1" => Ok(VarianceDivisor::Sample),
            other => Err(Error::InvalidParameter(format!(
                "divisor must be population or sample, got {other:?}"
            ))),
        }
    }
}

fn per_channel(corpus: &CorpusTensor, f: impl Fn(usize, usize) -> f64 + Sync) -> [Plane; 3] {
    let (h, w) = (corpus.height(), corpus.width());
    [0, 1, 2].map(|c| {
        let mut data = vec![0.0; h * w];
        data.par_iter_mut()
            .enumerate()
            .for_each(|(px, out)| *out = f(px, c));
        Plane::from_parts(w, h, data)
    })
}

/// `mean[c][y][x] = (1/N) Σᵢ corpus[i][y][x][c]`.
pub fn mean_image(corpus: &CorpusTensor) -> MeanImage {
    let n = corpus.len();
    let data = corpus.as_slice();
    let stride = corpus.pixel_count() * 3;
    let planes = per_channel(corpus, |px, c| {
        let mut sum = 0.0;
        for i in 0..n {
            sum += data[i * stride + px * 3 + c];
        }
        sum / n as f64
    });
    MeanImage { planes }
}

/// Two-pass variance about a previously computed mean.
pub fn variance_image(
    corpus: &CorpusTensor,
    mean: &MeanImage,
    divisor: VarianceDivisor,
) -> Result<VarianceImage> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::InsufficientImages {
            needed: 2,
            found: n,
        });
    }
    if mean.planes[0].height() != corpus.height() || mean.planes[0].width() != corpus.width() {
        return Err(Error::DimensionMismatch(
            "mean image does not match the corpus shape".into(),
        ));
    }
    let denom = match divisor {
        VarianceDivisor::Population => n as f64,
        VarianceDivisor::Sample => (n - 1) as f64,
    };
    let data = corpus.as_slice();
    let stride = corpus.pixel_count() * 3;
    let planes = per_channel(corpus, |px, c| {
        let m = mean.planes[c].as_slice()[px];
        let mut sum = 0.0;
        for i in 0..n {
            let d = data[i * stride + px * 3 + c] - m;
            sum += d * d;
        }
        sum / denom
    });
    Ok(VarianceImage { planes, divisor })
}

/// Lower and upper bound images around the mean.
pub fn bound_images(
    mean: &MeanImage,
    var: &VarianceImage,
    scale: f64,
    spread_mode: SpreadMode,
) -> Result<(BoundImage, BoundImage)> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bound scale must be finite and non-negative, got {scale}"
        )));
    }
    if !mean.planes[0].same_shape(&var.planes[0]) {
        return Err(Error::DimensionMismatch(
            "mean and variance planes differ in shape".into(),
        ));
    }
    let side = |sign: f64| -> [Plane; 3] {
        [0, 1, 2].map(|c| {
            let m = &mean.planes[c];
            let data = m
                .as_slice()
                .iter()
                .zip(var.planes[c].as_slice())
                .map(|(&mu, &v)| {
                    let spread = match spread_mode {
                        SpreadMode::Variance => v,
                        SpreadMode::StdDev => v.sqrt(),
                    };
                    mu + sign * scale * spread
                })
                .collect();
            Plane::from_parts(m.width(), m.height(), data)
        })
    };
    let make = |planes, side| BoundImage {
        planes,
        side,
        scale,
        spread_mode,
    };
    Ok((
        make(side(-1.0), BoundSide::Lower),
        make(side(1.0), BoundSide::Upper),
    ))
}

/// Per-image grayscale planes, `(R + G + B) / 3` at each pixel.
pub fn flatten_gray(corpus: &CorpusTensor) -> Vec<Plane> {
    (0..corpus.len())
        .into_par_iter()
        .map(|i| corpus.channel_plane(i, crate::Channel::Gray))
        .collect()
}

/// Flattens three planes with the same rule as [`flatten_gray`].
pub fn gray_of(planes: &[Plane; 3]) -> Plane {
    let [r, g, b] = planes;
    let data = r
        .as_slice()
        .iter()
        .zip(g.as_slice())
        .zip(b.as_slice())
        .map(|((&r, &g), &b)| gray_value(r, g, b))
        .collect();
    Plane::from_parts(r.width(), r.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_from_pixels(values: &[[f64; 3]]) -> CorpusTensor {
        let data: Vec<f64> = values.iter().flatten().copied().collect();
        CorpusTensor::from_raw(values.len(), 1, 1, data).unwrap()
    }

    #[test]
    fn two_value_mean_and_variance() {
        let corpus = corpus_from_pixels(&[[0.2, 0.2, 0.2], [0.6, 0.6, 0.6]]);
        let mean = mean_image(&corpus);
        assert!((mean.planes[0].get(0, 0) - 0.4).abs() < 1e-15);
        let var = variance_image(&corpus, &mean, VarianceDivisor::Population).unwrap();
        assert!((var.planes[1].get(0, 0) - 0.04).abs() < 1e-15);
        let sample = variance_image(&corpus, &mean, VarianceDivisor::Sample).unwrap();
        assert!((sample.planes[1].get(0, 0) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn bounds_variance_mode() {
        let corpus = corpus_from_pixels(&[[0.2, 0.2, 0.2], [0.6, 0.6, 0.6]]);
        let mean = mean_image(&corpus);
        let var = variance_image(&corpus, &mean, VarianceDivisor::Population).unwrap();
        let (lo, hi) = bound_images(&mean, &var, 1.96, SpreadMode::Variance).unwrap();
        assert!((lo.planes[0].get(0, 0) - 0.3216).abs() < 1e-12);
        assert!((hi.planes[0].get(0, 0) - 0.4784).abs() < 1e-12);
        assert_eq!(lo.side, BoundSide::Lower);
    }

    #[test]
    fn bounds_stddev_mode() {
        let corpus = corpus_from_pixels(&[[0.2, 0.2, 0.2], [0.6, 0.6, 0.6]]);
        let mean = mean_image(&corpus);
        let var = variance_image(&corpus, &mean, VarianceDivisor::Population).unwrap();
        let (lo, hi) = bound_images(&mean, &var, 1.96, SpreadMode::StdDev).unwrap();
        assert!((lo.planes[2].get(0, 0) - 0.008).abs() < 1e-12);
        assert!((hi.planes[2].get(0, 0) - 0.792).abs() < 1e-12);
    }

    #[test]
    fn zero_scale_bounds_equal_mean() {
        let corpus = corpus_from_pixels(&[[0.1, 0.5, 0.9], [0.3, 0.2, 0.7]]);
        let mean = mean_image(&corpus);
        let var = variance_image(&corpus, &mean, VarianceDivisor::Population).unwrap();
        let (lo, hi) = bound_images(&mean, &var, 0.0, SpreadMode::Variance).unwrap();
        assert_eq!(lo.planes, mean.planes);
        assert_eq!(hi.planes, mean.planes);
    }

    #[test]
    fn negative_scale_rejected() {
        let corpus = corpus_from_pixels(&[[0.1, 0.5, 0.9], [0.3, 0.2, 0.7]]);
        let mean = mean_image(&corpus);
        let var = variance_image(&corpus, &mean, VarianceDivisor::Population).unwrap();
        assert!(bound_images(&mean, &var, -1.0, SpreadMode::Variance).is_err());
    }

    #[test]
    fn identical_images_have_zero_variance() {
        let corpus = corpus_from_pixels(&[[0.3, 0.7, 0.1]; 4]);
        let mean = mean_image(&corpus);
        let var = variance_image(&corpus, &mean, VarianceDivisor::Population).unwrap();
        for p in &var.planes {
            assert!(p.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gray_flattening() {
        let corpus = corpus_from_pixels(&[[1.0, 1.0, 1.0], [0.3, 0.6, 0.9]]);
        let gray = flatten_gray(&corpus);
        assert_eq!(gray[0].get(0, 0), 1.0);
        assert!((gray[1].get(0, 0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn parse_modes() {
        assert_eq!("stddev".parse::<SpreadMode>().unwrap(), SpreadMode::StdDev);
        assert_eq!(
            "sample".parse::<VarianceDivisor>().unwrap(),
            VarianceDivisor::Sample
        );
        assert!("median".parse::<SpreadMode>().is_err());
    }
}
