//! Per-channel principal components over an image corpus ("eigenimages").
//!
//! Images are the variables and pixels are the observations: each channel
//! becomes a P×N matrix whose columns are flattened image planes. Columns are
//! centered (not scaled), the N×N between-image covariance is diagonalized,
//! and the centered data projected onto its eigenvectors gives one score
//! vector per component. A score vector reshaped to H×W is an eigenimage.

mod jacobi;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::CorpusTensor;
use crate::plane::{Channel, Plane};

pub use jacobi::{symmetric_eigen, SymmetricEigen};

/// Negative eigenvalues down to this value are treated as round-off and
/// clamped to zero; anything lower is an error.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-12;

/// Relative magnitude window inside which score elements count as tied for
/// the sign convention.
pub const SIGN_TIE_TOLERANCE: f64 = 1e-12;

// Fixed pixel block for covariance accumulation. Partial sums are combined in
// block order, so the result does not depend on the thread count.
const COVARIANCE_BLOCK: usize = 4096;

/// Column-major P×N matrix; column `k` is image `k`'s plane flattened
/// column-major (y varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDataMatrix {
    pub channel: Channel,
    pub height: usize,
    pub width: usize,
    pub image_ids: Vec<u32>,
    values: Vec<f64>,
}

/// Decomposition of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub channel: Channel,
    pub height: usize,
    pub width: usize,
    /// Component variances, descending, non-negative.
    pub eigenvalues: Vec<f64>,
    pub proportions: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Column-major P×N; column `j` is eigenimage `j + 1` in flattening order.
    pub scores: Vec<f64>,
    /// Column-major N×N orthonormal eigenvectors of the covariance.
    pub loadings: Vec<f64>,
}

impl ChannelDataMatrix {
    /// Number of pixel observations (rows).
    pub fn rows(&self) -> usize {
        self.height * self.width
    }

    /// Number of images (columns).
    pub fn cols(&self) -> usize {
        self.image_ids.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        let p = self.rows();
        &self.values[k * p..(k + 1) * p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Column means over pixels. A constant column's mean is its value exactly,
    /// so it centers to exact zeros.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.cols())
            .into_par_iter()
            .map(|k| {
                let col = self.column(k);
                if col.iter().all(|&v| v == col[0]) {
                    col[0]
                } else {
                    col.iter().sum::<f64>() / col.len() as f64
                }
            })
            .collect()
    }

    /// Column-centered copy, same layout.
    pub fn centered(&self) -> Vec<f64> {
        let means = self.column_means();
        let p = self.rows();
        let mut out = self.values.clone();
        out.par_chunks_mut(p)
            .zip(means.par_iter())
            .for_each(|(col, &m)| col.iter_mut().for_each(|v| *v -= m));
        out
    }
}

impl EigenDecomposition {
    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Score column `j` (0-based).
    pub fn score_column(&self, j: usize) -> &[f64] {
        let p = self.pixels();
        &self.scores[j * p..(j + 1) * p]
    }

    /// Loading column `j` (0-based).
    pub fn loading_column(&self, j: usize) -> &[f64] {
        let n = self.components();
        &self.loadings[j * n..(j + 1) * n]
    }
}

/// Flattens a plane column by column (index `x * height + y`).
pub fn flatten_column_major(plane: &Plane) -> Vec<f64> {
    let (h, w) = (plane.height(), plane.width());
    let mut out = Vec::with_capacity(h * w);
    for x in 0..w {
        for y in 0..h {
            out.push(plane.get(y, x));
        }
    }
    out
}

/// Inverse of [`flatten_column_major`].
pub fn reshape_column_major(values: &[f64], height: usize, width: usize) -> Result<Plane> {
    if values.len() != height * width {
        return Err(Error::DimensionMismatch(format!(
            "{} values cannot fill a {width}x{height} plane",
            values.len()
        )));
    }
    let mut plane = Plane::filled(width, height, 0.0);
    for x in 0..width {
        for y in 0..height {
            plane.set(y, x, values[x * height + y]);
        }
    }
    Ok(plane)
}

pub fn build_channel_matrix(corpus: &CorpusTensor, channel: Channel) -> ChannelDataMatrix {
    let columns: Vec<Vec<f64>> = (0..corpus.len())
        .into_par_iter()
        .map(|i| flatten_column_major(&corpus.channel_plane(i, channel)))
        .collect();
    ChannelDataMatrix {
        channel,
        height: corpus.height(),
        width: corpus.width(),
        image_ids: corpus.image_ids().to_vec(),
        values: columns.concat(),
    }
}

/// Builds a matrix directly from per-image planes (all the same shape).
pub fn matrix_from_planes(planes: &[Plane], channel: Channel) -> Result<ChannelDataMatrix> {
    let first = planes.first().ok_or(Error::InsufficientImages {
        needed: 2,
        found: 0,
    })?;
    if planes.iter().any(|p| !p.same_shape(first)) {
        return Err(Error::DimensionMismatch("planes differ in shape".into()));
    }
    Ok(ChannelDataMatrix {
        channel,
        height: first.height(),
        width: first.width(),
        image_ids: (1..=planes.len() as u32).collect(),
        values: planes.iter().flat_map(flatten_column_major).collect(),
    })
}

/// N×N covariance of the centered columns, divisor P − 1, row-major.
pub fn covariance(centered: &[f64], p: usize, n: usize) -> Vec<f64> {
    let blocks = p.div_ceil(COVARIANCE_BLOCK);
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * COVARIANCE_BLOCK;
            let hi = (lo + COVARIANCE_BLOCK).min(p);
            let mut acc = vec![0.0; n * n];
            for a in 0..n {
                let ca = &centered[a * p + lo..a * p + hi];
                for c in a..n {
                    let cc = &centered[c * p + lo..c * p + hi];
                    acc[a * n + c] = ca.iter().zip(cc).map(|(x, y)| x * y).sum();
                }
            }
            acc
        })
        .collect();
    let mut cov = vec![0.0; n * n];
    for part in &partials {
        for (dst, src) in cov.iter_mut().zip(part) {
            *dst += src;
        }
    }
    let denom = (p - 1) as f64;
    for a in 0..n {
        for c in a..n {
            let v = cov[a * n + c] / denom;
            cov[a * n + c] = v;
            cov[c * n + a] = v;
        }
    }
    cov
}

pub fn decompose(matrix: &ChannelDataMatrix) -> Result<EigenDecomposition> {
    let (p, n) = (matrix.rows(), matrix.cols());
    if n < 2 {
        return Err(Error::InsufficientImages {
            needed: 2,
            found: n,
        });
    }
    if p < n {
        return Err(Error::InvalidParameter(format!(
            "need at least as many pixels as images ({p} < {n})"
        )));
    }

    let centered = matrix.centered();
    let cov = covariance(&centered, p, n);
    let trace: f64 = (0..n).map(|i| cov[i * n + i]).sum();
    if trace == 0.0 {
        return Err(Error::DegenerateCorpus {
            channel: matrix.channel.to_string(),
        });
    }

    let SymmetricEigen {
        values,
        vectors: mut loadings,
    } = symmetric_eigen(&cov, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (index, &value) in values.iter().enumerate() {
        if value < -NEGATIVE_EIGENVALUE_TOLERANCE {
            return Err(Error::NegativeEigenvalue {
                index: index + 1,
                value,
            });
        }
        eigenvalues.push(value.max(0.0));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateCorpus {
            channel: matrix.channel.to_string(),
        });
    }

    let mut scores: Vec<f64> = vec![0.0; p * n];
    scores
        .par_chunks_mut(p)
        .zip(loadings.par_chunks_mut(n))
        .for_each(|(score, loading)| {
            for (a, &weight) in loading.iter().enumerate() {
                let column = &centered[a * p..(a + 1) * p];
                for (s, &v) in score.iter_mut().zip(column) {
                    *s += weight * v;
                }
            }
            if score[sign_pivot(score)] < 0.0 {
                score.iter_mut().for_each(|s| *s = -*s);
                loading.iter_mut().for_each(|l| *l = -*l);
            }
        });

    let proportions: Vec<f64> = eigenvalues.iter().map(|v| v / total).collect();
    let cumulative = running_sum(&proportions);
    Ok(EigenDecomposition {
        channel: matrix.channel,
        height: matrix.height,
        width: matrix.width,
        eigenvalues,
        proportions,
        cumulative,
        scores,
        loadings,
    })
}

/// Index whose sign is made positive: the element of largest magnitude, where
/// magnitudes within a relative `SIGN_TIE_TOLERANCE` of the maximum tie and the
/// last tied index wins.
fn sign_pivot(score: &[f64]) -> usize {
    let max = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let floor = max * (1.0 - SIGN_TIE_TOLERANCE);
    score.iter().rposition(|s| s.abs() >= floor).unwrap_or(0)
}

fn running_sum(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Running sum of the variance proportions.
pub fn cumulative_variance(decomp: &EigenDecomposition) -> Vec<f64> {
    running_sum(&decomp.proportions)
}

/// Score column `k` (1-based) reshaped to the image plane.
pub fn eigenimage(decomp: &EigenDecomposition, k: usize) -> Result<Plane> {
    let len = decomp.components();
    if k == 0 || k > len {
        return Err(Error::IndexOutOfRange { index: k, len });
    }
    reshape_column_major(decomp.score_column(k - 1), decomp.height, decomp.width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_major_flattening_of_2x2() {
        // rows y, cols x: [[a, b], [c, d]]
        let plane = Plane::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let flat = flatten_column_major(&plane);
        assert_eq!(flat, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(reshape_column_major(&flat, 2, 2).unwrap(), plane);
    }

    #[test]
    fn reshape_rejects_wrong_length() {
        assert!(reshape_column_major(&[1.0, 2.0, 3.0], 2, 2).is_err());
    }

    fn two_pixel_pair() -> ChannelDataMatrix {
        let a = Plane::new(1, 2, vec![0.0, 1.0]).unwrap();
        let b = Plane::new(1, 2, vec![1.0, 0.0]).unwrap();
        matrix_from_planes(&[a, b], Channel::Red).unwrap()
    }

    #[test]
    fn two_pixel_worked_example() {
        let d = decompose(&two_pixel_pair()).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!(d.eigenvalues[1].abs() < 1e-12);
        assert!((d.proportions[0] - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let img = eigenimage(&d, 1).unwrap();
        assert!((img.get(0, 0) + h).abs() < 1e-12);
        assert!((img.get(1, 0) - h).abs() < 1e-12);
    }

    #[test]
    fn sign_pivot_prefers_last_tie() {
        assert_eq!(sign_pivot(&[-0.5, 0.5]), 1);
        assert_eq!(sign_pivot(&[-0.9, 0.5, 0.1]), 0);
        assert_eq!(sign_pivot(&[0.0, 0.0]), 1);
    }

    #[test]
    fn eigenimage_bounds() {
        let d = decompose(&two_pixel_pair()).unwrap();
        assert!(matches!(
            eigenimage(&d, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 2 })
        ));
        assert!(eigenimage(&d, 0).is_err());
    }

    #[test]
    fn constant_images_are_degenerate() {
        let a = Plane::filled(2, 2, 0.3);
        let b = Plane::filled(2, 2, 0.7);
        let m = matrix_from_planes(&[a, b], Channel::Gray).unwrap();
        assert!(matches!(decompose(&m), Err(Error::DegenerateCorpus { .. })));
    }

    #[test]
    fn cumulative_from_proportions() {
        let mut d = decompose(&two_pixel_pair()).unwrap();
        assert_eq!(cumulative_variance(&d), vec![1.0, 1.0]);
        d.proportions = vec![0.4, 0.35, 0.25];
        let c = cumulative_variance(&d);
        assert!((c[1] - 0.75).abs() < 1e-15);
        assert!((c[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_pixels_rejected() {
        let planes: Vec<Plane> = (0..3)
            .map(|i| Plane::new(1, 2, vec![i as f64 * 0.1, 0.5]).unwrap())
            .collect();
        let m = matrix_from_planes(&planes, Channel::Red).unwrap();
        assert!(matches!(decompose(&m), Err(Error::InvalidParameter(_))));
    }
}
