//! Total-correlation network between images.
//!
//! Two images are compared channel by channel with Pearson correlation over
//! all pixels; the three coefficients are multiplied into a single "total
//! correlation". Thresholding that matrix gives an undirected simple graph.

mod bridges;
mod centrality;
mod layout;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::CorpusTensor;
use crate::plane::Channel;

pub use bridges::{bridges_and_components, ComponentReport};
pub use centrality::{centralities, CentralityRecord};
pub use layout::{component_layout, layout, LAYOUT_ITERATIONS};

/// `0.3³` evaluated in double precision.
pub const DEFAULT_THRESHOLD: f64 = 0.3 * 0.3 * 0.3;

/// Symmetric N×N matrix of per-channel correlation products, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalCorrelationMatrix {
    n: usize,
    values: Vec<f64>,
    image_ids: Vec<u32>,
}

impl TotalCorrelationMatrix {
    /// Wraps a row-major matrix. The diagonal is forced to zero and the matrix
    /// must be symmetric within 1e-12.
    pub fn new(n: usize, mut values: Vec<f64>, image_ids: Vec<u32>) -> Result<Self> {
        if values.len() != n * n || image_ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} values and {} labels for an {n}x{n} matrix",
                values.len(),
                image_ids.len()
            )));
        }
        for i in 0..n {
            values[i * n + i] = 0.0;
            for j in i + 1..n {
                if (values[i * n + j] - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            n,
            values,
            image_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn image_ids(&self) -> &[u32] {
        &self.image_ids
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Pearson correlation of two equally long samples. `None` when either sample
/// has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "samples differ in length");
    if is_constant(a) || is_constant(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

// Tested on the raw values: the mean of equal values need not round back to
// that value, so a constant sample can center to tiny non-zero residuals.
fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|&v| v == values[0])
}

// Centered channel vector and its norm, shared across all pairs.
struct CenteredChannel {
    values: Vec<f64>,
    norm: f64,
    constant: bool,
}

fn centered_channel(corpus: &CorpusTensor, image: usize, c: usize) -> CenteredChannel {
    let px = corpus.image(image);
    let raw: Vec<f64> = px.chunks_exact(3).map(|p| p[c]).collect();
    let constant = is_constant(&raw);
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let values: Vec<f64> = raw.into_iter().map(|v| v - mean).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    CenteredChannel {
        values,
        norm,
        constant,
    }
}

/// Product of red, green and blue Pearson correlations for every image pair.
pub fn total_correlation(corpus: &CorpusTensor) -> Result<TotalCorrelationMatrix> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::InsufficientImages {
            needed: 2,
            found: n,
        });
    }
    let mut product = vec![1.0; n * n];
    for (c, channel) in Channel::RGB.iter().enumerate() {
        let centered: Vec<CenteredChannel> = (0..n)
            .into_par_iter()
            .map(|i| centered_channel(corpus, i, c))
            .collect();
        if let Some(i) = centered.iter().position(|cc| cc.constant || cc.norm == 0.0) {
            return Err(Error::ConstantChannel {
                image_id: corpus.image_ids()[i],
                channel: channel.to_string(),
            });
        }
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let r: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let (a, b) = (&centered[i], &centered[j]);
                let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
                (dot / (a.norm * b.norm)).clamp(-1.0, 1.0)
            })
            .collect();
        for (&(i, j), r) in pairs.iter().zip(r) {
            product[i * n + j] *= r;
            product[j * n + i] *= r;
        }
    }
    for i in 0..n {
        product[i * n + i] = 0.0;
    }
    Ok(TotalCorrelationMatrix {
        n,
        values: product,
        image_ids: corpus.image_ids().to_vec(),
    })
}

/// Undirected simple graph over a subset of images.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    vertices: Vec<u32>,
    adjacency: Vec<bool>,
    pub threshold: f64,
}

impl CorrelationGraph {
    /// Builds a graph from image labels and an edge list of vertex positions.
    pub fn from_edges(
        vertices: Vec<u32>,
        edges: &[(usize, usize)],
        threshold: f64,
    ) -> Result<Self> {
        let k = vertices.len();
        let mut adjacency = vec![false; k * k];
        for &(a, b) in edges {
            if a >= k || b >= k || a == b {
                return Err(Error::InvalidParameter(format!(
                    "invalid edge ({a}, {b}) for {k} vertices"
                )));
            }
            adjacency[a * k + b] = true;
            adjacency[b * k + a] = true;
        }
        Ok(Self {
            vertices,
            adjacency,
            threshold,
        })
    }

    /// Image labels of the vertices, in vertex order.
    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn order(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.order() + b]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let k = self.order();
        (0..k).filter(move |&u| self.adjacency[v * k + u])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    /// Edges as vertex-position pairs `(a, b)` with `a < b`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let k = self.order();
        (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .filter(|&(a, b)| self.has_edge(a, b))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Position of an image label among the vertices.
    pub fn position(&self, image_id: u32) -> Option<usize> {
        self.vertices.iter().position(|&v| v == image_id)
    }

    /// Induced subgraph on the given vertex positions (kept in given order).
    pub fn induced(&self, keep: &[usize]) -> CorrelationGraph {
        let k = keep.len();
        let mut adjacency = vec![false; k * k];
        for (a, &va) in keep.iter().enumerate() {
            for (b, &vb) in keep.iter().enumerate() {
                adjacency[a * k + b] = self.has_edge(va, vb);
            }
        }
        CorrelationGraph {
            vertices: keep.iter().map(|&v| self.vertices[v]).collect(),
            adjacency,
            threshold: self.threshold,
        }
    }
}

/// Edge `(i, j)` for `i ≠ j` iff `totcor[i][j] >= threshold`.
pub fn threshold_graph(
    totcor: &TotalCorrelationMatrix,
    threshold: f64,
) -> Result<CorrelationGraph> {
    if !threshold.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    let n = totcor.len();
    let mut adjacency = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            adjacency[i * n + j] = i != j && totcor.get(i, j) >= threshold;
        }
    }
    Ok(CorrelationGraph {
        vertices: totcor.image_ids().to_vec(),
        adjacency,
        threshold,
    })
}

/// Drops degree-0 vertices, returning the remaining graph and the dropped labels.
pub fn remove_isolates(graph: &CorrelationGraph) -> (CorrelationGraph, Vec<u32>) {
    let (keep, isolated): (Vec<usize>, Vec<usize>) =
        (0..graph.order()).partition(|&v| graph.degree(v) > 0);
    let isolates = isolated.iter().map(|&v| graph.vertices[v]).collect();
    (graph.induced(&keep), isolates)
}
