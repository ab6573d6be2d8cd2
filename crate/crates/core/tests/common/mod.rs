//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the routines it checks: means and variances are
//! plain loops, eigenvalues come from nalgebra's dense solver, Pearson is
//! the textbook formula, and centralities are obtained by enumerating every
//! simple path.
#![allow(dead_code)]

use eigencorpus::{Channel, CorpusTensor};
use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random corpus with every intensity uniform in [0, 1].
pub fn random_corpus(n: usize, h: usize, w: usize, seed: u64) -> CorpusTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * h * w * 3).map(|_| rng.gen::<f64>()).collect();
    CorpusTensor::from_raw(n, h, w, data).unwrap()
}

/// `[channel][y][x]` mean by naive triple loop.
pub fn naive_mean(corpus: &CorpusTensor) -> Vec<Vec<Vec<f64>>> {
    let n = corpus.len();
    let mut out = vec![vec![vec![0.0; corpus.width()]; corpus.height()]; 3];
    for (c, plane) in out.iter_mut().enumerate() {
        for (y, row) in plane.iter_mut().enumerate() {
            for (x, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..n {
                    s += corpus.get(i, y, x, c);
                }
                *v = s / n as f64;
            }
        }
    }
    out
}

/// Population variance by a two-pass naive loop.
pub fn naive_variance(corpus: &CorpusTensor) -> Vec<Vec<Vec<f64>>> {
    let mean = naive_mean(corpus);
    let n = corpus.len();
    let mut out = mean.clone();
    for c in 0..3 {
        for y in 0..corpus.height() {
            for x in 0..corpus.width() {
                let m = mean[c][y][x];
                let mut s = 0.0;
                for i in 0..n {
                    s += (corpus.get(i, y, x, c) - m).powi(2);
                }
                out[c][y][x] = s / n as f64;
            }
        }
    }
    out
}

/// Raw channel values of one image in row-major order.
pub fn channel_values(corpus: &CorpusTensor, image: usize, channel: Channel) -> Vec<f64> {
    let mut v = Vec::new();
    for y in 0..corpus.height() {
        for x in 0..corpus.width() {
            v.push(match channel.rgb_index() {
                Some(c) => corpus.get(image, y, x, c),
                None => {
                    (corpus.get(image, y, x, 0)
                        + corpus.get(image, y, x, 1)
                        + corpus.get(image, y, x, 2))
                        / 3.0
                }
            });
        }
    }
    v
}

/// Textbook Pearson: Σ(x−x̄)(y−ȳ) / sqrt(Σ(x−x̄)² Σ(y−ȳ)²).
pub fn naive_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma: f64 = a.iter().sum::<f64>() / n;
    let mb: f64 = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    num / (da * db).sqrt()
}

pub fn naive_total_correlation(corpus: &CorpusTensor) -> Vec<Vec<f64>> {
    let n = corpus.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            out[i][j] = Channel::RGB
                .iter()
                .map(|&c| {
                    naive_pearson(&channel_values(corpus, i, c), &channel_values(corpus, j, c))
                })
                .product();
        }
    }
    out
}

/// Between-image covariance of one channel (divisor P − 1), as a dense matrix.
pub fn naive_covariance(corpus: &CorpusTensor, channel: Channel) -> DMatrix<f64> {
    let n = corpus.len();
    let cols: Vec<Vec<f64>> = (0..n).map(|i| channel_values(corpus, i, channel)).collect();
    let p = cols[0].len();
    let means: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().sum::<f64>() / p as f64)
        .collect();
    DMatrix::from_fn(n, n, |a, b| {
        (0..p)
            .map(|k| (cols[a][k] - means[a]) * (cols[b][k] - means[b]))
            .sum::<f64>()
            / (p - 1) as f64
    })
}

/// Eigenvalues of a symmetric matrix, descending, from nalgebra.
pub fn dense_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// All-pairs hop distances by Floyd–Warshall; `None` when unreachable.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = Some(0);
    }
    for &(a, b) in edges {
        d[a][b] = Some(1);
        d[b][a] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(ik), Some(kj)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|ij| ik + kj < ij) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

fn simple_paths(adj: &[Vec<bool>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[Vec<bool>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == t {
            out.push(path.clone());
            return;
        }
        for w in 0..adj.len() {
            if adj[v][w] && !path.contains(&w) {
                path.push(w);
                walk(adj, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(adj, t, &mut vec![s], &mut out);
    out
}

/// Reference centralities: degree, betweenness by enumerating every simple
/// path between each unordered pair and keeping the shortest ones (fractions
/// summed exactly, rounded once), and
/// within-component closeness from Floyd–Warshall distances.
pub struct OracleCentrality {
    pub degree: Vec<usize>,
    pub betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
}

pub fn oracle_centrality(n: usize, edges: &[(usize, usize)]) -> OracleCentrality {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let degree = adj
        .iter()
        .map(|r| r.iter().filter(|&&e| e).count())
        .collect();

    let mut exact = vec![BigRational::zero(); n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = simple_paths(&adj, s, t);
            let Some(shortest) = paths.iter().map(Vec::len).min() else {
                continue;
            };
            let geodesics: Vec<&Vec<usize>> =
                paths.iter().filter(|p| p.len() == shortest).collect();
            for (v, b) in exact.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = geodesics.iter().filter(|p| p.contains(&v)).count();
                *b += BigRational::new(BigInt::from(through), BigInt::from(geodesics.len()));
            }
        }
    }
    let betweenness = exact.iter().map(|b| b.to_f64().unwrap()).collect();

    let dist = floyd_warshall(n, edges);
    let closeness = (0..n)
        .map(|v| {
            let reach: Vec<usize> = dist[v].iter().flatten().copied().collect();
            let total: usize = reach.iter().sum();
            if reach.len() > 1 {
                (reach.len() - 1) as f64 / total as f64
            } else {
                0.0
            }
        })
        .collect();
    OracleCentrality {
        degree,
        betweenness,
        closeness,
    }
}

/// Erdős–Rényi style random graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Number of connected components, by repeated reachability from Floyd–Warshall.
pub fn component_count(n: usize, edges: &[(usize, usize)]) -> usize {
    let d = floyd_warshall(n, edges);
    let mut seen = vec![false; n];
    let mut count = 0;
    for v in 0..n {
        if !seen[v] {
            count += 1;
            for u in 0..n {
                if d[v][u].is_some() {
                    seen[u] = true;
                }
            }
        }
    }
    count
}
