use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::CorrelationGraph;

/// One row of the centrality table.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityRecord {
    pub image_id: u32,
    pub degree: usize,
    /// Unnormalized Freeman betweenness, each unordered pair counted once.
    pub betweenness: f64,
    /// `(component order − 1) / Σ distances` within the vertex's component;
    /// zero for a vertex alone in its component.
    pub closeness: f64,
}

// Hop distances and shortest-path counts from one source.
struct Reach {
    dist: Vec<Option<usize>>,
    sigma: Vec<BigInt>,
}

fn bfs(adjacency: &[Vec<usize>], s: usize) -> Reach {
    let n = adjacency.len();
    let mut dist = vec![None; n];
    let mut sigma = vec![BigInt::zero(); n];
    let mut queue = VecDeque::from([s]);
    dist[s] = Some(0);
    sigma[s] = BigInt::from(1);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for &w in &adjacency[v] {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
            if dist[w] == Some(dv + 1) {
                let add = sigma[v].clone();
                sigma[w] += add;
            }
        }
    }
    Reach { dist, sigma }
}

/// Degree, betweenness and within-component closeness for every vertex, in
/// vertex order.
///
/// Betweenness sums the pair dependencies `σ_sv·σ_vt / σ_st` over unordered
/// pairs `{s, t}` with `v` on a geodesic. The sum is carried out in exact
/// rational arithmetic and rounded to `f64` once, so the result does not
/// depend on summation order or thread count.
pub fn centralities(graph: &CorrelationGraph) -> Vec<CentralityRecord> {
    let n = graph.order();
    let adjacency: Vec<Vec<usize>> = (0..n).map(|v| graph.neighbors(v).collect()).collect();
    let reach: Vec<Reach> = (0..n).into_par_iter().map(|s| bfs(&adjacency, s)).collect();

    (0..n)
        .into_par_iter()
        .map(|v| {
            // numerators grouped by their σ_st denominator
            let mut by_denominator: BTreeMap<&BigInt, BigInt> = BTreeMap::new();
            for s in (0..n).filter(|&s| s != v) {
                let Some(dsv) = reach[s].dist[v] else {
                    continue;
                };
                for t in (s + 1..n).filter(|&t| t != v) {
                    let (Some(dvt), Some(dst)) = (reach[v].dist[t], reach[s].dist[t]) else {
                        continue;
                    };
                    if dsv + dvt == dst {
                        let through = &reach[s].sigma[v] * &reach[v].sigma[t];
                        *by_denominator
                            .entry(&reach[s].sigma[t])
                            .or_insert_with(BigInt::zero) += through;
                    }
                }
            }
            let betweenness = by_denominator
                .into_iter()
                .fold(BigRational::zero(), |acc, (den, num)| {
                    acc + BigRational::new(num, den.clone())
                })
                .to_f64()
                .expect("finite betweenness");

            let distances: Vec<usize> = reach[v].dist.iter().flatten().copied().collect();
            let total: usize = distances.iter().sum();
            let closeness = if distances.len() > 1 {
                (distances.len() - 1) as f64 / total as f64
            } else {
                0.0
            };
            CentralityRecord {
                image_id: graph.vertices()[v],
                degree: adjacency[v].len(),
                betweenness,
                closeness,
            }
        })
        .collect()
}
