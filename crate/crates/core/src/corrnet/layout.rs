use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CorrelationGraph;

/// Fixed number of force iterations.
pub const LAYOUT_ITERATIONS: usize = 500;

const INITIAL_TEMPERATURE: f64 = 0.1;
const FRAME: f64 = 1.0;

/// Fruchterman–Reingold placement inside the `[-1, 1]²` frame.
///
/// Initial positions are drawn from a ChaCha stream seeded with `seed`; the
/// temperature cools linearly to zero over [`LAYOUT_ITERATIONS`] steps.
pub fn layout(graph: &CorrelationGraph, seed: u64) -> Vec<[f64; 2]> {
    let n = graph.order();
    match n {
        0 => return Vec::new(),
        1 => return vec![[0.0, 0.0]],
        _ => {}
    }
    let edges = graph.edges();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.gen_range(-FRAME..FRAME), rng.gen_range(-FRAME..FRAME)])
        .collect();
    // ideal edge length for a frame of area 4
    let k = (4.0 / n as f64).sqrt();

    let mut disp = vec![[0.0f64; 2]; n];
    for step in 0..LAYOUT_ITERATIONS {
        disp.iter_mut().for_each(|d| *d = [0.0, 0.0]);
        for v in 0..n {
            for u in v + 1..n {
                let (dx, dy, d) = separation(&pos, v, u);
                let f = k * k / d;
                disp[v][0] += dx / d * f;
                disp[v][1] += dy / d * f;
                disp[u][0] -= dx / d * f;
                disp[u][1] -= dy / d * f;
            }
        }
        for &(v, u) in &edges {
            let (dx, dy, d) = separation(&pos, v, u);
            let f = d * d / k;
            disp[v][0] -= dx / d * f;
            disp[v][1] -= dy / d * f;
            disp[u][0] += dx / d * f;
            disp[u][1] += dy / d * f;
        }
        let temperature = INITIAL_TEMPERATURE * (1.0 - step as f64 / LAYOUT_ITERATIONS as f64);
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len > 0.0 {
                let step = len.min(temperature);
                p[0] = (p[0] + d[0] / len * step).clamp(-FRAME, FRAME);
                p[1] = (p[1] + d[1] / len * step).clamp(-FRAME, FRAME);
            }
        }
    }
    pos
}

/// Lays out each connected component on its own with [`layout`] and tiles
/// the results on a grid, largest component first, so that components do not
/// push each other into the frame corners. Cells are `2` wide and spaced
/// `2 + gap` apart; coordinates are in vertex order.
pub fn component_layout(graph: &CorrelationGraph, seed: u64) -> Vec<[f64; 2]> {
    let mut components = components(graph);
    // stable: equal sizes keep vertex order
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let columns = (components.len() as f64).sqrt().ceil().max(1.0) as usize;
    let pitch = 2.0 * FRAME + COMPONENT_GAP;
    let mut out = vec![[0.0; 2]; graph.order()];
    for (k, members) in components.iter().enumerate() {
        let (row, col) = (k / columns, k % columns);
        let local = fill_frame(layout(&graph.induced(members), seed));
        for (&v, p) in members.iter().zip(local) {
            out[v] = [p[0] + col as f64 * pitch, p[1] - row as f64 * pitch];
        }
    }
    out
}

const COMPONENT_GAP: f64 = 0.5;

// Centers the points and scales them uniformly so the longer side of their
// bounding box spans the frame.
fn fill_frame(mut pos: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pos {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let half = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if half > 0.0 {
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        for p in &mut pos {
            for a in 0..2 {
                p[a] = (p[a] - center[a]) / half * FRAME;
            }
        }
    }
    pos
}

// Vertex indices of each component, each sorted, ordered by smallest member.
fn components(graph: &CorrelationGraph) -> Vec<Vec<usize>> {
    let n = graph.order();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut next = 0;
        while next < members.len() {
            let v = members[next];
            next += 1;
            for u in graph.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    members.push(u);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

// Offset from u to v; coincident points get a deterministic nudge.
fn separation(pos: &[[f64; 2]], v: usize, u: usize) -> (f64, f64, f64) {
    let mut dx = pos[v][0] - pos[u][0];
    let mut dy = pos[v][1] - pos[u][1];
    let mut d = (dx * dx + dy * dy).sqrt();
    if d < 1e-9 {
        dx = 1e-3 * (1 + v) as f64;
        dy = -1e-3 * (1 + u) as f64;
        d = (dx * dx + dy * dy).sqrt();
    }
    (dx, dy, d)
}
