use std::collections::VecDeque;

use super::CorrelationGraph;

/// Connected components and cut edges, both expressed as image labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentReport {
    /// Each component's labels in vertex order; components ordered by their
    /// first vertex.
    pub components: Vec<Vec<u32>>,
    /// Bridges as `(a, b)` label pairs in vertex order, sorted.
    pub bridges: Vec<(u32, u32)>,
}

pub fn bridges_and_components(graph: &CorrelationGraph) -> ComponentReport {
    let n = graph.order();
    let adjacency: Vec<Vec<usize>> = (0..n).map(|v| graph.neighbors(v).collect()).collect();
    let label = |v: usize| graph.vertices()[v];

    let mut component_of = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component_of[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if component_of[w] == usize::MAX {
                    component_of[w] = id;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    // Iterative lowpoint DFS. Simple graph, so skipping the parent vertex once
    // is enough to ignore the tree edge.
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut bridges = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (vertex, parent, next neighbor index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(frame) = stack.last_mut() {
            let (v, parent, next) = *frame;
            if let Some(&w) = adjacency[v].get(next) {
                frame.2 += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, v, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        let (a, b) = if parent < v { (parent, v) } else { (v, parent) };
                        bridges.push((a, b));
                    }
                }
            }
        }
    }
    bridges.sort_unstable();

    ComponentReport {
        components: components
            .into_iter()
            .map(|c| c.into_iter().map(label).collect())
            .collect(),
        bridges: bridges
            .into_iter()
            .map(|(a, b)| (label(a), label(b)))
            .collect(),
    }
}
