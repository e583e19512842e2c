//! Synthetic graphs with a planted label structure, and BFS edge sampling.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Eabg;
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_u: usize,
    pub num_v: usize,
    pub num_edges: usize,
    pub d: usize,
    pub num_classes: usize,
    /// Probability that an edge takes its U-endpoint's community as label.
    pub structure_signal: f64,
    pub noise: f64,
    pub seed: u64,
}

/// U-node `u` belongs to community `u % num_classes`.
pub fn community_of(u: usize, num_classes: usize) -> usize {
    u % num_classes
}

/// Generates a labeled graph where the shared-U structure carries label
/// information beyond the raw attributes.
///
/// Each edge is labeled with its U-endpoint's community with probability
/// `structure_signal`, otherwise with a uniformly random class. Attributes
/// are `(1 − noise)·onehot(label)` in the first `num_classes` coordinates plus
/// `noise`-scaled standard normal noise in every coordinate. Every node has at
/// least one edge.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Eabg> {
    let SyntheticSpec {
        num_u,
        num_v,
        num_edges,
        d,
        num_classes,
        structure_signal,
        noise,
        seed,
    } = *spec;
    if num_u == 0 || num_v == 0 || num_classes == 0 {
        return Err(Error::Infeasible("node and class counts must be positive".into()));
    }
    if num_edges < num_u.max(num_v) {
        return Err(Error::Infeasible(format!(
            "{num_edges} edges cannot cover {num_u} U-nodes and {num_v} V-nodes"
        )));
    }
    if d < num_classes {
        return Err(Error::Infeasible(format!(
            "attribute dimension {d} is smaller than the class count {num_classes}"
        )));
    }
    if !(0.0..=1.0).contains(&structure_signal) || !(noise >= 0.0) {
        return Err(Error::Infeasible("structure_signal must lie in [0, 1] and noise be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut us: Vec<usize> = (0..num_edges)
        .map(|i| if i < num_u { i } else { rng.random_range(0..num_u) })
        .collect();
    let mut vs: Vec<usize> = (0..num_edges)
        .map(|i| if i < num_v { i } else { rng.random_range(0..num_v) })
        .collect();
    us.shuffle(&mut rng);
    vs.shuffle(&mut rng);
    let edges: Vec<(usize, usize)> = us.into_iter().zip(vs).collect();

    let mut labels = Mat::zeros(num_edges, num_classes);
    let mut attrs = Mat::zeros(num_edges, d);
    for (i, &(u, _)) in edges.iter().enumerate() {
        let class = if rng.random::<f64>() < structure_signal {
            community_of(u, num_classes)
        } else {
            rng.random_range(0..num_classes)
        };
        labels[(i, class)] = 1.0;
        attrs[(i, class)] = 1.0 - noise;
    }
    for x in attrs.iter_mut() {
        let n: f64 = StandardNormal.sample(&mut rng);
        *x += noise * n;
    }
    Eabg::new(num_u, num_v, edges, attrs, Some(labels))
}

/// Edge ids reached by BFS over the edge-adjacency relation (two edges are
/// adjacent when they share an endpoint), starting at `start_edge` and
/// stopping after `max_edges` edges. Neighbors are enqueued in ascending edge
/// id order.
pub fn bfs_edge_order(g: &Eabg, start_edge: usize, max_edges: usize) -> Result<Vec<usize>> {
    if start_edge >= g.num_edges() {
        return Err(Error::param("start_edge", "edge id out of range"));
    }
    if max_edges == 0 {
        return Ok(Vec::new());
    }
    let u_adj = g.u_adjacency();
    let v_adj = g.v_adjacency();
    let mut visited = vec![false; g.num_edges()];
    let mut order = vec![start_edge];
    let mut queue = VecDeque::from([start_edge]);
    visited[start_edge] = true;
    let mut neighbors = Vec::new();
    while let Some(e) = queue.pop_front() {
        if order.len() >= max_edges {
            break;
        }
        let (u, v) = g.edges()[e];
        neighbors.clear();
        neighbors.extend(u_adj[u].iter().chain(&v_adj[v]).copied().filter(|&n| !visited[n]));
        neighbors.sort_unstable();
        neighbors.dedup();
        for &n in &neighbors {
            if order.len() >= max_edges {
                break;
            }
            visited[n] = true;
            order.push(n);
            queue.push_back(n);
        }
    }
    Ok(order)
}

/// The compacted subgraph induced by [`bfs_edge_order`], with attributes and
/// labels carried over. Edges keep their relative id order.
pub fn bfs_sample(g: &Eabg, start_edge: usize, max_edges: usize) -> Result<Eabg> {
    let mut keep = bfs_edge_order(g, start_edge, max_edges.max(1))?;
    keep.sort_unstable();
    g.edge_subgraph(&keep)
}
