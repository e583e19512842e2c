#![allow(dead_code)]

use eagle_core::{Eabg, Mat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random graph on `num_u × num_v` nodes with every node covered and
/// `extra` further edges (parallel edges allowed).
pub fn random_graph(num_u: usize, num_v: usize, extra: usize, d: usize, seed: u64) -> Eabg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = num_u.max(num_v);
    let mut edges: Vec<(usize, usize)> = (0..base).map(|i| (i % num_u, i % num_v)).collect();
    for _ in 0..extra {
        edges.push((rng.random_range(0..num_u), rng.random_range(0..num_v)));
    }
    let attrs = random_matrix(edges.len(), d, &mut rng);
    Eabg::new(num_u, num_v, edges, attrs, None).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn graph_strategy(max_nodes: usize, max_extra: usize) -> impl Strategy<Value = Eabg> {
    (1..=max_nodes, 1..=max_nodes, 0..=max_extra, any::<u64>())
        .prop_map(|(u, v, extra, seed)| random_graph(u, v, extra, 3, seed))
}

pub fn spectral_norm(m: &Mat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}
