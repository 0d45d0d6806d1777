#![allow(dead_code)]

use medgnn::graph::Graph;
use medgnn::signal::GraphSignal;
use rand::Rng;

/// Random graph, possibly disconnected, with weights in [0.5, 2).
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64, directed: bool) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || (!directed && b < a) {
                continue;
            }
            if rng.random::<f64>() < p {
                edges.push((a, b, rng.random_range(0.5..2.0)));
            }
        }
    }
    if directed {
        Graph::directed(n, &edges).unwrap()
    } else {
        Graph::undirected(n, &edges).unwrap()
    }
}

/// Values drawn from a small integer grid so that ties actually occur.
pub fn gridded_signal<R: Rng>(rng: &mut R, n: usize, features: usize) -> GraphSignal {
    let data = (0..n * features).map(|_| f64::from(rng.random_range(-4i32..=4))).collect();
    GraphSignal::from_vec(n, features, data).unwrap()
}

pub fn random_signal<R: Rng>(rng: &mut R, n: usize, features: usize) -> GraphSignal {
    let data = (0..n * features).map(|_| rng.random_range(-1.0..1.0)).collect();
    GraphSignal::from_vec(n, features, data).unwrap()
}

/// Boolean pattern of a dense matrix.
pub fn pattern(dense: &[Vec<f64>]) -> Vec<Vec<bool>> {
    dense.iter().map(|r| r.iter().map(|&v| v != 0.0).collect()).collect()
}

pub fn bool_product(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|m| a[i][m] && b[m][j])).collect())
        .collect()
}
