use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_shift_operator, shift_column, Graph, ShiftOperator, ShiftVariant};
use crate::model::Target;
use crate::optim::{Dataset, Sample};
use crate::signal::GraphSignal;

/// Attempts at drawing a connected graph before giving up.
pub const MAX_RETRIES: usize = 1000;

/// Erdős–Rényi graph with unit weights, redrawn from a fresh stream of the
/// same seed until connected.
pub fn gen_er_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("ER graph needs n >= 2, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("edge probability {p} not in (0, 1)")));
    }
    retry_connected(seed, |rng| {
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < p {
                    pairs.push((a, b, 1.0));
                }
            }
        }
        Graph::undirected(n, &pairs)
    })
}

/// `n` points uniform on the unit square.
pub fn uniform_points<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(f64, f64)> {
    (0..n).map(|_| (rng.random(), rng.random())).collect()
}

/// Unit-weight edge between every pair closer than `radius`.
pub fn geometric_graph_from_points(points: &[(f64, f64)], radius: f64) -> Result<Graph> {
    let mut pairs = Vec::new();
    for (a, &(xa, ya)) in points.iter().enumerate() {
        for (b, &(xb, yb)) in points.iter().enumerate().skip(a + 1) {
            if (xa - xb).hypot(ya - yb) < radius {
                pairs.push((a, b, 1.0));
            }
        }
    }
    Graph::undirected(points.len(), &pairs)
}

/// Random geometric graph on the unit square, redrawn until connected.
pub fn gen_geometric_graph(n: usize, radius: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("geometric graph needs n >= 2, got {n}")));
    }
    if !(radius > 0.0 && radius <= std::f64::consts::SQRT_2) {
        return Err(Error::InvalidParameter(format!("radius {radius} not in (0, sqrt 2]")));
    }
    retry_connected(seed, |rng| {
        geometric_graph_from_points(&uniform_points(n, rng), radius)
    })
}

fn retry_connected(seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> Result<Graph>) -> Result<Graph> {
    for attempt in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let g = draw(&mut rng)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::RetriesExhausted(MAX_RETRIES))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Diffusion source-localization data: `x = W^t e_{s_c}` labeled by `c`.
#[derive(Debug, Clone)]
pub struct SourceLocDataset {
    pub graph: Graph,
    /// Diffusion operator, the spectrally rescaled weighted adjacency.
    pub diffusion: ShiftOperator,
    /// `sources[c]` is the node seeding class `c`.
    pub sources: Vec<usize>,
    pub t_max: usize,
    pub data: Dataset,
    /// Diffusion time of every sample, split by split in train, val, test order.
    pub times: Vec<usize>,
}

pub fn gen_source_localization(
    graph: &Graph,
    classes: usize,
    sizes: SplitSizes,
    t_max: usize,
    seed: u64,
) -> Result<SourceLocDataset> {
    let n = graph.n();
    if classes == 0 || classes > n {
        return Err(Error::InvalidParameter(format!(
            "{classes} classes on a graph with {n} nodes"
        )));
    }
    let w = build_shift_operator(graph, ShiftVariant::RescaledWeightedAdjacency)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = sample(&mut rng, n, classes).into_vec();

    // states[c][t] = W^t e_{sources[c]}
    let states: Vec<Vec<Vec<f64>>> = sources
        .iter()
        .map(|&s| {
            let mut x = vec![0.0; n];
            x[s] = 1.0;
            let mut seq = Vec::with_capacity(t_max + 1);
            for _ in 0..t_max {
                let mut next = vec![0.0; n];
                shift_column(&w, &x, &mut next);
                seq.push(std::mem::replace(&mut x, next));
            }
            seq.push(x);
            seq
        })
        .collect();

    let mut times = Vec::with_capacity(sizes.train + sizes.val + sizes.test);
    let mut draw = |count: usize| -> Vec<Sample> {
        (0..count)
            .map(|_| {
                let c = rng.random_range(0..classes);
                let t = rng.random_range(0..=t_max);
                times.push(t);
                Sample {
                    x: GraphSignal::from_column(states[c][t].clone()),
                    target: Target::Class(c),
                }
            })
            .collect()
    };
    let train = draw(sizes.train);
    let val = draw(sizes.val);
    let test = draw(sizes.test);
    Ok(SourceLocDataset {
        graph: graph.clone(),
        diffusion: w,
        sources,
        t_max,
        data: Dataset { train, val, test },
        times,
    })
}
