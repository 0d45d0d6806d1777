//! Randomized property trials and the activation benchmark.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generators::gen_er_graph;
use crate::error::{Error, Result};
use crate::filters::local_activation_forward;
use crate::gradcheck::{finite_difference_check, FdReport};
use crate::graph::{
    build_shift_operator, neighborhoods, permute_signal, Graph, Permutation, ShiftVariant,
};
use crate::model::{
    model_forward, Activation, ActivationKind, GnnModel, LayerConfig, ModelConfig,
    ModelOperators, ReadoutKind, Selection, Target,
};
use crate::signal::GraphSignal;

/// Small random architecture: up to `max_layers` layers of up to
/// `max_features` features, 1–3 taps, 1–2 hops, random activation weights.
pub fn random_model_config<R: Rng + ?Sized>(
    kind: ActivationKind,
    max_layers: usize,
    max_features: usize,
    readout: ReadoutKind,
    rng: &mut R,
) -> ModelConfig {
    let layers = (0..rng.random_range(1..=max_layers))
        .map(|_| LayerConfig {
            features: rng.random_range(1..=max_features),
            taps: rng.random_range(1..=3),
            activation: kind,
            hops: rng.random_range(1..=2),
        })
        .collect();
    ModelConfig {
        input_features: rng.random_range(1..=max_features),
        layers,
        readout,
        classes: rng.random_range(2..=3),
        shared_activation: rng.random(),
        random_activation_init: true,
    }
}

fn random_signal<R: Rng + ?Sized>(n: usize, features: usize, rng: &mut R) -> GraphSignal {
    let data = (0..n * features).map(|_| rng.random_range(-1.0..1.0)).collect();
    GraphSignal::from_vec(n, features, data).expect("sizes agree")
}

fn random_graph<R: Rng + ?Sized>(min_n: usize, max_n: usize, rng: &mut R) -> Result<Graph> {
    let n = rng.random_range(min_n..=max_n);
    gen_er_graph(n, rng.random_range(0.15..0.5), rng.random())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub n: usize,
    pub layers: usize,
    /// Largest deviation between the activation of permuted pre-activations
    /// and the permuted activation, over all layers.
    pub selection_deviation: f64,
    /// Largest deviation between `Φ(Pᵀx; PᵀSP)` and `PᵀΦ(x; S)` over the
    /// final features and per-node logits.
    pub end_to_end_deviation: f64,
}

/// One random relabeling trial on a graph with at most `max_n` nodes.
pub fn invariance_trial<R: Rng + ?Sized>(
    kind: ActivationKind,
    max_n: usize,
    rng: &mut R,
) -> Result<InvarianceReport> {
    let graph = random_graph(3, max_n, rng)?;
    let n = graph.n();
    let cfg = random_model_config(kind, 2, 4, ReadoutKind::PerNode, rng);
    let m = GnnModel::init(&cfg, ModelOperators::from_graph(&graph)?, rng)?;
    let x = random_signal(n, cfg.input_features, rng);
    let p = Permutation::random(n, rng);
    let mp = m.permuted(&p)?;
    let xp = permute_signal(&x, &p)?;

    let (logits, tape) = model_forward(&m, &x)?;
    let (logits_p, tape_p) = model_forward(&mp, &xp)?;

    let mut selection_deviation: f64 = 0.0;
    for (l, lt) in tape.layers.iter().enumerate() {
        let pre_p = permute_signal(&lt.pre, &p)?;
        let post_p = match (&m.layers()[l].activation, &lt.selection) {
            (Activation::Relu, Selection::Mask(_)) => crate::filters::relu_forward(&pre_p).0,
            (Activation::Local { kind, weights }, Selection::Record(_)) => {
                let table = mp.hoods(l).expect("local layer has a table");
                local_activation_forward(*kind, weights, table, &pre_p)?.0
            }
            _ => unreachable!("tape matches model"),
        };
        let expected = permute_signal(&lt.post, &p)?;
        selection_deviation = selection_deviation.max(diff(&post_p, &expected)?);
    }

    let features_p = permute_signal(tape.features(), &p)?;
    let mut end_to_end_deviation = diff(tape_p.features(), &features_p)?;
    let as_signal = |l: &crate::model::Logits| {
        GraphSignal::from_vec(l.rows(), l.classes(), l.as_slice().to_vec())
    };
    let logits_moved = permute_signal(&as_signal(&logits)?, &p)?;
    end_to_end_deviation = end_to_end_deviation.max(diff(&as_signal(&logits_p)?, &logits_moved)?);
    Ok(InvarianceReport {
        n,
        layers: cfg.layers.len(),
        selection_deviation,
        end_to_end_deviation,
    })
}

fn diff(a: &GraphSignal, b: &GraphSignal) -> Result<f64> {
    a.max_abs_diff(b)
        .ok_or_else(|| Error::DimensionMismatch("signals differ in shape".into()))
}

/// Finite-difference check of a random instance with at most `max_n` nodes,
/// redrawing instances that sit near a tie or ReLU kink.
pub fn gradcheck_trial<R: Rng + ?Sized>(
    kind: ActivationKind,
    max_n: usize,
    step: f64,
    rng: &mut R,
) -> Result<FdReport> {
    const ATTEMPTS: usize = 100;
    for _ in 0..ATTEMPTS {
        let graph = random_graph(3, max_n, rng)?;
        let cfg = random_model_config(kind, 2, 3, ReadoutKind::PerGraph, rng);
        let m = GnnModel::init(&cfg, ModelOperators::from_graph(&graph)?, rng)?;
        let x = random_signal(graph.n(), cfg.input_features, rng);
        let target = Target::Class(rng.random_range(0..cfg.classes));
        match finite_difference_check(&m, &x, &target, step) {
            Err(Error::Tie { .. } | Error::ReluKink { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::RetriesExhausted(ATTEMPTS))
}

/// Connected graph with every degree at most `degree`: a cycle plus random
/// chords added while both endpoints have room.
pub fn gen_degree_capped_graph(n: usize, degree: usize, seed: u64) -> Result<Graph> {
    if n < 3 || degree < 2 {
        return Err(Error::InvalidParameter(format!(
            "degree-capped graph needs n >= 3 and degree >= 2, got {n} and {degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deg = vec![2usize; n];
    let mut present = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        present.insert((i.min(j), i.max(j)));
        pairs.push((i, j, 1.0));
    }
    for _ in 0..n * degree * 4 {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let key = (a.min(b), a.max(b));
        if a == b || deg[a] >= degree || deg[b] >= degree || present.contains(&key) {
            continue;
        }
        present.insert(key);
        deg[a] += 1;
        deg[b] += 1;
        pairs.push((a, b, 1.0));
    }
    Graph::undirected(n, &pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchResult {
    pub n: usize,
    pub nnz: usize,
    /// Median wall time of one activation forward pass.
    pub per_call: Duration,
}

/// Times `local_activation_forward` on a degree-capped graph with
/// `features` random feature columns; neighborhood tables are built once,
/// outside the timed region.
pub fn bench_activation_forward(
    kind: ActivationKind,
    n: usize,
    degree: usize,
    hops: usize,
    features: usize,
    reps: usize,
    seed: u64,
) -> Result<BenchResult> {
    let rank = kind
        .rank()
        .ok_or_else(|| Error::InvalidParameter("benchmark needs median or max".into()))?;
    let graph = gen_degree_capped_graph(n, degree, seed)?;
    let s = build_shift_operator(&graph, ShiftVariant::SelfLoopAdjacency)?;
    let table = neighborhoods(&s, hops);
    let w = crate::filters::ActivationWeights::identity(hops, true, features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_signal(n, features, &mut rng);
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let out = local_activation_forward(rank, &w, &table, &u)?;
        times.push(start.elapsed());
        std::hint::black_box(out);
    }
    times.sort_unstable();
    Ok(BenchResult {
        n,
        nnz: s.nnz(),
        per_call: times[times.len() / 2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capped_graph_respects_cap() {
        let g = gen_degree_capped_graph(200, 6, 1).unwrap();
        assert!(g.is_connected());
        assert!(g.max_degree() <= 6);
        assert!(g.mean_degree() > 5.0);
    }

    #[test]
    fn invariance_trial_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in ActivationKind::ALL {
            let r = invariance_trial(kind, 12, &mut rng).unwrap();
            assert_eq!(r.selection_deviation, 0.0);
            assert!(r.end_to_end_deviation <= 1e-9);
        }
    }

    #[test]
    fn gradcheck_trial_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in ActivationKind::ALL {
            let r = gradcheck_trial(kind, 8, 1e-6, &mut rng).unwrap();
            assert!(r.max_rel_error <= 1e-5, "{kind}: {r:?}");
        }
    }

    #[test]
    fn bench_rejects_relu() {
        assert!(bench_activation_forward(ActivationKind::Relu, 10, 4, 1, 1, 1, 0).is_err());
        let b = bench_activation_forward(ActivationKind::Max, 50, 4, 1, 2, 3, 0).unwrap();
        assert_eq!(b.n, 50);
    }
}
