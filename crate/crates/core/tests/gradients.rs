mod common;

use medgnn::backprop::model_backward;
use medgnn::graph::Graph;
use medgnn::harness::gradcheck_trial;
use medgnn::model::{
    loss_and_grad, model_forward, ActivationKind, GnnModel, ModelConfig, ModelOperators, Selection,
    Target,
};
use medgnn::signal::GraphSignal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_signal;

#[test]
fn finite_differences_agree_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for kind in ActivationKind::ALL {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let r = gradcheck_trial(kind, 20, 1e-6, &mut rng).unwrap();
            worst = worst.max(r.max_rel_error);
        }
        assert!(worst <= 1e-5, "{kind}: {worst}");
    }
}

fn small_model(kind: ActivationKind, seed: u64) -> (GnnModel, GraphSignal) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Graph::undirected(
        7,
        &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 0.5), (3, 4, 1.0), (4, 5, 2.0), (5, 6, 1.0), (6, 0, 1.0), (2, 5, 1.0)],
    )
    .unwrap();
    let mut cfg = ModelConfig::single_layer(kind, 3, 3, 2, 4);
    cfg.random_activation_init = true;
    let m = GnnModel::init(&cfg, ModelOperators::from_graph(&g).unwrap(), &mut rng).unwrap();
    let x = random_signal(&mut rng, 7, 1);
    (m, x)
}

#[test]
fn gradients_are_linear_in_the_logit_gradient() {
    for kind in ActivationKind::ALL {
        let (m, x) = small_model(kind, 1);
        let (logits, tape) = model_forward(&m, &x).unwrap();
        let (_, d) = loss_and_grad(&logits, &Target::Class(1)).unwrap();
        let g1 = model_backward(&m, &tape, &d).unwrap();
        let g2 = model_backward(&m, &tape, &d.scaled(2.0)).unwrap();
        for (a, b) in g1.tensors(&m).iter().zip(g2.tensors(&m)) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(2.0 * x, *y);
            }
        }
        let zero = model_backward(&m, &tape, &d.scaled(0.0)).unwrap();
        assert!(zero.tensors(&m).iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }
}

/// Dense assembly of the single-layer closed forms:
/// `d_h[f][k] = d_fᵀ (Σ_k' w_k' P_k') S^k x` and `d_w[k'] = Σ_f d_fᵀ P_k' u_f`,
/// where `d_f` is the readout's gradient with respect to feature `f`.
#[test]
fn single_layer_matches_dense_assembly() {
    for kind in [ActivationKind::Median, ActivationKind::Max] {
        let (m, x) = small_model(kind, 2);
        let n = m.n();
        let (logits, tape) = model_forward(&m, &x).unwrap();
        let (_, d_logits) = loss_and_grad(&logits, &Target::Class(3)).unwrap();
        let grads = model_backward(&m, &tape, &d_logits).unwrap();

        let layer = &m.layers()[0];
        let w = layer.activation.weights().unwrap();
        let lt = &tape.layers[0];
        let Selection::Record(rec) = &lt.selection else { panic!() };
        let f_out = layer.taps.f_out();
        let readout = m.readout();
        let classes = readout.classes();
        // d_feat[i][f] = Σ_c W[c][(i, f)] dJ/dlogit_c
        let d_feat = |i: usize, f: usize| -> f64 {
            (0..classes)
                .map(|c| readout.weights()[c * n * f_out + i * f_out + f] * d_logits.row(0)[c])
                .sum()
        };
        let s = m.operators().conv.to_dense();
        let mut powers = vec![x.as_slice().to_vec()];
        for k in 1..layer.taps.k_taps() {
            let prev = &powers[k - 1];
            powers.push((0..n).map(|i| (0..n).map(|j| s[i][j] * prev[j]).sum()).collect());
        }
        for f in 0..f_out {
            // P_k'[i][j] = 1 iff j realizes node i at hop k'
            let select = |hop: usize, v: &[f64]| -> Vec<f64> {
                (0..n).map(|i| v[rec.realizer(hop, f, i)]).collect()
            };
            for k in 0..layer.taps.k_taps() {
                let mixed: Vec<f64> = (0..=w.max_hop())
                    .map(|hop| select(hop, &powers[k]))
                    .enumerate()
                    .fold(vec![0.0; n], |acc, (hop, z)| {
                        acc.iter().zip(&z).map(|(a, b)| a + w.weight(f, hop) * b).collect()
                    });
                let expect: f64 = (0..n).map(|i| d_feat(i, f) * mixed[i]).sum();
                let got = grads.layers[0].d_taps[layer.taps.index(f, 0, k)];
                assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{kind} f{f} k{k}");
            }
        }
        for hop in 0..=w.max_hop() {
            let expect: f64 = (0..f_out)
                .map(|f| (0..n).map(|i| d_feat(i, f) * lt.pre.get(rec.realizer(hop, f, i), f)).sum::<f64>())
                .sum();
            let got = grads.layers[0].d_activation[w.index(0, hop)];
            assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{kind} hop {hop}");
        }
    }
}

#[test]
fn repeated_backward_is_bitwise_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (m, x) = small_model(ActivationKind::Max, rng.random());
    let (logits, tape) = model_forward(&m, &x).unwrap();
    let (_, d) = loss_and_grad(&logits, &Target::Class(0)).unwrap();
    assert_eq!(model_backward(&m, &tape, &d).unwrap(), model_backward(&m, &tape, &d).unwrap());
}
