mod common;

use medgnn::graph::{permute_signal, Permutation};
use medgnn::harness::{gen_er_graph, invariance_trial};
use medgnn::model::{
    model_forward, parse_checkpoint, ActivationKind, Checkpoint, GnnModel, ModelConfig,
    ModelOperators,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_signal;

#[test]
fn per_node_outputs_follow_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for kind in ActivationKind::ALL {
        for _ in 0..25 {
            let r = invariance_trial(kind, 30, &mut rng).unwrap();
            assert_eq!(r.selection_deviation, 0.0, "{kind}");
            assert!(r.end_to_end_deviation <= 1e-9, "{kind}: {}", r.end_to_end_deviation);
        }
    }
}

#[test]
fn per_graph_logits_are_invariant_with_permuted_readout() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in ActivationKind::ALL {
        let g = gen_er_graph(20, 0.3, 4).unwrap();
        let cfg = ModelConfig::single_layer(kind, 4, 3, 2, 5);
        let m = GnnModel::init(&cfg, ModelOperators::from_graph(&g).unwrap(), &mut rng).unwrap();
        let p = Permutation::random(20, &mut rng);
        let mp = m.permuted(&p).unwrap();
        let x = random_signal(&mut rng, 20, 1);
        let (a, _) = model_forward(&m, &x).unwrap();
        let (b, _) = model_forward(&mp, &permute_signal(&x, &p).unwrap()).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() <= 1e-9);
        }
    }
}

#[test]
fn checkpoint_restores_the_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = gen_er_graph(15, 0.3, 2).unwrap();
    for kind in ActivationKind::ALL {
        let mut cfg = ModelConfig::single_layer(kind, 3, 4, 2, 3);
        cfg.random_activation_init = true;
        cfg.shared_activation = false;
        let m = GnnModel::init(&cfg, ModelOperators::from_graph(&g).unwrap(), &mut rng).unwrap();
        let text = Checkpoint::from_model(&m).to_text();
        let restored = parse_checkpoint(&text).unwrap().into_model(&g).unwrap();
        assert_eq!(restored, m);
        let x = random_signal(&mut rng, 15, 1);
        assert_eq!(model_forward(&m, &x).unwrap(), model_forward(&restored, &x).unwrap());
    }
}

#[test]
fn forward_is_deterministic() {
    let g = gen_er_graph(25, 0.2, 7).unwrap();
    let cfg = ModelConfig::single_layer(ActivationKind::Median, 8, 5, 1, 10);
    let build = || {
        GnnModel::init(
            &cfg,
            ModelOperators::from_graph(&g).unwrap(),
            &mut ChaCha8Rng::seed_from_u64(99),
        )
        .unwrap()
    };
    let (a, b) = (build(), build());
    assert_eq!(a, b);
    let x = random_signal(&mut ChaCha8Rng::seed_from_u64(1), 25, 1);
    assert_eq!(model_forward(&a, &x).unwrap(), model_forward(&b, &x).unwrap());
}
