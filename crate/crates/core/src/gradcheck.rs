//! Central finite-difference check of [`model_backward`](crate::backprop::model_backward).

use crate::backprop::model_backward;
use crate::error::{Error, Result};
use crate::model::{loss_and_grad, model_forward, ForwardTape, GnnModel, Selection, Target};
use crate::signal::GraphSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    /// Worst `|analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.
    pub max_rel_error: f64,
    /// `(tensor, index)` of the worst parameter, in `param_tensors` order.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub params_checked: usize,
}

/// Rejects tapes where a perturbation of size `margin` could change a
/// median/max selection or flip a ReLU.
pub fn check_ties(m: &GnnModel, tape: &ForwardTape, margin: f64) -> Result<()> {
    for (l, lt) in tape.layers.iter().enumerate() {
        let u = &lt.pre;
        match &lt.selection {
            Selection::Mask(_) => {
                for i in 0..u.n() {
                    for f in 0..u.features() {
                        if u.get(i, f).abs() < margin {
                            return Err(Error::ReluKink {
                                layer: l,
                                feature: f,
                                node: i,
                                margin,
                            });
                        }
                    }
                }
            }
            Selection::Record(rec) => {
                let table = m.hoods(l).expect("local layer has a table");
                for hop in 1..=rec.max_hop() {
                    for f in 0..u.features() {
                        for (i, &r) in rec.realizers(hop, f).iter().enumerate() {
                            let v = u.get(r, f);
                            let close = table
                                .hood(i, hop)
                                .iter()
                                .any(|&j| j != r && (u.get(j, f) - v).abs() < margin);
                            if close {
                                return Err(Error::Tie {
                                    layer: l,
                                    feature: f,
                                    hop,
                                    node: i,
                                    margin,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn loss(m: &GnnModel, x: &GraphSignal, target: &Target) -> Result<f64> {
    let (logits, _) = model_forward(m, x)?;
    Ok(loss_and_grad(&logits, target)?.0)
}

/// Compares analytic gradients against `(J(θ+step) − J(θ−step)) / (2·step)`
/// for every parameter. Fails with [`Error::Tie`] or [`Error::ReluKink`] when
/// the tape sits within `10·step` of a nondifferentiable point.
pub fn finite_difference_check(
    m: &GnnModel,
    x: &GraphSignal,
    target: &Target,
    step: f64,
) -> Result<FdReport> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step {step}")));
    }
    let (logits, tape) = model_forward(m, x)?;
    check_ties(m, &tape, 10.0 * step)?;
    let (_, d_logits) = loss_and_grad(&logits, target)?;
    let grads = model_backward(m, &tape, &d_logits)?;
    let analytic: Vec<Vec<f64>> = grads.tensors(m).into_iter().map(<[f64]>::to_vec).collect();

    let mut probe = m.clone();
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        params_checked: 0,
    };
    for (t, tensor) in analytic.iter().enumerate() {
        for (p, &a) in tensor.iter().enumerate() {
            let original = probe.param_tensors_mut()[t][p];
            probe.param_tensors_mut()[t][p] = original + step;
            let up = loss(&probe, x, target)?;
            probe.param_tensors_mut()[t][p] = original - step;
            let down = loss(&probe, x, target)?;
            probe.param_tensors_mut()[t][p] = original;
            let numeric = (up - down) / (2.0 * step);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            report.params_checked += 1;
            if rel > report.max_rel_error {
                report = FdReport {
                    max_rel_error: rel,
                    worst: (t, p),
                    analytic: a,
                    numeric,
                    params_checked: report.params_checked,
                };
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::filters::{ActivationWeights, ConvTaps, RankKind};
    use crate::graph::Graph;
    use crate::model::{
        Activation, ActivationKind, LayerParams, ModelConfig, ModelOperators, Readout, ReadoutKind,
    };

    #[test]
    fn linear_model_is_exact() {
        // Median activation with w = e0 is the identity, so the model is linear
        // and the loss is quadratic along every coordinate: only rounding remains.
        let g = Graph::cycle(5).unwrap();
        let ops = ModelOperators::from_graph(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = LayerParams {
            taps: ConvTaps::random(2, 1, 3, &mut rng).unwrap(),
            activation: Activation::Local {
                kind: RankKind::Median,
                weights: ActivationWeights::shared(vec![1.0, 0.0]).unwrap(),
            },
        };
        let readout = Readout::random(ReadoutKind::PerGraph, 2, 10, &mut rng).unwrap();
        let m = GnnModel::new(1, vec![layer], readout, ops).unwrap();
        let x = GraphSignal::from_column(vec![0.3, -1.2, 0.8, 0.05, 2.0]);
        let r = finite_difference_check(&m, &x, &Target::Values(vec![0.5, -0.5]), 1e-4).unwrap();
        assert!(r.max_rel_error <= 1e-9, "{r:?}");
        assert_eq!(r.params_checked, m.param_count());
    }

    #[test]
    fn random_single_layer_median() {
        let g = Graph::undirected(6, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0), (3, 4, 2.0), (4, 5, 1.0), (5, 0, 1.0), (1, 4, 1.0)]).unwrap();
        let ops = ModelOperators::from_graph(&g).unwrap();
        let mut cfg = ModelConfig::single_layer(ActivationKind::Median, 3, 3, 2, 3);
        cfg.random_activation_init = true;
        let m = GnnModel::init(&cfg, ops, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let x = GraphSignal::from_column(vec![0.9, -0.3, 0.45, 1.7, -1.1, 0.2]);
        let r = finite_difference_check(&m, &x, &Target::Class(2), 1e-6).unwrap();
        assert!(r.max_rel_error <= 1e-5, "{r:?}");
    }

    #[test]
    fn ties_are_reported() {
        let g = Graph::path(3).unwrap();
        let ops = ModelOperators::from_graph(&g).unwrap();
        let cfg = ModelConfig::single_layer(ActivationKind::Max, 1, 1, 1, 2);
        let mut m = GnnModel::init(&cfg, ops, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        m.layers_mut()[0].taps = ConvTaps::new(1, 1, 1, vec![1.0]).unwrap();
        let x = GraphSignal::from_column(vec![2.0, 2.0, 1.0]);
        assert!(matches!(
            finite_difference_check(&m, &x, &Target::Class(0), 1e-6),
            Err(Error::Tie { .. })
        ));
        assert!(finite_difference_check(&m, &x, &Target::Class(0), 0.0).is_err());
    }

    #[test]
    fn relu_kinks_are_reported() {
        let g = Graph::path(3).unwrap();
        let ops = ModelOperators::from_graph(&g).unwrap();
        let cfg = ModelConfig::single_layer(ActivationKind::Relu, 1, 1, 0, 2);
        let mut m = GnnModel::init(&cfg, ops, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        m.layers_mut()[0].taps = ConvTaps::new(1, 1, 1, vec![1.0]).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 0.0, -1.0]);
        assert!(matches!(
            finite_difference_check(&m, &x, &Target::Class(0), 1e-6),
            Err(Error::ReluKink { node: 1, .. })
        ));
    }
}
