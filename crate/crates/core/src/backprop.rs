//! Analytic gradients of the GNN loss.
//!
//! A median/max activation selects, for every node and hop, the value of one
//! neighbor, so its Jacobian with respect to the pre-activation is the 0/1
//! selection matrix `P_{k'}` and the backward pass scatters the incoming
//! gradient back to the recorded realizers. ReLU layers use their positivity
//! mask. Convolution gradients reuse the shifted inputs cached in the tape.

use crate::error::{Error, Result};
use crate::filters::{ActivationWeights, ConvTaps, SelectionRecord, ShiftCache};
use crate::graph::{shift_column_transpose, ShiftOperator};
use crate::model::{Activation, ForwardTape, GnnModel, Logits, ReadoutKind, Selection};
use crate::signal::GraphSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    /// Same layout as the layer's [`ConvTaps`].
    pub d_taps: Vec<f64>,
    /// Same layout as the layer's [`ActivationWeights`]; empty for ReLU.
    pub d_activation: Vec<f64>,
    /// Gradient with respect to the layer input.
    pub d_input: GraphSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
    pub d_readout_weights: Vec<f64>,
    pub d_readout_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(m: &GnnModel) -> Self {
        let mut features = m.input_features();
        let layers = m
            .layers()
            .iter()
            .map(|l| {
                let g = LayerGradients {
                    d_taps: vec![0.0; l.taps.as_slice().len()],
                    d_activation: vec![0.0; l.activation.weights().map_or(0, |w| w.len())],
                    d_input: GraphSignal::zeros(m.n(), features),
                };
                features = l.taps.f_out();
                g
            })
            .collect();
        Gradients {
            layers,
            d_readout_weights: vec![0.0; m.readout().weights().len()],
            d_readout_bias: vec![0.0; m.readout().bias().len()],
        }
    }

    /// Gradient tensors in the order of [`GnnModel::param_tensors`].
    pub fn tensors(&self, m: &GnnModel) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (g, l) in self.layers.iter().zip(m.layers()) {
            out.push(g.d_taps.as_slice());
            if l.activation.weights().is_some() {
                out.push(g.d_activation.as_slice());
            }
        }
        out.push(&self.d_readout_weights);
        out.push(&self.d_readout_bias);
        out
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut [f64])) {
        for l in &mut self.layers {
            f(&mut l.d_taps);
            f(&mut l.d_activation);
            f(l.d_input.as_mut_slice());
        }
        f(&mut self.d_readout_weights);
        f(&mut self.d_readout_bias);
    }

    /// Elementwise `self += other`. Shapes must agree.
    pub fn accumulate(&mut self, other: &Gradients) {
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            add(&mut a.d_taps, &b.d_taps);
            add(&mut a.d_activation, &b.d_activation);
            add(a.d_input.as_mut_slice(), b.d_input.as_slice());
        }
        add(&mut self.d_readout_weights, &other.d_readout_weights);
        add(&mut self.d_readout_bias, &other.d_readout_bias);
    }

    pub fn scale(&mut self, factor: f64) {
        self.for_each_mut(|t| t.iter_mut().for_each(|v| *v *= factor));
    }

    pub fn is_finite(&self) -> bool {
        let finite = |t: &[f64]| t.iter().all(|v| v.is_finite());
        self.layers.iter().all(|l| {
            finite(&l.d_taps) && finite(&l.d_activation) && finite(l.d_input.as_slice())
        }) && finite(&self.d_readout_weights)
            && finite(&self.d_readout_bias)
    }
}

/// `d_u = mask ⊙ d_out`.
pub fn relu_backward(mask: &[bool], d_out: &GraphSignal) -> Result<GraphSignal> {
    if mask.len() != d_out.as_slice().len() {
        return Err(Error::DimensionMismatch("stale ReLU mask".into()));
    }
    let data = d_out
        .as_slice()
        .iter()
        .zip(mask)
        .map(|(&d, &m)| if m { d } else { 0.0 })
        .collect();
    GraphSignal::from_vec(d_out.n(), d_out.features(), data)
}

/// Backward pass of a median/max activation:
/// `d_w[k'] = ⟨d_out, op(S^{k'}, u)⟩` and `d_u = Σ_{k'} w_{k'} P_{k'}ᵀ d_out`.
pub fn local_activation_backward(
    w: &ActivationWeights,
    record: &SelectionRecord,
    u: &GraphSignal,
    d_out: &GraphSignal,
) -> Result<(Vec<f64>, GraphSignal)> {
    let (n, features) = (u.n(), u.features());
    if record.n() != n
        || record.features() != features
        || record.max_hop() != w.max_hop()
        || d_out.n() != n
        || d_out.features() != features
    {
        return Err(Error::DimensionMismatch("stale selection record".into()));
    }
    w.check_features(features)?;
    let mut d_w = vec![0.0; w.len()];
    let mut d_u = GraphSignal::zeros(n, features);
    for f in 0..features {
        for hop in 0..=w.max_hop() {
            let wk = w.weight(f, hop);
            let realizers = record.realizers(hop, f);
            let mut inner = 0.0;
            for (i, &r) in realizers.iter().enumerate() {
                let d = d_out.get(i, f);
                inner += d * u.get(r, f);
                let acc = d_u.get(r, f) + wk * d;
                d_u.set(r, f, acc);
            }
            d_w[w.index(f, hop)] += inner;
        }
    }
    Ok((d_w, d_u))
}

/// Dispatches on the layer's activation. Returns `(d_w, d_u)`; `d_w` is empty for ReLU.
pub fn activation_backward(
    activation: &Activation,
    selection: &Selection,
    u: &GraphSignal,
    d_out: &GraphSignal,
) -> Result<(Vec<f64>, GraphSignal)> {
    match (activation, selection) {
        (Activation::Relu, Selection::Mask(mask)) => Ok((Vec::new(), relu_backward(mask, d_out)?)),
        (Activation::Local { weights, .. }, Selection::Record(rec)) => {
            local_activation_backward(weights, rec, u, d_out)
        }
        _ => Err(Error::DimensionMismatch(
            "tape selection does not match the layer activation".into(),
        )),
    }
}

/// Gradients of a filter bank from cached shifts:
/// `d_h[f][g][k] = ⟨d_u^f, S^k x^g⟩` and `d_x^g = Σ_k (Sᵀ)^k Σ_f h_k^{fg} d_u^f`,
/// the latter evaluated Horner-style from the highest tap down.
pub fn conv_backward_cached(
    s: &ShiftOperator,
    taps: &ConvTaps,
    cache: &ShiftCache,
    d_u: &GraphSignal,
) -> Result<(Vec<f64>, GraphSignal)> {
    let n = s.n();
    if d_u.n() != n || d_u.features() != taps.f_out() || cache.k_taps() != taps.k_taps() {
        return Err(Error::DimensionMismatch("filter bank gradient shapes".into()));
    }
    let (f_out, f_in, k_taps) = (taps.f_out(), taps.f_in(), taps.k_taps());
    let d_cols = d_u.columns();
    let mut d_taps = vec![0.0; taps.as_slice().len()];
    for (f, d_col) in d_cols.iter().enumerate() {
        for g in 0..f_in {
            for k in 0..k_taps {
                let dot: f64 = d_col.iter().zip(cache.get(g, k)).map(|(a, b)| a * b).sum();
                d_taps[taps.index(f, g, k)] = dot;
            }
        }
    }
    let mut d_x = GraphSignal::zeros(n, f_in);
    let mut acc = vec![0.0; n];
    let mut shifted = vec![0.0; n];
    for g in 0..f_in {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for k in (0..k_taps).rev() {
            if k + 1 < k_taps {
                shift_column_transpose(s, &acc, &mut shifted);
                std::mem::swap(&mut acc, &mut shifted);
            }
            for (f, d_col) in d_cols.iter().enumerate().take(f_out) {
                let h = taps.tap(f, g, k);
                if h != 0.0 {
                    acc.iter_mut().zip(d_col).for_each(|(a, d)| *a += h * d);
                }
            }
        }
        for (i, &v) in acc.iter().enumerate() {
            d_x.set(i, g, v);
        }
    }
    Ok((d_taps, d_x))
}

/// As [`conv_backward_cached`], recomputing the shifts of `x_in`.
pub fn conv_backward(
    s: &ShiftOperator,
    taps: &ConvTaps,
    x_in: &GraphSignal,
    d_u: &GraphSignal,
) -> Result<(Vec<f64>, GraphSignal)> {
    let (_, cache) = crate::filters::conv_bank_forward_cached(s, taps, x_in)?;
    conv_backward_cached(s, taps, &cache, d_u)
}

/// Readout backward, then activation and convolution backward layer by layer.
pub fn model_backward(m: &GnnModel, tape: &ForwardTape, d_logits: &Logits) -> Result<Gradients> {
    if tape.layers.len() != m.layers().len() {
        return Err(Error::DimensionMismatch("tape and model differ in depth".into()));
    }
    let readout = m.readout();
    let features = tape.features();
    let stride = readout.in_dim();
    let rows = match readout.kind() {
        ReadoutKind::PerGraph => 1,
        ReadoutKind::PerNode => features.n(),
    };
    if d_logits.rows() != rows || d_logits.classes() != readout.classes() {
        return Err(Error::DimensionMismatch("logit gradient shape".into()));
    }
    let x = features.as_slice();
    let classes = readout.classes();
    let mut d_rw = vec![0.0; readout.weights().len()];
    let mut d_rb = vec![0.0; classes];
    let mut d_feat = vec![0.0; x.len()];
    for r in 0..rows {
        let xr = &x[r * stride..(r + 1) * stride];
        let dr = &mut d_feat[r * stride..(r + 1) * stride];
        for (c, &dl) in d_logits.row(r).iter().enumerate() {
            d_rb[c] += dl;
            if dl == 0.0 {
                continue;
            }
            let w = &readout.weights()[c * stride..(c + 1) * stride];
            let dw = &mut d_rw[c * stride..(c + 1) * stride];
            for j in 0..stride {
                dw[j] += dl * xr[j];
                dr[j] += w[j] * dl;
            }
        }
    }
    let mut d_out = GraphSignal::from_vec(features.n(), features.features(), d_feat)?;
    let mut layers = Vec::with_capacity(m.layers().len());
    for (layer, lt) in m.layers().iter().zip(&tape.layers).rev() {
        if let Some(c) = &lt.node_scales {
            for (i, &ci) in c.iter().enumerate() {
                d_out.row_mut(i).iter_mut().for_each(|v| *v *= ci);
            }
        }
        let (d_activation, d_u) = activation_backward(&layer.activation, &lt.selection, &lt.pre, &d_out)?;
        let (d_taps, d_input) = conv_backward_cached(&m.operators().conv, &layer.taps, &lt.shifts, &d_u)?;
        d_out = d_input.clone();
        layers.push(LayerGradients {
            d_taps,
            d_activation,
            d_input,
        });
    }
    layers.reverse();
    Ok(Gradients {
        layers,
        d_readout_weights: d_rw,
        d_readout_bias: d_rb,
    })
}
