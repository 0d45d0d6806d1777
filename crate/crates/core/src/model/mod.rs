//! GNN maps built from graph-convolution banks, activations and a dense readout.

mod checkpoint;
mod loss;
mod readout;

pub use checkpoint::{parse_checkpoint, Checkpoint};
pub use loss::{loss_and_grad, softmax_cross_entropy, Target};
pub use readout::{readout_forward, Logits, Readout, ReadoutKind};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::{
    conv_bank_forward_cached, local_activation_forward, relu_forward, ActivationWeights, ConvTaps,
    RankKind, SelectionRecord, ShiftCache,
};
use crate::graph::{
    build_shift_operator, neighborhoods, permute, Graph, NeighborhoodTable, Permutation,
    ShiftOperator, ShiftVariant,
};
use crate::signal::GraphSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Relu,
    Median,
    Max,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 3] =
        [ActivationKind::Relu, ActivationKind::Median, ActivationKind::Max];

    pub fn rank(self) -> Option<RankKind> {
        match self {
            ActivationKind::Relu => None,
            ActivationKind::Median => Some(RankKind::Median),
            ActivationKind::Max => Some(RankKind::Max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Median => "median",
            ActivationKind::Max => "max",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownActivation(s.to_string()))
    }
}

/// Activation of one layer and its trainable coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Relu,
    Local {
        kind: RankKind,
        weights: ActivationWeights,
    },
}

impl Activation {
    pub fn kind(&self) -> ActivationKind {
        match self {
            Activation::Relu => ActivationKind::Relu,
            Activation::Local {
                kind: RankKind::Median,
                ..
            } => ActivationKind::Median,
            Activation::Local {
                kind: RankKind::Max,
                ..
            } => ActivationKind::Max,
        }
    }

    pub fn weights(&self) -> Option<&ActivationWeights> {
        match self {
            Activation::Relu => None,
            Activation::Local { weights, .. } => Some(weights),
        }
    }
}

/// Trainable parameters of one convolution + activation layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub taps: ConvTaps,
    pub activation: Activation,
}

impl LayerParams {
    pub fn param_count(&self) -> usize {
        self.taps.as_slice().len() + self.activation.weights().map_or(0, |w| w.len())
    }
}

/// Shift operators used by the convolutions and by the median/max
/// neighborhoods. They may differ: by default the convolutions use the
/// spectrally rescaled adjacency and the neighborhoods use `I + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOperators {
    pub conv: Arc<ShiftOperator>,
    pub activation: Arc<ShiftOperator>,
}

impl ModelOperators {
    pub fn new(conv: ShiftOperator, activation: ShiftOperator) -> Result<Self> {
        if conv.n() != activation.n() {
            return Err(Error::DimensionMismatch(format!(
                "convolution operator on {} nodes, activation operator on {}",
                conv.n(),
                activation.n()
            )));
        }
        Ok(ModelOperators {
            conv: Arc::new(conv),
            activation: Arc::new(activation),
        })
    }

    pub fn from_graph(g: &Graph) -> Result<Self> {
        ModelOperators::with_variants(
            g,
            ShiftVariant::RescaledWeightedAdjacency,
            ShiftVariant::SelfLoopAdjacency,
        )
    }

    pub fn with_variants(g: &Graph, conv: ShiftVariant, activation: ShiftVariant) -> Result<Self> {
        ModelOperators::new(
            build_shift_operator(g, conv)?,
            build_shift_operator(g, activation)?,
        )
    }

    pub fn n(&self) -> usize {
        self.conv.n()
    }

    /// Operators of the relabeled graph, `PᵀSP`.
    pub fn permuted(&self, p: &Permutation) -> Result<Self> {
        ModelOperators::new(permute(&self.conv, p)?, permute(&self.activation, p)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    pub features: usize,
    pub taps: usize,
    pub activation: ActivationKind,
    /// Neighborhood depth `K'` of median/max activations; ignored for ReLU.
    pub hops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_features: usize,
    pub layers: Vec<LayerConfig>,
    pub readout: ReadoutKind,
    pub classes: usize,
    pub shared_activation: bool,
    pub random_activation_init: bool,
}

impl ModelConfig {
    /// One convolutional layer followed by a per-graph softmax readout.
    pub fn single_layer(
        activation: ActivationKind,
        features: usize,
        taps: usize,
        hops: usize,
        classes: usize,
    ) -> Self {
        ModelConfig {
            input_features: 1,
            layers: vec![LayerConfig {
                features,
                taps,
                activation,
                hops,
            }],
            readout: ReadoutKind::PerGraph,
            classes,
            shared_activation: true,
            random_activation_init: false,
        }
    }
}

/// A GNN `Φ(x; S, H, W)` with its shift operators attached.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    n: usize,
    input_features: usize,
    layers: Vec<LayerParams>,
    readout: Readout,
    ops: ModelOperators,
    hoods: Vec<Option<Arc<NeighborhoodTable>>>,
}

impl GnnModel {
    /// Assembles a model from explicit parameters.
    pub fn new(
        input_features: usize,
        layers: Vec<LayerParams>,
        readout: Readout,
        ops: ModelOperators,
    ) -> Result<Self> {
        let n = ops.n();
        if layers.is_empty() {
            return Err(Error::InvalidParameter("model needs at least one layer".into()));
        }
        let mut features = input_features;
        for (l, layer) in layers.iter().enumerate() {
            if layer.taps.f_in() != features {
                return Err(Error::DimensionMismatch(format!(
                    "layer {l} expects {} input features, previous layer gives {features}",
                    layer.taps.f_in()
                )));
            }
            features = layer.taps.f_out();
            if let Some(w) = layer.activation.weights() {
                w.check_features(features)?;
            }
        }
        let expected_in = match readout.kind() {
            ReadoutKind::PerGraph => n * features,
            ReadoutKind::PerNode => features,
        };
        if readout.in_dim() != expected_in {
            return Err(Error::DimensionMismatch(format!(
                "readout takes {} inputs, model produces {expected_in}",
                readout.in_dim()
            )));
        }
        let hoods = build_hoods(&layers, &ops);
        Ok(GnnModel {
            n,
            input_features,
            layers,
            readout,
            ops,
            hoods,
        })
    }

    /// Random initialization: taps and readout uniform with fan-in scaled
    /// half-widths, activation coefficients starting at the identity.
    pub fn init<R: Rng + ?Sized>(
        cfg: &ModelConfig,
        ops: ModelOperators,
        rng: &mut R,
    ) -> Result<Self> {
        let n = ops.n();
        let mut layers = Vec::with_capacity(cfg.layers.len());
        let mut f_in = cfg.input_features;
        for lc in &cfg.layers {
            let taps = ConvTaps::random(lc.features, f_in, lc.taps, rng)?;
            let activation = match lc.activation.rank() {
                None => Activation::Relu,
                Some(kind) => {
                    let weights = if cfg.random_activation_init {
                        ActivationWeights::random(lc.hops, cfg.shared_activation, lc.features, rng)?
                    } else {
                        ActivationWeights::identity(lc.hops, cfg.shared_activation, lc.features)?
                    };
                    Activation::Local { kind, weights }
                }
            };
            layers.push(LayerParams { taps, activation });
            f_in = lc.features;
        }
        let in_dim = match cfg.readout {
            ReadoutKind::PerGraph => n * f_in,
            ReadoutKind::PerNode => f_in,
        };
        let readout = Readout::random(cfg.readout, cfg.classes, in_dim, rng)?;
        GnnModel::new(cfg.input_features, layers, readout, ops)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn input_features(&self) -> usize {
        self.input_features
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn readout(&self) -> &Readout {
        &self.readout
    }

    pub fn readout_mut(&mut self) -> &mut Readout {
        &mut self.readout
    }

    pub fn operators(&self) -> &ModelOperators {
        &self.ops
    }

    pub fn hoods(&self, layer: usize) -> Option<&NeighborhoodTable> {
        self.hoods[layer].as_deref()
    }

    pub fn classes(&self) -> usize {
        self.readout.classes()
    }

    /// Same parameters on different shift operators.
    pub fn with_operators(&self, ops: ModelOperators) -> Result<Self> {
        GnnModel::new(
            self.input_features,
            self.layers.clone(),
            self.readout.clone(),
            ops,
        )
    }

    /// The model acting on the relabeled graph. For a per-graph readout the
    /// readout's node blocks are relabeled as well.
    pub fn permuted(&self, p: &Permutation) -> Result<Self> {
        let ops = self.ops.permuted(p)?;
        let readout = match self.readout.kind() {
            ReadoutKind::PerGraph => self.readout.permute_nodes(p, self.n)?,
            ReadoutKind::PerNode => self.readout.clone(),
        };
        GnnModel::new(self.input_features, self.layers.clone(), readout, ops)
    }

    /// Parameters of the convolution and activation layers, readout excluded.
    pub fn conv_param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    pub fn param_count(&self) -> usize {
        self.conv_param_count() + self.readout.param_count()
    }

    /// Parameter tensors in a fixed order: per layer the taps then the
    /// activation coefficients (if any), then readout weights and bias.
    pub fn param_tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.taps.as_slice());
            if let Some(w) = l.activation.weights() {
                out.push(w.as_slice());
            }
        }
        out.push(self.readout.weights());
        out.push(self.readout.bias());
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.taps.as_mut_slice());
            if let Activation::Local { weights, .. } = &mut l.activation {
                out.push(weights.as_mut_slice());
            }
        }
        let (w, b) = self.readout.params_mut();
        out.push(w);
        out.push(b);
        out
    }
}

fn build_hoods(
    layers: &[LayerParams],
    ops: &ModelOperators,
) -> Vec<Option<Arc<NeighborhoodTable>>> {
    let mut cache: Vec<Arc<NeighborhoodTable>> = Vec::new();
    layers
        .iter()
        .map(|l| {
            l.activation.weights().map(|w| {
                let hops = w.max_hop();
                if let Some(t) = cache.iter().find(|t| t.max_hop() == hops) {
                    return Arc::clone(t);
                }
                let t = Arc::new(neighborhoods(&ops.activation, hops));
                cache.push(Arc::clone(&t));
                t
            })
        })
        .collect()
}

/// Activation state kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Mask(Vec<bool>),
    Record(SelectionRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTape {
    pub input: GraphSignal,
    pub shifts: ShiftCache,
    pub pre: GraphSignal,
    /// Layer output, after node dropout when the pass used it.
    pub post: GraphSignal,
    pub selection: Selection,
    /// Per-node dropout factors applied to the activation output.
    pub node_scales: Option<Vec<f64>>,
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTape {
    pub layers: Vec<LayerTape>,
    pub logits: Logits,
}

impl ForwardTape {
    /// Input of the readout: output of the last layer.
    pub fn features(&self) -> &GraphSignal {
        &self.layers.last().expect("at least one layer").post
    }
}

pub fn model_forward(m: &GnnModel, x: &GraphSignal) -> Result<(Logits, ForwardTape)> {
    model_forward_with_dropout(m, x, None)
}

/// Forward pass multiplying row `i` of layer `l`'s activation output by
/// `node_scales[l][i]`, the training-time form of node dropout.
pub fn model_forward_with_dropout(
    m: &GnnModel,
    x: &GraphSignal,
    node_scales: Option<&[Vec<f64>]>,
) -> Result<(Logits, ForwardTape)> {
    if let Some(scales) = node_scales {
        if scales.len() != m.layers.len() || scales.iter().any(|s| s.len() != m.n) {
            return Err(Error::DimensionMismatch("one dropout factor per node and layer".into()));
        }
    }
    if x.n() != m.n || x.features() != m.input_features {
        return Err(Error::DimensionMismatch(format!(
            "model expects {}x{} input, got {}x{}",
            m.n,
            m.input_features,
            x.n(),
            x.features()
        )));
    }
    let mut tapes = Vec::with_capacity(m.layers.len());
    let mut current = x.clone();
    for (l, layer) in m.layers.iter().enumerate() {
        let (pre, shifts) = conv_bank_forward_cached(&m.ops.conv, &layer.taps, &current)?;
        let (mut post, selection) = match &layer.activation {
            Activation::Relu => {
                let (z, mask) = relu_forward(&pre);
                (z, Selection::Mask(mask))
            }
            Activation::Local { kind, weights } => {
                let table = m.hoods[l].as_deref().expect("local layers have tables");
                let (z, rec) = local_activation_forward(*kind, weights, table, &pre)?;
                (z, Selection::Record(rec))
            }
        };
        let scales = node_scales.map(|s| s[l].clone());
        if let Some(c) = &scales {
            for (i, &ci) in c.iter().enumerate() {
                post.row_mut(i).iter_mut().for_each(|v| *v = if ci == 0.0 { 0.0 } else { *v * ci });
            }
        }
        let input = std::mem::replace(&mut current, post.clone());
        tapes.push(LayerTape {
            input,
            shifts,
            pre,
            post,
            selection,
            node_scales: scales,
        });
    }
    let logits = readout_forward(&m.readout, &current)?;
    Ok((
        logits.clone(),
        ForwardTape {
            layers: tapes,
            logits,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p3_ops() -> ModelOperators {
        ModelOperators::with_variants(
            &Graph::path(3).unwrap(),
            ShiftVariant::UnweightedAdjacency,
            ShiftVariant::SelfLoopAdjacency,
        )
        .unwrap()
    }

    #[test]
    fn identity_relu_model_returns_relu_of_input() {
        let ops = p3_ops();
        let taps = ConvTaps::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let layers = vec![LayerParams {
            taps,
            activation: Activation::Relu,
        }];
        // Per-graph readout with identity weights: logits = flattened features.
        let mut w = vec![0.0; 9];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let readout = Readout::new(ReadoutKind::PerGraph, 3, 3, w, vec![0.0; 3]).unwrap();
        let m = GnnModel::new(1, layers, readout, ops).unwrap();
        let x = GraphSignal::from_column(vec![1.0, -2.0, 3.0]);
        let (logits, tape) = model_forward(&m, &x).unwrap();
        assert_eq!(logits.as_slice(), &[1.0, 0.0, 3.0]);
        assert_eq!(tape.layers.len(), 1);
        assert_eq!(tape.logits, logits);
    }

    #[test]
    fn median_model_chains_module_values() {
        let ops = p3_ops();
        let taps = ConvTaps::new(1, 1, 1, vec![1.0]).unwrap();
        let weights = ActivationWeights::shared(vec![0.5, 0.5]).unwrap();
        let layers = vec![LayerParams {
            taps,
            activation: Activation::Local {
                kind: RankKind::Median,
                weights,
            },
        }];
        // Two classes: sum of node values and node 0 minus node 2.
        let w = vec![1.0, 1.0, 1.0, 1.0, 0.0, -1.0];
        let readout = Readout::new(ReadoutKind::PerGraph, 2, 3, w, vec![0.5, 0.0]).unwrap();
        let m = GnnModel::new(1, layers, readout, ops).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 5.0, 3.0]);
        let (logits, tape) = model_forward(&m, &x).unwrap();
        // Activation output is [3, 4, 4] (hop-0/hop-1 median mix).
        assert_eq!(tape.features().as_slice(), &[3.0, 4.0, 4.0]);
        assert_eq!(logits.as_slice(), &[11.5, -1.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let ops = p3_ops();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ModelConfig::single_layer(ActivationKind::Max, 2, 2, 1, 2);
        let m = GnnModel::init(&cfg, ops.clone(), &mut rng).unwrap();
        assert!(model_forward(&m, &GraphSignal::zeros(3, 2)).is_err());
        assert!(model_forward(&m, &GraphSignal::zeros(4, 1)).is_err());
        let taps = ConvTaps::zeros(2, 3, 1).unwrap();
        let readout = Readout::zeros(ReadoutKind::PerNode, 2, 2).unwrap();
        let layers = vec![LayerParams {
            taps,
            activation: Activation::Relu,
        }];
        assert!(GnnModel::new(1, layers, readout, ops).is_err());
    }

    #[test]
    fn param_counts_match_table() {
        let g = Graph::cycle(6).unwrap();
        let ops = ModelOperators::from_graph(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let relu = GnnModel::init(
            &ModelConfig::single_layer(ActivationKind::Relu, 32, 5, 1, 4),
            ops.clone(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(relu.conv_param_count(), 160);
        let med = GnnModel::init(
            &ModelConfig::single_layer(ActivationKind::Median, 32, 5, 1, 4),
            ops,
            &mut rng,
        )
        .unwrap();
        assert_eq!(med.conv_param_count(), 162);
        assert_eq!(med.param_count(), 162 + 4 * 6 * 32 + 4);
    }

    #[test]
    fn forward_is_deterministic() {
        let g = Graph::cycle(5).unwrap();
        let ops = ModelOperators::from_graph(&g).unwrap();
        let cfg = ModelConfig::single_layer(ActivationKind::Median, 3, 3, 2, 2);
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            GnnModel::init(&cfg, ops.clone(), &mut rng).unwrap()
        };
        let (m1, m2) = (build(), build());
        let x = GraphSignal::from_column(vec![0.3, -1.0, 2.0, 0.7, 0.1]);
        assert_eq!(model_forward(&m1, &x).unwrap(), model_forward(&m2, &x).unwrap());
    }

    #[test]
    fn kind_names() {
        for k in ActivationKind::ALL {
            assert_eq!(k.name().parse::<ActivationKind>().unwrap(), k);
        }
        assert!("tanh".parse::<ActivationKind>().is_err());
    }
}
