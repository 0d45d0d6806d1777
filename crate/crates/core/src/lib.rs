//! Graph neural networks whose activations are trainable multiresolution
//! median and max graph filters.
//!
//! A layer applies a bank of polynomial graph filters `Σ_k h_k S^k x` and
//! then either a pointwise ReLU or the local activation
//! `Σ_{k'} w_{k'} op(S^{k'}, u)`, where `op` takes the median or maximum of
//! every node's exact `k'`-hop neighborhood. Gradients are computed in
//! closed form through the recorded selections.
//!
//! ```
//! use medgnn::graph::Graph;
//! use medgnn::model::{model_forward, ActivationKind, GnnModel, ModelConfig, ModelOperators};
//! use medgnn::signal::GraphSignal;
//! use rand::SeedableRng;
//!
//! let g = Graph::cycle(6).unwrap();
//! let cfg = ModelConfig::single_layer(ActivationKind::Median, 4, 3, 1, 2);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let m = GnnModel::init(&cfg, ModelOperators::from_graph(&g).unwrap(), &mut rng).unwrap();
//! let x = GraphSignal::from_column(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
//! let (logits, _) = model_forward(&m, &x).unwrap();
//! assert_eq!(logits.classes(), 2);
//! ```

pub mod backprop;
pub mod error;
pub mod filters;
pub mod gradcheck;
pub mod graph;
pub mod harness;
pub mod model;
pub mod optim;
pub mod signal;

pub use error::{Error, Result};
pub use graph::{Graph, ShiftOperator, ShiftVariant};
pub use model::{ActivationKind, GnnModel};
pub use signal::GraphSignal;
