//! Linear graph convolutions and nonlinear neighborhood activations.

mod conv;
mod rank;
mod relu;

pub use conv::{
    conv_bank_forward, conv_bank_forward_cached, graph_convolution, shift_powers, ConvTaps,
    ShiftCache,
};
pub use rank::{
    local_activation_forward, max_operator, median_operator, rank_operator, rank_position,
    ActivationWeights, RankKind, SelectionRecord,
};
pub use relu::relu_forward;
