use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::dropout::{node_dropout, node_dropout_scales};
use crate::backprop::{model_backward, Gradients};
use crate::error::{Error, Result};
use crate::model::{loss_and_grad, model_forward, model_forward_with_dropout, GnnModel, Target};
use crate::signal::GraphSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: GraphSignal,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// How per-sample losses and gradients combine within a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossReduction {
    #[default]
    Mean,
    Sum,
}

impl fmt::Display for LossReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossReduction::Mean => "mean",
            LossReduction::Sum => "sum",
        })
    }
}

impl FromStr for LossReduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(LossReduction::Mean),
            "sum" => Ok(LossReduction::Sum),
            other => Err(Error::InvalidParameter(format!("unknown loss reduction `{other}`"))),
        }
    }
}

/// Which graph signals node dropout acts on during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropoutPlacement {
    /// The input signal of the model.
    Input,
    /// The output of every layer's activation, ahead of the next layer or
    /// the readout.
    #[default]
    Hidden,
}

impl fmt::Display for DropoutPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropoutPlacement::Input => "input",
            DropoutPlacement::Hidden => "hidden",
        })
    }
}

impl FromStr for DropoutPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(DropoutPlacement::Input),
            "hidden" => Ok(DropoutPlacement::Hidden),
            other => Err(Error::InvalidParameter(format!("unknown dropout placement `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_prob: f64,
    pub dropout_placement: DropoutPlacement,
    pub seed: u64,
    pub loss_reduction: LossReduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 100,
            learning_rate: 0.005,
            dropout_prob: 0.5,
            dropout_placement: DropoutPlacement::Hidden,
            seed: 0,
            loss_reduction: LossReduction::Mean,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::InvalidParameter(format!(
                "dropout probability {}",
                self.dropout_prob
            )));
        }
        Ok(())
    }
}

/// Metrics after an epoch. Epoch 0 is the evaluation before any update, with
/// the training loss measured without dropout; later epochs report the mean
/// loss of the (dropped-out) training batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub loss: f64,
    /// Fraction of argmax-correct predictions (classification targets).
    pub accuracy: f64,
    /// Root-mean-square error over all outputs (regression targets).
    pub rmse: f64,
    pub samples: usize,
}

/// Mean loss plus accuracy or RMSE over `samples`. Argmax ties go to the
/// smallest class index; accuracy is NaN when no sample has a class target
/// and RMSE is NaN when none has a regression target.
pub fn evaluate(m: &GnnModel, samples: &[Sample]) -> Result<EvalMetrics> {
    if samples.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    let mut loss = 0.0;
    let (mut correct, mut labeled) = (0usize, 0usize);
    let (mut sq, mut outputs) = (0.0, 0usize);
    for s in samples {
        let (logits, _) = model_forward(m, &s.x)?;
        loss += loss_and_grad(&logits, &s.target)?.0;
        match &s.target {
            Target::Class(c) => {
                labeled += 1;
                correct += usize::from(logits.argmax(0) == *c);
            }
            Target::NodeClasses(cs) => {
                for (r, c) in cs.iter().enumerate() {
                    labeled += 1;
                    correct += usize::from(logits.argmax(r) == *c);
                }
            }
            Target::Values(vs) => {
                for (a, b) in logits.as_slice().iter().zip(vs) {
                    sq += (a - b) * (a - b);
                    outputs += 1;
                }
            }
        }
    }
    let ratio = |a: f64, b: usize| if b == 0 { f64::NAN } else { a / b as f64 };
    Ok(EvalMetrics {
        loss: loss / samples.len() as f64,
        accuracy: ratio(correct as f64, labeled),
        rmse: ratio(sq, outputs).sqrt(),
        samples: samples.len(),
    })
}

pub fn train(
    m: GnnModel,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(GnnModel, Vec<EpochMetrics>)> {
    train_with_observer(m, data, cfg, |_| {})
}

/// Mini-batch ADAM training. One seeded generator drives the per-epoch
/// Fisher–Yates shuffle and the dropout masks, so `(model, data, cfg)`
/// determines the result bit for bit.
pub fn train_with_observer(
    mut m: GnnModel,
    data: &Dataset,
    cfg: &TrainConfig,
    mut observe: impl FnMut(&EpochMetrics),
) -> Result<(GnnModel, Vec<EpochMetrics>)> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if data.val.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(&m, cfg.learning_rate)?;
    let mut history = Vec::with_capacity(cfg.epochs + 1);

    let initial_train = evaluate(&m, &data.train)?;
    let initial_val = evaluate(&m, &data.val)?;
    let record = EpochMetrics {
        epoch: 0,
        train_loss: initial_train.loss,
        val_loss: initial_val.loss,
        val_acc: initial_val.accuracy,
    };
    observe(&record);
    history.push(record);

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = Gradients::zeros_like(&m);
            let mut batch_loss = 0.0;
            for &idx in chunk {
                let sample = &data.train[idx];
                let (logits, tape) = if cfg.dropout_prob == 0.0 {
                    model_forward(&m, &sample.x)?
                } else {
                    match cfg.dropout_placement {
                        DropoutPlacement::Input => {
                            let x = node_dropout(&sample.x, cfg.dropout_prob, &mut rng)?;
                            model_forward(&m, &x)?
                        }
                        DropoutPlacement::Hidden => {
                            let scales = (0..m.layers().len())
                                .map(|_| node_dropout_scales(m.n(), cfg.dropout_prob, &mut rng))
                                .collect::<Result<Vec<_>>>()?;
                            model_forward_with_dropout(&m, &sample.x, Some(&scales))?
                        }
                    }
                };
                let (loss, d_logits) = loss_and_grad(&logits, &sample.target)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch });
                }
                batch_loss += loss;
                grads.accumulate(&model_backward(&m, &tape, &d_logits)?);
            }
            epoch_loss += batch_loss;
            if cfg.loss_reduction == LossReduction::Mean {
                grads.scale(1.0 / chunk.len() as f64);
            }
            if !grads.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            adam.step(&grads, &mut m)?;
        }
        let val = evaluate(&m, &data.val)?;
        let record = EpochMetrics {
            epoch,
            train_loss: epoch_loss / data.train.len() as f64,
            val_loss: val.loss,
            val_acc: val.accuracy,
        };
        observe(&record);
        history.push(record);
    }
    Ok((m, history))
}
