//! `key = value` experiment configuration.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::fmt_f64;
use crate::error::{Error, Result};
use crate::model::ActivationKind;
use crate::optim::{DropoutPlacement, LossReduction, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFamily {
    Er,
    Geometric,
    File,
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphFamily::Er => "er",
            GraphFamily::Geometric => "geometric",
            GraphFamily::File => "file",
        })
    }
}

impl FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "er" => Ok(GraphFamily::Er),
            "geometric" => Ok(GraphFamily::Geometric),
            "file" => Ok(GraphFamily::File),
            other => Err(Error::InvalidParameter(format!("unknown graph family `{other}`"))),
        }
    }
}

/// Everything needed to rerun a source-localization sweep. Defaults follow
/// the ER setup: 100 nodes, edge probability 0.4, 10 classes, 32 features
/// with 5 taps, 20 epochs of batches of 100 at learning rate 0.005.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: GraphFamily,
    pub n: usize,
    pub p: f64,
    pub radius: f64,
    pub graph_file: Option<PathBuf>,
    pub classes: usize,
    pub train_samples: usize,
    pub val_samples: usize,
    pub test_samples: usize,
    pub t_max: usize,
    pub activations: Vec<ActivationKind>,
    pub hops: usize,
    pub taps: usize,
    pub features: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_prob: f64,
    pub dropout_placement: DropoutPlacement,
    pub loss_reduction: LossReduction,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: GraphFamily::Er,
            n: 100,
            p: 0.4,
            radius: 0.15,
            graph_file: None,
            classes: 10,
            train_samples: 10_000,
            val_samples: 200,
            test_samples: 200,
            t_max: 25,
            activations: ActivationKind::ALL.to_vec(),
            hops: 1,
            taps: 5,
            features: 32,
            epochs: 20,
            batch_size: 100,
            learning_rate: 0.005,
            dropout_prob: 0.5,
            dropout_placement: DropoutPlacement::Hidden,
            loss_reduction: LossReduction::Mean,
            trials: 1,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            dropout_prob: self.dropout_prob,
            dropout_placement: self.dropout_placement,
            seed,
            loss_reduction: self.loss_reduction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self.family {
            GraphFamily::Er if !(self.p > 0.0 && self.p < 1.0) => {
                return bad(format!("p = {} not in (0, 1)", self.p))
            }
            GraphFamily::Geometric
                if !(self.radius > 0.0 && self.radius <= std::f64::consts::SQRT_2) =>
            {
                return bad(format!("radius = {} not in (0, sqrt 2]", self.radius))
            }
            GraphFamily::File if self.graph_file.is_none() => {
                return bad("family = file needs graph_file".into())
            }
            _ => {}
        }
        if self.family != GraphFamily::File && self.n < 2 {
            return bad(format!("n = {} is below 2", self.n));
        }
        for (name, v) in [
            ("classes", self.classes),
            ("train_samples", self.train_samples),
            ("val_samples", self.val_samples),
            ("test_samples", self.test_samples),
            ("taps", self.taps),
            ("features", self.features),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.activations.is_empty() {
            return bad("activations list is empty".into());
        }
        if self.family != GraphFamily::File && self.classes > self.n {
            return bad(format!("{} classes exceed {} nodes", self.classes, self.n));
        }
        self.train_config(self.seed).validate()
    }

    /// Text form accepted by [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let acts: Vec<&str> = self.activations.iter().map(|a| a.name()).collect();
        let _ = writeln!(out, "family = {}", self.family);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "p = {}", fmt_f64(self.p));
        let _ = writeln!(out, "radius = {}", fmt_f64(self.radius));
        if let Some(path) = &self.graph_file {
            let _ = writeln!(out, "graph_file = {}", path.display());
        }
        let _ = writeln!(out, "classes = {}", self.classes);
        let _ = writeln!(out, "train_samples = {}", self.train_samples);
        let _ = writeln!(out, "val_samples = {}", self.val_samples);
        let _ = writeln!(out, "test_samples = {}", self.test_samples);
        let _ = writeln!(out, "t_max = {}", self.t_max);
        let _ = writeln!(out, "activations = {}", acts.join(","));
        let _ = writeln!(out, "hops = {}", self.hops);
        let _ = writeln!(out, "taps = {}", self.taps);
        let _ = writeln!(out, "features = {}", self.features);
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "batch_size = {}", self.batch_size);
        let _ = writeln!(out, "learning_rate = {}", fmt_f64(self.learning_rate));
        let _ = writeln!(out, "dropout_prob = {}", fmt_f64(self.dropout_prob));
        let _ = writeln!(out, "dropout_placement = {}", self.dropout_placement);
        let _ = writeln!(out, "loss_reduction = {}", self.loss_reduction);
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        parse_config(&std::fs::read_to_string(path)?)
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value `{raw}` for `{key}`"),
    })
}

/// Parses `key = value` lines over the defaults. Unknown or repeated keys
/// are errors; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, val) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (key, val) = (key.trim(), val.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        let reparse = |e: Error| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line,
                msg: other.to_string(),
            },
        };
        match key {
            "family" => cfg.family = val.parse().map_err(reparse)?,
            "n" => cfg.n = value(line, key, val)?,
            "p" => cfg.p = value(line, key, val)?,
            "radius" => cfg.radius = value(line, key, val)?,
            "graph_file" => cfg.graph_file = Some(PathBuf::from(val)),
            "classes" => cfg.classes = value(line, key, val)?,
            "train_samples" => cfg.train_samples = value(line, key, val)?,
            "val_samples" => cfg.val_samples = value(line, key, val)?,
            "test_samples" => cfg.test_samples = value(line, key, val)?,
            "t_max" => cfg.t_max = value(line, key, val)?,
            "activations" => {
                cfg.activations = val
                    .split(',')
                    .map(|a| a.trim().parse::<ActivationKind>())
                    .collect::<Result<_>>()
                    .map_err(reparse)?
            }
            "hops" => cfg.hops = value(line, key, val)?,
            "taps" => cfg.taps = value(line, key, val)?,
            "features" => cfg.features = value(line, key, val)?,
            "epochs" => cfg.epochs = value(line, key, val)?,
            "batch_size" => cfg.batch_size = value(line, key, val)?,
            "learning_rate" => cfg.learning_rate = value(line, key, val)?,
            "dropout_prob" => cfg.dropout_prob = value(line, key, val)?,
            "dropout_placement" => cfg.dropout_placement = val.parse().map_err(reparse)?,
            "loss_reduction" => cfg.loss_reduction = val.parse().map_err(reparse)?,
            "trials" => cfg.trials = value(line, key, val)?,
            "seed" => cfg.seed = value(line, key, val)?,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
