use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Permutation;
use crate::signal::GraphSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReadoutKind {
    /// Dense map from the node-major flattening of all `N·F` features to `C` logits.
    PerGraph,
    /// The same `F → C` dense map applied to every node.
    PerNode,
}

impl fmt::Display for ReadoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReadoutKind::PerGraph => "per_graph",
            ReadoutKind::PerNode => "per_node",
        })
    }
}

impl FromStr for ReadoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_graph" => Ok(ReadoutKind::PerGraph),
            "per_node" => Ok(ReadoutKind::PerNode),
            other => Err(Error::InvalidParameter(format!("unknown readout `{other}`"))),
        }
    }
}

/// Affine readout with a row-major `classes × in_dim` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    kind: ReadoutKind,
    classes: usize,
    in_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Readout {
    pub fn new(
        kind: ReadoutKind,
        classes: usize,
        in_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if classes == 0 || in_dim == 0 {
            return Err(Error::InvalidParameter("empty readout".into()));
        }
        let expected = classes
            .checked_mul(in_dim)
            .ok_or_else(|| Error::InvalidParameter("readout too large".into()))?;
        if weights.len() != expected || bias.len() != classes {
            return Err(Error::DimensionMismatch(format!(
                "readout {classes}x{in_dim} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("readout parameter".into()));
        }
        Ok(Readout {
            kind,
            classes,
            in_dim,
            weights,
            bias,
        })
    }

    pub fn zeros(kind: ReadoutKind, classes: usize, in_dim: usize) -> Result<Self> {
        Readout::new(
            kind,
            classes,
            in_dim,
            vec![0.0; classes.saturating_mul(in_dim)],
            vec![0.0; classes],
        )
    }

    /// Uniform weights with half-width `in_dim^{-1/2}`, zero bias.
    pub fn random<R: Rng + ?Sized>(
        kind: ReadoutKind,
        classes: usize,
        in_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let half = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..classes * in_dim)
            .map(|_| rng.random_range(-half..=half))
            .collect();
        Readout::new(kind, classes, in_dim, weights, vec![0.0; classes])
    }

    pub fn kind(&self) -> ReadoutKind {
        self.kind
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    /// Relabels the node blocks of a per-graph readout so that it reads the
    /// features of node `p(i)` where it used to read node `i`.
    pub fn permute_nodes(&self, p: &Permutation, n: usize) -> Result<Readout> {
        if self.kind != ReadoutKind::PerGraph || p.n() != n || self.in_dim % n != 0 {
            return Err(Error::DimensionMismatch(
                "node permutation of a readout needs a per-graph readout on matching nodes".into(),
            ));
        }
        let f = self.in_dim / n;
        let mut weights = vec![0.0; self.weights.len()];
        for c in 0..self.classes {
            let row = c * self.in_dim;
            for i in 0..n {
                let src = row + i * f;
                let dst = row + p.apply(i) * f;
                weights[dst..dst + f].copy_from_slice(&self.weights[src..src + f]);
            }
        }
        Readout::new(self.kind, self.classes, self.in_dim, weights, self.bias.clone())
    }
}

/// Readout output: one row of `classes` logits (per-graph) or one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    rows: usize,
    classes: usize,
    data: Vec<f64>,
}

impl Logits {
    pub fn new(rows: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * classes {
            return Err(Error::DimensionMismatch(format!(
                "{} logits for {rows}x{classes}",
                data.len()
            )));
        }
        Ok(Logits {
            rows,
            classes,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.classes..(r + 1) * self.classes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Logits {
        Logits {
            rows: self.rows,
            classes: self.classes,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Index of the largest logit in row `r`; ties go to the smallest class.
    pub fn argmax(&self, r: usize) -> usize {
        let row = self.row(r);
        let mut best = 0;
        for (c, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = c;
            }
        }
        best
    }
}

pub fn readout_forward(readout: &Readout, features: &GraphSignal) -> Result<Logits> {
    let (rows, stride) = match readout.kind {
        ReadoutKind::PerGraph => (1, features.n() * features.features()),
        ReadoutKind::PerNode => (features.n(), features.features()),
    };
    if stride != readout.in_dim {
        return Err(Error::DimensionMismatch(format!(
            "readout takes {} inputs per row, got {stride}",
            readout.in_dim
        )));
    }
    let input = features.as_slice();
    let mut data = Vec::with_capacity(rows * readout.classes);
    for r in 0..rows {
        let x = &input[r * stride..(r + 1) * stride];
        for c in 0..readout.classes {
            let w = &readout.weights[c * stride..(c + 1) * stride];
            let dot: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            data.push(dot + readout.bias[c]);
        }
    }
    Logits::new(rows, readout.classes, data)
}
