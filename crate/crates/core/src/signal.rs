//! Node-feature matrices.

use crate::error::{Error, Result};

/// An `n × features` real matrix stored node-major: entry `(i, g)` lives at
/// `data[i * features + g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    n: usize,
    features: usize,
    data: Vec<f64>,
}

impl GraphSignal {
    pub fn zeros(n: usize, features: usize) -> Self {
        GraphSignal {
            n,
            features,
            data: vec![0.0; n * features],
        }
    }

    pub fn from_vec(n: usize, features: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * features {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{features} signal",
                data.len()
            )));
        }
        Ok(GraphSignal { n, features, data })
    }

    /// Single-feature signal.
    pub fn from_column(values: Vec<f64>) -> Self {
        GraphSignal {
            n: values.len(),
            features: 1,
            data: values,
        }
    }

    /// Builds a signal from feature columns, each of length `n`.
    pub fn from_columns(n: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let features = columns.len();
        let mut out = GraphSignal::zeros(n, features);
        for (g, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "column {g} has {} entries, expected {n}",
                    col.len()
                )));
            }
            for (i, &v) in col.iter().enumerate() {
                out.data[i * features + g] = v;
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, node: usize, feature: usize) -> f64 {
        self.data[node * self.features + feature]
    }

    #[inline]
    pub fn set(&mut self, node: usize, feature: usize, value: f64) {
        self.data[node * self.features + feature] = value;
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.data[node * self.features..(node + 1) * self.features]
    }

    pub fn row_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.data[node * self.features..(node + 1) * self.features]
    }

    /// Copies feature `g` out as a length-`n` vector.
    pub fn column(&self, g: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, g)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.features).map(|g| self.column(g)).collect()
    }

    /// Largest absolute entrywise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &GraphSignal) -> Option<f64> {
        if self.n != other.n || self.features != other.features {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
