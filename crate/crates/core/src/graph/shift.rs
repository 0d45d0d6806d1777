use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::signal::GraphSignal;

/// Convergence tolerance on successive Rayleigh quotients.
pub const POWER_ITERATION_TOL: f64 = 1e-9;
pub const POWER_ITERATION_CAP: usize = 10_000;
const POWER_ITERATION_SEED: u64 = 0x5eed_0f_5ca1e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftVariant {
    /// `A`, with `[A]_ij = a_ji`.
    WeightedAdjacency,
    /// `N`, the 0/1 pattern of `A`.
    UnweightedAdjacency,
    /// `M = I + N`.
    SelfLoopAdjacency,
    /// `diag(A 1) - A`.
    LaplacianWeighted,
    /// `diag(N 1) - N`.
    LaplacianUnweighted,
    /// `A / rho(A)`.
    RescaledWeightedAdjacency,
}

impl ShiftVariant {
    pub const ALL: [ShiftVariant; 6] = [
        ShiftVariant::WeightedAdjacency,
        ShiftVariant::UnweightedAdjacency,
        ShiftVariant::SelfLoopAdjacency,
        ShiftVariant::LaplacianWeighted,
        ShiftVariant::LaplacianUnweighted,
        ShiftVariant::RescaledWeightedAdjacency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShiftVariant::WeightedAdjacency => "weighted_adjacency",
            ShiftVariant::UnweightedAdjacency => "unweighted_adjacency",
            ShiftVariant::SelfLoopAdjacency => "self_loop_adjacency",
            ShiftVariant::LaplacianWeighted => "laplacian_weighted",
            ShiftVariant::LaplacianUnweighted => "laplacian_unweighted",
            ShiftVariant::RescaledWeightedAdjacency => "rescaled_weighted_adjacency",
        }
    }
}

impl fmt::Display for ShiftVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShiftVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShiftVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Sparse `n × n` graph shift operator in compressed-row form.
///
/// Column indices within a row are strictly increasing and stored values are
/// never zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    variant: ShiftVariant,
}

impl ShiftOperator {
    /// Assembles an operator from per-row `(column, value)` lists. Zero values
    /// are dropped and each row is sorted by column.
    pub fn from_rows(
        n: usize,
        rows: Vec<Vec<(usize, f64)>>,
        variant: ShiftVariant,
    ) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} rows for an operator of size {n}",
                rows.len()
            )));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::DuplicateEdge {
                        src: w[0].0,
                        dst: row_ptr.len() - 1,
                    });
                }
            }
            for (c, v) in row {
                if c >= n {
                    return Err(Error::NodeOutOfRange { index: c, n });
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite("shift operator entry".into()));
                }
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(ShiftOperator {
            n,
            row_ptr,
            cols,
            vals,
            variant,
        })
    }

    pub fn identity(n: usize) -> Self {
        ShiftOperator {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
            variant: ShiftVariant::SelfLoopAdjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> ShiftVariant {
        self.variant
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().copied().zip(v.iter().copied()).collect()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    fn scaled(&self, factor: f64, variant: ShiftVariant) -> ShiftOperator {
        ShiftOperator {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|v| v / factor).collect(),
            variant,
        }
    }
}

pub fn build_shift_operator(g: &Graph, variant: ShiftVariant) -> Result<ShiftOperator> {
    let n = g.n();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    // Row i collects the in-neighbors j of i: [A]_ij = a_ji.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in g.edges() {
        rows[e.dst].push((e.src, e.weight));
    }
    let rows = match variant {
        ShiftVariant::WeightedAdjacency => rows,
        ShiftVariant::RescaledWeightedAdjacency => {
            let a = ShiftOperator::from_rows(n, rows, ShiftVariant::WeightedAdjacency)?;
            return spectral_rescale(&a, POWER_ITERATION_TOL);
        }
        ShiftVariant::UnweightedAdjacency => unit(rows),
        ShiftVariant::SelfLoopAdjacency => {
            let mut rows = unit(rows);
            for (i, row) in rows.iter_mut().enumerate() {
                row.push((i, 1.0));
            }
            rows
        }
        ShiftVariant::LaplacianWeighted => laplacian(rows),
        ShiftVariant::LaplacianUnweighted => laplacian(unit(rows)),
    };
    ShiftOperator::from_rows(n, rows, variant)
}

fn unit(rows: Vec<Vec<(usize, f64)>>) -> Vec<Vec<(usize, f64)>> {
    rows.into_iter()
        .map(|r| r.into_iter().map(|(j, _)| (j, 1.0)).collect())
        .collect()
}

fn laplacian(rows: Vec<Vec<(usize, f64)>>) -> Vec<Vec<(usize, f64)>> {
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let degree: f64 = r.iter().map(|&(_, w)| w).sum();
            let mut out: Vec<(usize, f64)> = r.into_iter().map(|(j, w)| (j, -w)).collect();
            out.push((i, degree));
            out
        })
        .collect()
}

/// Divides a weighted adjacency by its spectral radius.
pub fn spectral_rescale(s: &ShiftOperator, tol: f64) -> Result<ShiftOperator> {
    spectral_rescale_with(s, tol, POWER_ITERATION_CAP)
}

/// Spectral radius is estimated by power iteration on `S²` from a fixed
/// seeded start vector with positive entries, which also converges for
/// bipartite graphs whose extreme eigenvalues are `±rho`.
pub fn spectral_rescale_with(s: &ShiftOperator, tol: f64, cap: usize) -> Result<ShiftOperator> {
    if s.variant != ShiftVariant::WeightedAdjacency {
        return Err(Error::InvalidParameter(format!(
            "spectral rescaling expects a weighted adjacency, got {}",
            s.variant
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    if s.nnz() == 0 {
        return Err(Error::ZeroOperator);
    }
    let n = s.n;
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut previous = f64::NAN;
    for _ in 0..cap {
        shift_column(s, &x, &mut y);
        shift_column(s, &y, &mut z);
        let quotient: f64 = x.iter().zip(&z).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut z);
        if norm == 0.0 {
            return Err(Error::ZeroOperator);
        }
        std::mem::swap(&mut x, &mut z);
        if (quotient - previous).abs() < tol * quotient.abs().max(1.0) {
            let radius = quotient.abs().sqrt();
            return Ok(s.scaled(radius, ShiftVariant::RescaledWeightedAdjacency));
        }
        previous = quotient;
    }
    Err(Error::NoConvergence { iterations: cap })
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// `out = S x` for one feature column. Lengths must equal `s.n()`.
#[inline]
pub fn shift_column(s: &ShiftOperator, x: &[f64], out: &mut [f64]) {
    debug_assert!(x.len() == s.n && out.len() == s.n);
    for (i, o) in out.iter_mut().enumerate() {
        let (a, b) = (s.row_ptr[i], s.row_ptr[i + 1]);
        let mut acc = 0.0;
        for p in a..b {
            acc += s.vals[p] * x[s.cols[p]];
        }
        *o = acc;
    }
}

/// `out = Sᵀ x` without materializing the transpose.
#[inline]
pub fn shift_column_transpose(s: &ShiftOperator, x: &[f64], out: &mut [f64]) {
    debug_assert!(x.len() == s.n && out.len() == s.n);
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for p in s.row_ptr[i]..s.row_ptr[i + 1] {
            out[s.cols[p]] += s.vals[p] * xi;
        }
    }
}

/// Column-wise product `S x`.
pub fn apply_shift(s: &ShiftOperator, x: &GraphSignal) -> Result<GraphSignal> {
    apply_columns(s, x, shift_column)
}

/// Column-wise product `Sᵀ x`.
pub fn apply_shift_transpose(s: &ShiftOperator, x: &GraphSignal) -> Result<GraphSignal> {
    apply_columns(s, x, shift_column_transpose)
}

fn apply_columns(
    s: &ShiftOperator,
    x: &GraphSignal,
    op: fn(&ShiftOperator, &[f64], &mut [f64]),
) -> Result<GraphSignal> {
    if x.n() != s.n {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} nodes, operator has {}",
            x.n(),
            s.n
        )));
    }
    let mut out = vec![0.0; s.n];
    let cols: Vec<Vec<f64>> = x
        .columns()
        .iter()
        .map(|c| {
            op(s, c, &mut out);
            out.clone()
        })
        .collect();
    GraphSignal::from_columns(s.n, &cols)
}
