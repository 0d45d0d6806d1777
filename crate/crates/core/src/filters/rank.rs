use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::NeighborhoodTable;
use crate::signal::GraphSignal;

/// Order statistic used by a neighborhood operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankKind {
    Median,
    Max,
}

impl fmt::Display for RankKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankKind::Median => "median",
            RankKind::Max => "max",
        })
    }
}

impl FromStr for RankKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(RankKind::Median),
            "max" => Ok(RankKind::Max),
            other => Err(Error::UnknownActivation(other.to_string())),
        }
    }
}

/// Zero-based position of the selected order statistic in a sorted set of
/// `len` values: `len ÷ 2` (upper median) or `len - 1` (max).
#[inline]
pub fn rank_position(kind: RankKind, len: usize) -> usize {
    match kind {
        RankKind::Median => len / 2,
        RankKind::Max => len - 1,
    }
}

/// Coefficients `w_{k'}^f` of a multiresolution median/max filter, either one
/// vector shared by every feature or one vector per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationWeights {
    max_hop: usize,
    shared: bool,
    rows: usize,
    weights: Vec<f64>,
}

impl ActivationWeights {
    pub fn new(max_hop: usize, shared: bool, features: usize, weights: Vec<f64>) -> Result<Self> {
        let rows = if shared { 1 } else { features };
        if rows == 0 {
            return Err(Error::InvalidParameter("activation needs features".into()));
        }
        let expected = max_hop
            .checked_add(1)
            .and_then(|v| v.checked_mul(rows))
            .ok_or_else(|| Error::InvalidParameter("too many activation hops".into()))?;
        if weights.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} activation weights, expected {expected}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("activation weight".into()));
        }
        Ok(ActivationWeights {
            max_hop,
            shared,
            rows,
            weights,
        })
    }

    /// One shared coefficient vector.
    pub fn shared(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyTaps);
        }
        ActivationWeights::new(weights.len() - 1, true, 1, weights)
    }

    /// `w_0 = 1` and every other coefficient zero: the filter passes its input through.
    pub fn identity(max_hop: usize, shared: bool, features: usize) -> Result<Self> {
        let rows = if shared { 1 } else { features };
        let len = max_hop
            .checked_add(1)
            .and_then(|v| v.checked_mul(rows))
            .ok_or_else(|| Error::InvalidParameter("too many activation hops".into()))?;
        let mut weights = vec![0.0; len];
        for r in 0..rows {
            weights[r * (max_hop + 1)] = 1.0;
        }
        ActivationWeights::new(max_hop, shared, features, weights)
    }

    /// `w_0 = 1`, higher hops uniform in `[-0.1, 0.1]`.
    pub fn random<R: Rng + ?Sized>(
        max_hop: usize,
        shared: bool,
        features: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut w = ActivationWeights::identity(max_hop, shared, features)?;
        for r in 0..w.rows {
            for k in 1..=max_hop {
                w.weights[r * (max_hop + 1) + k] = rng.random_range(-0.1..=0.1);
            }
        }
        Ok(w)
    }

    pub fn max_hop(&self) -> usize {
        self.max_hop
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    /// Number of stored coefficient vectors (1 when shared).
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn index(&self, feature: usize, hop: usize) -> usize {
        let r = if self.shared { 0 } else { feature };
        r * (self.max_hop + 1) + hop
    }

    #[inline]
    pub fn weight(&self, feature: usize, hop: usize) -> f64 {
        self.weights[self.index(feature, hop)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub(crate) fn check_features(&self, features: usize) -> Result<()> {
        if !self.shared && self.rows != features {
            return Err(Error::DimensionMismatch(format!(
                "per-feature activation weights for {} features applied to {features}",
                self.rows
            )));
        }
        Ok(())
    }
}

/// For every hop `k'`, feature `f` and node `i`, the neighbor whose value the
/// median/max at `i` returned. Row `i` of the selection matrix `P_{k'}` has a
/// single one, in column `realizer(k', f, i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionRecord {
    n: usize,
    max_hop: usize,
    features: usize,
    realizers: Vec<usize>,
}

impl SelectionRecord {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_hop(&self) -> usize {
        self.max_hop
    }

    pub fn features(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn realizer(&self, hop: usize, feature: usize, node: usize) -> usize {
        self.realizers[(hop * self.features + feature) * self.n + node]
    }

    /// Realizers of all nodes for one hop and feature.
    pub fn realizers(&self, hop: usize, feature: usize) -> &[usize] {
        let start = (hop * self.features + feature) * self.n;
        &self.realizers[start..start + self.n]
    }
}

#[inline]
fn select(kind: RankKind, hood: &[usize], x: &[f64], scratch: &mut Vec<f64>) -> usize {
    match kind {
        RankKind::Max => {
            let mut best = hood[0];
            for &j in &hood[1..] {
                if x[j] > x[best] {
                    best = j;
                }
            }
            best
        }
        RankKind::Median => {
            if hood.len() <= 2 {
                // Upper median of one or two values is their max.
                return select(RankKind::Max, hood, x, scratch);
            }
            scratch.clear();
            scratch.extend(hood.iter().map(|&j| x[j]));
            let pos = rank_position(kind, hood.len());
            let (_, v, _) = scratch.select_nth_unstable_by(pos, f64::total_cmp);
            let v = *v;
            *hood
                .iter()
                .find(|&&j| x[j].total_cmp(&v).is_eq())
                .expect("selected value comes from the neighborhood")
        }
    }
}

fn check_hoods(table: &NeighborhoodTable, hop: usize) -> Result<()> {
    if hop > table.max_hop() {
        return Err(Error::InvalidParameter(format!(
            "hop {hop} beyond table depth {}",
            table.max_hop()
        )));
    }
    match (0..table.n()).find(|&i| table.hood(i, hop).is_empty()) {
        Some(node) => Err(Error::EmptyNeighborhood { node, hop }),
        None => Ok(()),
    }
}

/// `[z]_i = op({ x_j : j ∈ N_i^hop })` with the realizing neighbor of each node.
/// Value ties resolve to the smallest node index.
pub fn rank_operator(
    kind: RankKind,
    table: &NeighborhoodTable,
    hop: usize,
    x: &[f64],
) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.len() != table.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} nodes, table has {}",
            x.len(),
            table.n()
        )));
    }
    check_hoods(table, hop)?;
    let mut scratch = Vec::new();
    let realizers: Vec<usize> = (0..table.n())
        .map(|i| select(kind, table.hood(i, hop), x, &mut scratch))
        .collect();
    let values = realizers.iter().map(|&j| x[j]).collect();
    Ok((values, realizers))
}

pub fn median_operator(
    table: &NeighborhoodTable,
    hop: usize,
    x: &[f64],
) -> Result<(Vec<f64>, Vec<usize>)> {
    rank_operator(RankKind::Median, table, hop, x)
}

pub fn max_operator(
    table: &NeighborhoodTable,
    hop: usize,
    x: &[f64],
) -> Result<(Vec<f64>, Vec<usize>)> {
    rank_operator(RankKind::Max, table, hop, x)
}

/// `z^f = Σ_{k'} w_{k'}^f op(S^{k'}, u^f)` for every feature, recording the
/// realizers needed by the backward pass.
pub fn local_activation_forward(
    kind: RankKind,
    w: &ActivationWeights,
    table: &NeighborhoodTable,
    u: &GraphSignal,
) -> Result<(GraphSignal, SelectionRecord)> {
    if table.max_hop() != w.max_hop() {
        return Err(Error::DimensionMismatch(format!(
            "neighborhood table has {} hops, weights have {}",
            table.max_hop(),
            w.max_hop()
        )));
    }
    if u.n() != table.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} nodes, table has {}",
            u.n(),
            table.n()
        )));
    }
    w.check_features(u.features())?;
    for hop in 1..=w.max_hop() {
        check_hoods(table, hop)?;
    }
    let (n, features, max_hop) = (u.n(), u.features(), w.max_hop());
    let mut realizers = vec![0usize; (max_hop + 1) * features * n];
    let mut z = GraphSignal::zeros(n, features);
    let mut scratch = Vec::new();
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n];
    for f in 0..features {
        for (i, c) in col.iter_mut().enumerate() {
            *c = u.get(i, f);
        }
        let w0 = w.weight(f, 0);
        for i in 0..n {
            out[i] = w0 * col[i];
            realizers[f * n + i] = i;
        }
        for hop in 1..=max_hop {
            let wk = w.weight(f, hop);
            let base = (hop * features + f) * n;
            for i in 0..n {
                let r = select(kind, table.hood(i, hop), &col, &mut scratch);
                realizers[base + i] = r;
                out[i] += wk * col[r];
            }
        }
        for (i, &v) in out.iter().enumerate() {
            z.set(i, f, v);
        }
    }
    Ok((
        z,
        SelectionRecord {
            n,
            max_hop,
            features,
            realizers,
        },
    ))
}
