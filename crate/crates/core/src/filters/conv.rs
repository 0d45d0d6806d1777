use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{shift_column, ShiftOperator};
use crate::signal::GraphSignal;

/// Taps `h_k^{fg}` of a bank of `f_out × f_in` graph filters with `k_taps` taps each.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTaps {
    f_out: usize,
    f_in: usize,
    k_taps: usize,
    taps: Vec<f64>,
}

impl ConvTaps {
    pub fn new(f_out: usize, f_in: usize, k_taps: usize, taps: Vec<f64>) -> Result<Self> {
        if f_out == 0 || f_in == 0 {
            return Err(Error::InvalidParameter("filter bank needs features".into()));
        }
        if k_taps == 0 {
            return Err(Error::EmptyTaps);
        }
        let expected = f_out
            .checked_mul(f_in)
            .and_then(|v| v.checked_mul(k_taps))
            .ok_or_else(|| Error::InvalidParameter("filter bank too large".into()))?;
        if taps.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} taps for a {f_out}x{f_in}x{k_taps} bank",
                taps.len()
            )));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter tap".into()));
        }
        Ok(ConvTaps {
            f_out,
            f_in,
            k_taps,
            taps,
        })
    }

    pub fn zeros(f_out: usize, f_in: usize, k_taps: usize) -> Result<Self> {
        ConvTaps::new(f_out, f_in, k_taps, vec![0.0; f_out * f_in * k_taps])
    }

    /// Zero-mean uniform taps with half-width `(f_in * k_taps)^{-1/2}`.
    pub fn random<R: Rng + ?Sized>(
        f_out: usize,
        f_in: usize,
        k_taps: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let half = 1.0 / ((f_in * k_taps) as f64).sqrt();
        let taps = (0..f_out * f_in * k_taps)
            .map(|_| rng.random_range(-half..=half))
            .collect();
        ConvTaps::new(f_out, f_in, k_taps, taps)
    }

    pub fn f_out(&self) -> usize {
        self.f_out
    }

    pub fn f_in(&self) -> usize {
        self.f_in
    }

    pub fn k_taps(&self) -> usize {
        self.k_taps
    }

    #[inline]
    pub fn index(&self, f: usize, g: usize, k: usize) -> usize {
        (f * self.f_in + g) * self.k_taps + k
    }

    #[inline]
    pub fn tap(&self, f: usize, g: usize, k: usize) -> f64 {
        self.taps[self.index(f, g, k)]
    }

    pub fn set(&mut self, f: usize, g: usize, k: usize, value: f64) {
        let p = self.index(f, g, k);
        self.taps[p] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.taps
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.taps
    }
}

/// Iterated shifts `S^k x^g` for every input feature `g` and `k < K`,
/// stored `[g][k]` with `n` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCache {
    n: usize,
    k_taps: usize,
    data: Vec<f64>,
}

impl ShiftCache {
    #[inline]
    pub fn get(&self, g: usize, k: usize) -> &[f64] {
        let start = (g * self.k_taps + k) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn k_taps(&self) -> usize {
        self.k_taps
    }
}

/// `[x, Sx, ..., S^{K-1}x]` by repeated sparse products.
pub fn shift_powers(s: &ShiftOperator, x: &[f64], k_taps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(k_taps);
    if k_taps == 0 {
        return out;
    }
    out.push(x.to_vec());
    for _ in 1..k_taps {
        let mut next = vec![0.0; x.len()];
        shift_column(s, out.last().unwrap(), &mut next);
        out.push(next);
    }
    out
}

/// `z = Σ_k h_k S^k x` for a single-feature signal.
pub fn graph_convolution(s: &ShiftOperator, h: &[f64], x: &GraphSignal) -> Result<GraphSignal> {
    if h.is_empty() {
        return Err(Error::EmptyTaps);
    }
    if x.features() != 1 || x.n() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "expected a single-feature signal on {} nodes, got {}x{}",
            s.n(),
            x.n(),
            x.features()
        )));
    }
    let n = s.n();
    let mut y = x.as_slice().to_vec();
    let mut next = vec![0.0; n];
    let mut z = vec![0.0; n];
    for (k, &hk) in h.iter().enumerate() {
        for (zi, yi) in z.iter_mut().zip(&y) {
            *zi += hk * yi;
        }
        if k + 1 < h.len() {
            shift_column(s, &y, &mut next);
            std::mem::swap(&mut y, &mut next);
        }
    }
    Ok(GraphSignal::from_column(z))
}

/// `u^f = Σ_g Σ_k h_k^{fg} S^k x^g`.
pub fn conv_bank_forward(
    s: &ShiftOperator,
    taps: &ConvTaps,
    x: &GraphSignal,
) -> Result<GraphSignal> {
    conv_bank_forward_cached(s, taps, x).map(|(u, _)| u)
}

/// As [`conv_bank_forward`], also returning the shifted inputs needed by the
/// backward pass.
pub fn conv_bank_forward_cached(
    s: &ShiftOperator,
    taps: &ConvTaps,
    x: &GraphSignal,
) -> Result<(GraphSignal, ShiftCache)> {
    let n = s.n();
    if x.n() != n || x.features() != taps.f_in {
        return Err(Error::DimensionMismatch(format!(
            "filter bank expects {n}x{} input, got {}x{}",
            taps.f_in,
            x.n(),
            x.features()
        )));
    }
    let k_taps = taps.k_taps;
    let mut data = vec![0.0; taps.f_in * k_taps * n];
    for g in 0..taps.f_in {
        let base = g * k_taps * n;
        for i in 0..n {
            data[base + i] = x.get(i, g);
        }
        for k in 1..k_taps {
            let (done, rest) = data.split_at_mut(base + k * n);
            shift_column(s, &done[base + (k - 1) * n..], &mut rest[..n]);
        }
    }
    let cache = ShiftCache { n, k_taps, data };

    let f_out = taps.f_out;
    let mut u = GraphSignal::zeros(n, f_out);
    let mut col = vec![0.0; n];
    for f in 0..f_out {
        col.iter_mut().for_each(|v| *v = 0.0);
        for g in 0..taps.f_in {
            for k in 0..k_taps {
                let h = taps.tap(f, g, k);
                if h == 0.0 {
                    continue;
                }
                for (c, z) in col.iter_mut().zip(cache.get(g, k)) {
                    *c += h * z;
                }
            }
        }
        for (i, &c) in col.iter().enumerate() {
            u.set(i, f, c);
        }
    }
    Ok((u, cache))
}
