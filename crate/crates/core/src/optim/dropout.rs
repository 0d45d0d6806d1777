use rand::Rng;

use crate::error::{Error, Result};
use crate::signal::GraphSignal;

/// Per-node dropout factors: 0 with probability `p`, otherwise `1 / (1 − p)`.
/// Draws nothing when `p = 0`.
pub fn node_dropout_scales<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("dropout probability {p}")));
    }
    if p == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let scale = 1.0 / (1.0 - p);
    Ok((0..n)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { scale })
        .collect())
}

/// Zeroes each node's whole feature row with probability `p` and scales the
/// surviving rows by `1 / (1 − p)`.
pub fn node_dropout<R: Rng + ?Sized>(x: &GraphSignal, p: f64, rng: &mut R) -> Result<GraphSignal> {
    let scales = node_dropout_scales(x.n(), p, rng)?;
    if p == 0.0 {
        return Ok(x.clone());
    }
    let mut out = x.clone();
    for (i, &c) in scales.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|v| *v = if c == 0.0 { 0.0 } else { *v * c });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_probability_is_identity() {
        let x = GraphSignal::from_column(vec![1.0, -2.0, 3.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(node_dropout(&x, 0.0, &mut rng).unwrap(), x);
    }

    #[test]
    fn out_of_range_probability() {
        let x = GraphSignal::zeros(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(node_dropout(&x, 1.0, &mut rng).is_err());
        assert!(node_dropout(&x, -0.1, &mut rng).is_err());
    }

    #[test]
    fn half_dropout_is_seeded_and_doubles_survivors() {
        let x = GraphSignal::from_vec(6, 2, (1..=12).map(f64::from).collect()).unwrap();
        let run = |seed| node_dropout(&x, 0.5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let a = run(42);
        assert_eq!(a, run(42));
        // Replay the mask from the same stream.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for i in 0..6 {
            let dropped = rng.random::<f64>() < 0.5;
            for g in 0..2 {
                let expected = if dropped { 0.0 } else { 2.0 * x.get(i, g) };
                assert_eq!(a.get(i, g), expected);
            }
        }
    }

    #[test]
    fn dropout_is_unbiased() {
        let x = GraphSignal::from_column(vec![1.0, -3.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let p = 0.5;
        let mut sums = [0.0; 3];
        for _ in 0..trials {
            let d = node_dropout(&x, p, &mut rng).unwrap();
            for (s, v) in sums.iter_mut().zip(d.as_slice()) {
                *s += v;
            }
        }
        for (i, s) in sums.iter().enumerate() {
            let v = x.get(i, 0);
            let mean = s / trials as f64;
            // Each draw is 0 or 2v with equal odds: standard deviation |v|.
            let se = v.abs() / (trials as f64).sqrt();
            assert!((mean - v).abs() <= 3.0 * se, "node {i}: {mean} vs {v}");
        }
    }
}
