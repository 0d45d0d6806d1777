use crate::signal::GraphSignal;

/// Elementwise `max(0, u)` and the positivity mask used by the backward pass.
pub fn relu_forward(u: &GraphSignal) -> (GraphSignal, Vec<bool>) {
    let mask: Vec<bool> = u.as_slice().iter().map(|&v| v > 0.0).collect();
    let data = u
        .as_slice()
        .iter()
        .zip(&mask)
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    let out = GraphSignal::from_vec(u.n(), u.features(), data).expect("same shape");
    (out, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_examples() {
        let (z, mask) = relu_forward(&GraphSignal::from_column(vec![1.0, -2.0, 3.0]));
        assert_eq!(z.into_vec(), vec![1.0, 0.0, 3.0]);
        assert_eq!(mask, vec![true, false, true]);
        let neg = GraphSignal::from_column(vec![-1.0, -0.5]);
        assert_eq!(relu_forward(&neg).0.into_vec(), vec![0.0, 0.0]);
        let pos = GraphSignal::from_column(vec![0.25, 7.0]);
        assert_eq!(relu_forward(&pos).0, pos);
    }
}
