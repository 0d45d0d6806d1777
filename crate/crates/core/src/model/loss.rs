use super::readout::Logits;
use crate::error::{Error, Result};

/// What a sample is scored against.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Graph-level class; needs a single row of logits.
    Class(usize),
    /// One class per node; loss is the mean cross entropy over nodes.
    NodeClasses(Vec<usize>),
    /// Regression targets for every logit; loss `½ Σ (ŷ − y)²`.
    Values(Vec<f64>),
}

/// Max-shifted softmax cross entropy: returns `-log p_label` and `p − onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logit".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() - (logits[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / total).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Loss of one sample and its gradient with respect to the logits.
pub fn loss_and_grad(logits: &Logits, target: &Target) -> Result<(f64, Logits)> {
    match target {
        Target::Class(label) => {
            if logits.rows() != 1 {
                return Err(Error::DimensionMismatch(format!(
                    "graph-level class needs one row of logits, got {}",
                    logits.rows()
                )));
            }
            let (loss, grad) = softmax_cross_entropy(logits.row(0), *label)?;
            Ok((loss, Logits::new(1, logits.classes(), grad)?))
        }
        Target::NodeClasses(labels) => {
            if labels.len() != logits.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} node labels for {} rows",
                    labels.len(),
                    logits.rows()
                )));
            }
            let scale = 1.0 / labels.len() as f64;
            let mut total = 0.0;
            let mut grad = Vec::with_capacity(logits.as_slice().len());
            for (r, &label) in labels.iter().enumerate() {
                let (l, g) = softmax_cross_entropy(logits.row(r), label)?;
                total += l;
                grad.extend(g.into_iter().map(|v| v * scale));
            }
            Ok((total * scale, Logits::new(logits.rows(), logits.classes(), grad)?))
        }
        Target::Values(values) => {
            if values.len() != logits.as_slice().len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} regression targets for {} outputs",
                    values.len(),
                    logits.as_slice().len()
                )));
            }
            let diff: Vec<f64> = logits
                .as_slice()
                .iter()
                .zip(values)
                .map(|(a, b)| a - b)
                .collect();
            let loss = 0.5 * diff.iter().map(|d| d * d).sum::<f64>();
            Ok((loss, Logits::new(logits.rows(), logits.classes(), diff)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_classes() {
        let (loss, grad) = softmax_cross_entropy(&[0.3; 10], 4).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
        assert!((grad[4] + 0.9).abs() < 1e-12);
        assert!((grad[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn label_out_of_range() {
        assert_eq!(
            softmax_cross_entropy(&[0.0, 1.0], 2),
            Err(Error::LabelOutOfRange {
                label: 2,
                classes: 2
            })
        );
    }

    #[test]
    fn gradient_matches_central_differences() {
        let logits = [0.7, -1.3, 2.1, 0.05, -0.4];
        let (_, grad) = softmax_cross_entropy(&logits, 2).unwrap();
        let h = 1e-5;
        for c in 0..logits.len() {
            let mut up = logits;
            let mut down = logits;
            up[c] += h;
            down[c] -= h;
            let numeric = (softmax_cross_entropy(&up, 2).unwrap().0
                - softmax_cross_entropy(&down, 2).unwrap().0)
                / (2.0 * h);
            assert!((numeric - grad[c]).abs() <= 1e-8, "{c}: {numeric} vs {}", grad[c]);
        }
    }

    #[test]
    fn regression_loss() {
        let l = Logits::new(2, 1, vec![1.0, 3.0]).unwrap();
        let (loss, g) = loss_and_grad(&l, &Target::Values(vec![0.0, 1.0])).unwrap();
        assert_eq!(loss, 2.5);
        assert_eq!(g.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn node_classes_average() {
        let l = Logits::new(2, 2, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        let (loss, g) = loss_and_grad(&l, &Target::NodeClasses(vec![0, 1])).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g.as_slice(), &[-0.25, 0.25, 0.25, -0.25]);
    }
}
