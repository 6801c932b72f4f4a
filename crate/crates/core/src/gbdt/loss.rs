pub fn sigmoid(margin: f64) -> f64 {
    if margin >= 0.0 {
        1.0 / (1.0 + (-margin).exp())
    } else {
        let e = margin.exp();
        e / (1.0 + e)
    }
}

/// Gradient and hessian of the binary log-loss with respect to the margin.
pub fn logistic_grad_hess(y: u8, margin: f64) -> (f64, f64) {
    let p = sigmoid(margin);
    (p - f64::from(y), p * (1.0 - p))
}

/// Mean binary cross-entropy of probabilities against 0/1 labels.
pub fn log_loss(y: &[u8], prob: &[f64]) -> f64 {
    let eps = 1e-15;
    let total: f64 = y
        .iter()
        .zip(prob)
        .map(|(&yi, &p)| {
            let p = p.clamp(eps, 1.0 - eps);
            if yi == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_hess_at_zero() {
        assert_eq!(logistic_grad_hess(1, 0.0), (-0.5, 0.25));
        assert_eq!(logistic_grad_hess(0, 0.0), (0.5, 0.25));
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
