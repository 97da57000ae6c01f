/// Huber loss of one residual, threshold 1.
pub fn huber(e: f64) -> f64 {
    if e.abs() <= 1.0 {
        0.5 * e * e
    } else {
        e.abs() - 0.5
    }
}

pub fn huber_grad(e: f64) -> f64 {
    e.clamp(-1.0, 1.0)
}

/// Mean Huber loss over paired predictions and targets.
pub fn huber_loss(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len());
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter()
        .zip(target)
        .map(|(p, t)| huber(p - t))
        .sum::<f64>()
        / pred.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches() {
        assert_eq!(huber(0.0), 0.0);
        assert_eq!(huber(0.5), 0.125);
        assert_eq!(huber(2.0), 1.5);
        assert_eq!(huber(-2.0), 1.5);
        assert_eq!(huber(1.0), 0.5);
    }

    #[test]
    fn batch_mean() {
        assert_eq!(huber_loss(&[0.5, 2.0], &[0.0, 0.0]), (0.125 + 1.5) / 2.0);
    }

    #[test]
    fn gradient_is_clipped_residual() {
        assert_eq!(huber_grad(0.3), 0.3);
        assert_eq!(huber_grad(-4.0), -1.0);
        let h = 1e-6;
        for e in [-3.0, -0.7, 0.2, 0.9, 1.8] {
            let fd = (huber(e + h) - huber(e - h)) / (2.0 * h);
            assert!((fd - huber_grad(e)).abs() < 1e-8);
        }
    }
}
