//! Classification metrics for the positive (failed = 1) class.

/// Fraction of matching labels.
pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> f64 {
    assert_eq!(y_true.len(), y_pred.len());
    assert!(!y_true.is_empty());
    let correct = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    correct as f64 / y_true.len() as f64
}

/// Precision and recall for class 1; each is 0 when its denominator is 0.
pub fn precision_recall(y_true: &[u8], y_pred: &[u8]) -> (f64, f64) {
    assert_eq!(y_true.len(), y_pred.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    (precision, recall)
}

/// Harmonic mean of precision and recall; 0 when both vanish.
pub fn f1(y_true: &[u8], y_pred: &[u8]) -> f64 {
    let (p, r) = precision_recall(y_true, y_pred);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]), 1.0);
        assert_eq!(accuracy(&[1, 0, 1, 1], &[1, 1, 1, 0]), 0.5);
        assert_eq!(accuracy(&[0, 1], &[1, 0]), 0.0);
    }

    #[test]
    fn f1_basics() {
        assert_eq!(f1(&[1, 0, 1], &[1, 0, 1]), 1.0);
        // TP=1, FP=1, FN=1 -> P = R = 0.5 -> F1 = 0.5
        assert_eq!(f1(&[1, 1, 0, 0], &[1, 0, 1, 0]), 0.5);
        // No positive predictions while positives exist.
        assert_eq!(f1(&[1, 1, 0], &[0, 0, 0]), 0.0);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let y_true = [1u8, 0, 1, 1, 0, 0, 1];
        let y_pred = [1u8, 1, 0, 1, 0, 1, 1];
        let perm = [3usize, 0, 6, 2, 5, 1, 4];
        let pt: Vec<u8> = perm.iter().map(|&i| y_true[i]).collect();
        let pp: Vec<u8> = perm.iter().map(|&i| y_pred[i]).collect();
        assert_eq!(accuracy(&y_true, &y_pred), accuracy(&pt, &pp));
        assert_eq!(f1(&y_true, &y_pred), f1(&pt, &pp));
    }
}
