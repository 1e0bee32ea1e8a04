//! Binary cross-entropy over a batch of scalar predictions.

use super::net::PROB_CLAMP;
use super::GanError;
use crate::scalar::Real;

/// Mean binary cross-entropy and its gradient with respect to the predictions.
///
/// ```text
/// L = −(1/n) Σᵢ [ yᵢ·ln pᵢ + (1−yᵢ)·ln(1−pᵢ) ]
/// ∂L/∂pᵢ = (pᵢ − yᵢ) / (pᵢ·(1−pᵢ)) / n
/// ```
///
/// Predictions are clamped to `[1e-7, 1−1e-7]` before the logs so a saturated
/// discriminator yields a large-but-finite loss instead of ±∞; the gradient
/// uses the clamped value, which keeps it consistent with the loss actually
/// computed (and bounded by ~1e7/n).
///
/// # Panics
/// If the batch is empty — callers always pass 2- or 4-element batches.
pub fn bce_loss<T: Real>(predictions: &[T], labels: &[T]) -> Result<(T, Vec<T>), GanError> {
    if predictions.len() != labels.len() {
        return Err(GanError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    assert!(!predictions.is_empty(), "BCE over an empty batch");
    let lo = T::from_f64(PROB_CLAMP);
    let hi = T::one() - lo;
    let n = T::from_f64(predictions.len() as f64);
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(predictions.len());
    for (&p, &y) in predictions.iter().zip(labels) {
        let p = p.max(lo).min(hi);
        total += -(y * p.ln() + (T::one() - y) * (T::one() - p).ln());
        grad.push((p - y) / (p * (T::one() - p)) / n);
    }
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_flip_prediction_of_a_true_label_costs_ln_two() {
        let (loss, grad) = bce_loss(&[0.5_f64], &[1.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        // (0.5 − 1) / (0.5·0.5) / 1 = −2.
        assert!((grad[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_predictions_cost_almost_nothing() {
        let (loss, _) = bce_loss(&[0.999_f64, 0.001], &[1.0, 0.0]).unwrap();
        let expected = -(0.999_f64.ln() + 0.999_f64.ln()) / 2.0;
        assert!((loss - expected).abs() < 1e-12);
        assert!(loss < 0.002);
    }

    #[test]
    fn mean_reduction_over_a_mixed_batch() {
        // −( ln 0.8 + ln(1−0.3) ) / 2
        let (loss, grad) = bce_loss(&[0.8_f64, 0.3], &[1.0, 0.0]).unwrap();
        let expected = -(0.8_f64.ln() + 0.7_f64.ln()) / 2.0;
        assert!((loss - expected).abs() < 1e-12);
        assert!((grad[0] - (0.8 - 1.0) / (0.8 * 0.2) / 2.0).abs() < 1e-12);
        assert!((grad[1] - (0.3 - 0.0) / (0.3 * 0.7) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn saturated_predictions_are_clamped_to_a_finite_loss() {
        // p=1 clamps to 1−1e-7 with label 0: loss = −ln(1 − (1−1e-7)) = −ln(1e-7).
        let (loss, grad) = bce_loss(&[1.0_f64], &[0.0]).unwrap();
        assert!((loss - (-(PROB_CLAMP).ln())).abs() < 1e-9);
        assert!(loss.is_finite() && grad[0].is_finite());

        // p=0 clamps to 1e-7 with label 1: same magnitude from the other side.
        let (loss0, grad0) = bce_loss(&[0.0_f64], &[1.0]).unwrap();
        assert!((loss0 - (-(PROB_CLAMP).ln())).abs() < 1e-9);
        assert!(loss0.is_finite() && grad0[0].is_finite());
    }

    #[test]
    fn length_mismatch_is_reported() {
        let err = bce_loss(&[0.5_f64], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(
            err,
            GanError::LengthMismatch {
                predictions: 1,
                labels: 2
            }
        ));
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let preds = [0.3_f64, 0.62, 0.91, 0.08];
        let labels = [1.0, 0.0, 1.0, 0.0];
        let (_, grad) = bce_loss(&preds, &labels).unwrap();
        let h = 1e-6;
        for i in 0..preds.len() {
            let mut hi = preds;
            let mut lo = preds;
            hi[i] += h;
            lo[i] -= h;
            let fd =
                (bce_loss(&hi, &labels).unwrap().0 - bce_loss(&lo, &labels).unwrap().0) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() / (grad[i].abs() + 1e-8) < 1e-6,
                "param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }
}
