//! Selection rates, prediction error and time-dependent survival AUC.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::{CoefficientVector, PredictorMatrix, SurvivalOutcome};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// True positive and true negative rates of a support estimate. A rate whose denominator
/// is empty is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRates {
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
}

pub fn tpr_tnr<F: Scalar>(estimated: &CoefficientVector<F>, truth: &CoefficientVector<F>) -> Result<SelectionRates> {
    selection_rates(estimated.values.iter().map(|&v| v != F::zero()), truth.values.iter().map(|&v| v != F::zero()), estimated.values.len(), truth.values.len())
}

/// [`tpr_tnr`] on explicit support flags.
pub fn selection_rates(
    estimated: impl IntoIterator<Item = bool>,
    truth: impl IntoIterator<Item = bool>,
    len_est: usize,
    len_truth: usize,
) -> Result<SelectionRates> {
    if len_est != len_truth {
        return Err(Error::dims(format!("{len_est} estimated coefficients, {len_truth} true ones")));
    }
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (e, t) in estimated.into_iter().zip(truth) {
        if t {
            pos += 1;
            tp += usize::from(e);
        } else {
            neg += 1;
            tn += usize::from(!e);
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(SelectionRates { tpr: ratio(tp, pos), tnr: ratio(tn, neg) })
}

/// `(pe_null - pe_method) / pe_null`.
pub fn rrpe(pe_null: f64, pe_method: f64) -> Result<f64> {
    if !(pe_null > 0.0) {
        return Err(Error::invalid(format!("null prediction error must be positive, got {pe_null}")));
    }
    Ok((pe_null - pe_method) / pe_null)
}

/// Held-out mean squared error of `X_test G`.
pub fn prediction_error<F: Scalar>(model: &CoefficientVector<F>, x_test: &PredictorMatrix<F>, z_test: &Array1<F>) -> Result<F> {
    if model.values.len() != x_test.p() || x_test.n() != z_test.len() {
        return Err(Error::dims(format!(
            "{} coefficients, test data {}x{}, {} outcomes",
            model.values.len(),
            x_test.n(),
            x_test.p(),
            z_test.len()
        )));
    }
    if z_test.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let r = z_test - &x_test.values().dot(&model.values);
    Ok(r.iter().map(|&v| v * v).sum::<F>() / F::from_usize(r.len()).unwrap())
}

/// Mean squared error of predicting every test outcome by `train_mean`.
pub fn null_prediction_error<F: Scalar>(train_mean: F, z_test: &Array1<F>) -> Result<F> {
    if z_test.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    Ok(z_test.iter().map(|&v| (v - train_mean) * (v - train_mean)).sum::<F>() / F::from_usize(z_test.len()).unwrap())
}

/// Kaplan-Meier survival at `t` over the subjects in `idx`.
fn km_at(time: &[f64], event: &[bool], idx: &mut [usize], t: f64) -> f64 {
    idx.sort_by(|&a, &b| time[a].total_cmp(&time[b]));
    let mut s = 1.0;
    let mut at_risk = idx.len();
    let mut i = 0;
    while i < idx.len() && time[idx[i]] <= t {
        let tt = time[idx[i]];
        let (mut d, mut m) = (0usize, 0usize);
        while i < idx.len() && time[idx[i]] == tt {
            d += usize::from(event[idx[i]]);
            m += 1;
            i += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
        }
        at_risk -= m;
    }
    s
}

/// Cumulative/dynamic AUC at `t` with Kaplan-Meier weighting: for each cutoff `c` among the
/// distinct risk scores, `TP(c) = (1 - S_c(t)) P(risk > c) / (1 - S(t))` and
/// `FP(c) = S_c(t) P(risk > c) / S(t)`, where `S_c` is the KM curve of subjects with
/// risk above `c`. The ROC curve starts at (1, 1) and the area is by trapezoids.
pub fn survival_auc<F: Scalar>(risk: &[F], surv: &SurvivalOutcome<F>, t: F) -> Result<f64> {
    if risk.len() != surv.n() {
        return Err(Error::dims(format!("{} risk scores for {} subjects", risk.len(), surv.n())));
    }
    if risk.iter().any(|r| !r.is_finite()) {
        return Err(Error::invalid("risk scores must be finite"));
    }
    let time: Vec<f64> = surv.time().iter().map(|v| v.to_f64_lossy()).collect();
    let risk: Vec<f64> = risk.iter().map(|v| v.to_f64_lossy()).collect();
    let t = t.to_f64_lossy();
    let event = surv.event();
    let n = time.len();
    if !(0..n).any(|i| event[i] && time[i] <= t) {
        return Err(Error::Undefined(format!("no events by time {t}")));
    }
    let mut all: Vec<usize> = (0..n).collect();
    let s_t = km_at(&time, event, &mut all, t);
    if !(s_t > 0.0) {
        return Err(Error::Undefined(format!("no subject is known to survive past time {t}")));
    }
    let mut cuts = risk.clone();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut tp, mut fp) = (vec![1.0], vec![1.0]);
    for &c in &cuts {
        let mut above: Vec<usize> = (0..n).filter(|&i| risk[i] > c).collect();
        let p1 = above.len() as f64 / n as f64;
        let s_c = if above.is_empty() { 1.0 } else { km_at(&time, event, &mut above, t) };
        tp.push((1.0 - s_c) * p1 / (1.0 - s_t));
        fp.push(s_c * p1 / s_t);
    }
    let mut area = 0.0;
    for i in 1..tp.len() {
        area += (fp[i - 1] - fp[i]) * (tp[i - 1] + tp[i]) / 2.0;
    }
    Ok(area.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn selection_cases() {
        let truth = CoefficientVector { values: array![1.0, 1.0, 0.0] };
        let r = tpr_tnr(&CoefficientVector { values: array![1.0, 0.0, 0.0] }, &truth).unwrap();
        assert_eq!((r.tpr, r.tnr), (Some(0.5), Some(1.0)));
        let r = tpr_tnr(&truth, &truth).unwrap();
        assert_eq!((r.tpr, r.tnr), (Some(1.0), Some(1.0)));
        let r = tpr_tnr(&CoefficientVector { values: array![3.0, -1.0, 0.1] }, &truth).unwrap();
        assert_eq!((r.tpr, r.tnr), (Some(1.0), Some(0.0)));
        let r = tpr_tnr(&truth, &CoefficientVector { values: array![1.0, 2.0, 3.0] }).unwrap();
        assert_eq!(r.tnr, None);
        assert!(tpr_tnr(&truth, &CoefficientVector { values: array![1.0] }).is_err());
    }

    #[test]
    fn rrpe_cases() {
        assert!((rrpe(10.0, 4.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(rrpe(10.0, 10.0).unwrap(), 0.0);
        assert!((rrpe(10.0, 12.0).unwrap() + 0.2).abs() < 1e-15);
        assert!(rrpe(0.0, 1.0).is_err());
    }

    #[test]
    fn prediction_error_cases() {
        let x = PredictorMatrix::unnamed(array![[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let g = CoefficientVector { values: array![1.0, 0.5] };
        assert_eq!(prediction_error(&g, &x, &array![1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(prediction_error(&CoefficientVector::zeros(2), &x, &array![1.0, -1.0]).unwrap(), 1.0);
        // residuals (2 - 1, 0 - 1)
        assert_eq!(prediction_error(&g, &x, &array![2.0, 0.0]).unwrap(), 1.0);
        assert_eq!(null_prediction_error(0.5, &array![1.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn auc_simple_cases() {
        let s = SurvivalOutcome::new(array![1.0, 2.0, 3.0, 4.0], vec![true; 4]).unwrap();
        assert_eq!(survival_auc(&[4.0, 3.0, 2.0, 1.0], &s, 2.5).unwrap(), 1.0);
        assert_eq!(survival_auc(&[1.0, 1.0, 1.0, 1.0], &s, 2.5).unwrap(), 0.5);
        assert_eq!(survival_auc(&[1.0, 2.0, 3.0, 4.0], &s, 2.5).unwrap(), 0.0);
        // cases {0, 1}, controls {2, 3}: pairs (0,2) win, (0,3) tie, (1,2) and (1,3) lose
        assert_eq!(survival_auc(&[2.0, 1.0, 1.5, 2.0], &s, 2.5).unwrap(), 0.375);
        assert!(matches!(survival_auc(&[1.0, 2.0, 3.0, 4.0], &s, 0.5), Err(Error::Undefined(_))));
    }
}
