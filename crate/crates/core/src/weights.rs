//! Cross-model penalty weights.
//!
//! Coefficients from one model are turned into penalty multipliers for the other: the
//! log10 magnitude of each feature's coefficient is clamped to `[floor, ceiling]`
//! (defaults `[-2, -0.01]`), negated and normalized to mean one. Large coefficients give
//! small weights, which eases selection of the same feature in the other model. Group
//! weights are the Euclidean norms of the clamped values within each predictor group,
//! again normalized to mean one.

use ndarray::{Array1, Axis};

use crate::data::{CoefficientMatrix, CoefficientVector, GroupStructure, PenaltyWeights};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Clamp range for the log10 coefficient magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogClamp {
    /// Used whenever log10 >= 0.
    pub ceiling: f64,
    /// Used whenever log10 < floor, including exact zeros.
    pub floor: f64,
}

impl Default for LogClamp {
    fn default() -> Self {
        Self { ceiling: -0.01, floor: -2.0 }
    }
}

impl LogClamp {
    fn check(&self) -> Result<()> {
        if !(self.floor < self.ceiling && self.ceiling < 0.0) {
            return Err(Error::invalid(format!(
                "log clamp needs floor < ceiling < 0, got [{}, {}]",
                self.floor, self.ceiling
            )));
        }
        Ok(())
    }
}

/// Clamped log10 of nonnegative magnitudes.
pub fn clamp_log<F: Scalar>(values: &Array1<F>) -> Result<Array1<F>> {
    clamp_log_with(values, LogClamp::default())
}

pub fn clamp_log_with<F: Scalar>(values: &Array1<F>, clamp: LogClamp) -> Result<Array1<F>> {
    clamp.check()?;
    let (ceiling, floor) = (F::lit(clamp.ceiling), F::lit(clamp.floor));
    values
        .iter()
        .map(|&v| {
            if !(v >= F::zero()) {
                return Err(Error::invalid(format!("clamp_log expects nonnegative magnitudes, got {v}")));
            }
            // log10(0) = -inf lands on the floor.
            let l = v.log10();
            Ok(if l >= F::zero() {
                ceiling
            } else if l < floor {
                floor
            } else {
                l
            })
        })
        .collect()
}

/// `w_j = -tilde_j / mean(-tilde)`.
pub fn normalize_feature_weights<F: Scalar>(tilde: &Array1<F>) -> Result<Array1<F>> {
    if tilde.is_empty() {
        return Err(Error::invalid("cannot normalize an empty weight vector"));
    }
    if let Some(v) = tilde.iter().find(|v| !(**v < F::zero()) || !v.is_finite()) {
        return Err(Error::invalid(format!("clamped log values must be negative and finite, got {v}")));
    }
    let mean = tilde.iter().map(|&v| -v).sum::<F>() / F::from_usize(tilde.len()).unwrap();
    Ok(tilde.mapv(|v| -v / mean))
}

/// Per-group Euclidean norm of the clamped values, divided by the mean norm across groups.
pub fn group_weight_norms<F: Scalar>(tilde: &Array1<F>, groups: &GroupStructure) -> Result<Array1<F>> {
    if groups.is_empty() {
        return Ok(Array1::zeros(0));
    }
    if groups.size() != tilde.len() {
        return Err(Error::dims(format!(
            "groups index {} features, weights have {}",
            groups.size(),
            tilde.len()
        )));
    }
    let mut norms = Array1::zeros(groups.len());
    for (g, grp) in groups.groups().iter().enumerate() {
        if grp.members.is_empty() {
            return Err(Error::invalid(format!("group `{}` has no members", grp.name)));
        }
        norms[g] = grp.members.iter().map(|&j| tilde[j] * tilde[j]).sum::<F>().sqrt();
    }
    let mean = norms.sum() / F::from_usize(norms.len()).unwrap();
    Ok(norms.mapv(|v| v / mean))
}

fn weights_from_magnitudes<F: Scalar>(
    magnitudes: Array1<F>,
    groups: &GroupStructure,
    clamp: LogClamp,
) -> Result<PenaltyWeights<F>> {
    let tilde = clamp_log_with(&magnitudes, clamp)?;
    let feature_weights = normalize_feature_weights(&tilde)?;
    let group_weights = group_weight_norms(&tilde, groups)?;
    Ok(PenaltyWeights { feature_weights, group_weights })
}

/// Weights for Model 1 from the Model 2 coefficient vector.
pub fn weights_from_gamma<F: Scalar>(gamma: &CoefficientVector<F>, xgroups: &GroupStructure) -> Result<PenaltyWeights<F>> {
    weights_from_gamma_with(gamma, xgroups, LogClamp::default())
}

pub fn weights_from_gamma_with<F: Scalar>(
    gamma: &CoefficientVector<F>,
    xgroups: &GroupStructure,
    clamp: LogClamp,
) -> Result<PenaltyWeights<F>> {
    weights_from_magnitudes(gamma.values.mapv(|v| v.abs()), xgroups, clamp)
}

/// Weights for Model 2 from the Model 1 coefficient matrix (row maxima of |B|).
pub fn weights_from_beta<F: Scalar>(beta: &CoefficientMatrix<F>, xgroups: &GroupStructure) -> Result<PenaltyWeights<F>> {
    weights_from_beta_with(beta, xgroups, LogClamp::default())
}

pub fn weights_from_beta_with<F: Scalar>(
    beta: &CoefficientMatrix<F>,
    xgroups: &GroupStructure,
    clamp: LogClamp,
) -> Result<PenaltyWeights<F>> {
    let row_max = beta
        .values
        .map_axis(Axis(1), |row| row.iter().fold(F::zero(), |m, v| m.max(v.abs())));
    weights_from_magnitudes(row_max, xgroups, clamp)
}
