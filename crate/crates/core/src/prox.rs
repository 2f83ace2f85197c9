//! Soft thresholding, penalized objectives and stationarity residuals.

use ndarray::{Array1, Axis};

use crate::cox::{linear_predictor, RiskSets};
use crate::data::{
    BlockGroupStructure, CoefficientMatrix, CoefficientVector, ContinuousOutcome, GroupStructure, MultiResponse,
    PenaltyWeights, PredictorMatrix, SolverConfig, SurvivalOutcome,
};
use crate::error::{Error, Result};
use crate::penalty::CellPenalty;
use crate::scalar::Scalar;
use crate::solver::soft_threshold_scalar;

/// `sign(z) * max(|z| - thr, 0)`.
pub fn soft_threshold<F: Scalar>(z: F, thr: F) -> Result<F> {
    check_thr(thr)?;
    Ok(soft_threshold_scalar(z, thr))
}

/// Elementwise [`soft_threshold`].
pub fn soft_threshold_vec<F: Scalar>(z: &Array1<F>, thr: F) -> Result<Array1<F>> {
    check_thr(thr)?;
    Ok(z.mapv(|v| soft_threshold_scalar(v, thr)))
}

fn check_thr<F: Scalar>(thr: F) -> Result<()> {
    if thr >= F::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold must be nonnegative, got {thr}")))
    }
}

fn model1_parts<F: Scalar>(
    x: &PredictorMatrix<F>,
    y: &MultiResponse<F>,
    b: &CoefficientMatrix<F>,
    blocks: &BlockGroupStructure,
) -> Result<ndarray::Array2<F>> {
    if x.n() != y.n() {
        return Err(Error::dims(format!("{} predictor rows but {} response rows", x.n(), y.n())));
    }
    if b.values.dim() != (x.p(), y.q()) || blocks.p() != x.p() || blocks.q() != y.q() {
        return Err(Error::dims(format!(
            "coefficients {:?} and blocks {}x{} must match data {}x{}",
            b.values.dim(),
            blocks.p(),
            blocks.q(),
            x.p(),
            y.q()
        )));
    }
    Ok(y.values() - &x.values().dot(&b.values))
}

fn model2_parts<F: Scalar>(
    x: &PredictorMatrix<F>,
    n_out: usize,
    g: &CoefficientVector<F>,
    groups: &GroupStructure,
) -> Result<()> {
    if x.n() != n_out {
        return Err(Error::dims(format!("{} predictor rows but {n_out} outcomes", x.n())));
    }
    if g.values.len() != x.p() || groups.size() != x.p() {
        return Err(Error::dims(format!(
            "{} coefficients and groups over {} features for {} predictors",
            g.values.len(),
            groups.size(),
            x.p()
        )));
    }
    Ok(())
}

fn inv_n<F: Scalar>(n: usize) -> F {
    F::one() / F::from_usize(n).unwrap()
}

/// `(1/2n) ||Y - XB||^2` plus the weighted lasso and block penalties.
pub fn objective_model1<F: Scalar>(
    x: &PredictorMatrix<F>,
    y: &MultiResponse<F>,
    b: &CoefficientMatrix<F>,
    blocks: &BlockGroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    let r = model1_parts(x, y, b, blocks)?;
    let pen = CellPenalty::model1(blocks, weights, cfg)?;
    let coef: Vec<F> = b.values.iter().copied().collect();
    Ok(F::lit(0.5) * inv_n::<F>(x.n()) * r.iter().map(|&v| v * v).sum::<F>() + pen.value(&coef))
}

/// `(1/2n) ||Z - XG||^2` plus the weighted lasso and group penalties.
pub fn objective_model2_linear<F: Scalar>(
    x: &PredictorMatrix<F>,
    z: &ContinuousOutcome<F>,
    g: &CoefficientVector<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    model2_parts(x, z.n(), g, groups)?;
    let pen = CellPenalty::model2(groups, weights, cfg)?;
    let r = z.values() - &x.values().dot(&g.values);
    let coef = g.values.to_vec();
    Ok(F::lit(0.5) * inv_n::<F>(x.n()) * r.iter().map(|&v| v * v).sum::<F>() + pen.value(&coef))
}

/// Scaled negative log partial likelihood plus penalties.
pub fn objective_model2_cox<F: Scalar>(
    x: &PredictorMatrix<F>,
    surv: &SurvivalOutcome<F>,
    g: &CoefficientVector<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    model2_parts(x, surv.n(), g, groups)?;
    if surv.n_events() == 0 {
        return Err(Error::invalid("survival outcome has no events"));
    }
    let pen = CellPenalty::model2(groups, weights, cfg)?;
    let eta = linear_predictor(x, g)?;
    let loss = RiskSets::new(surv).loss(eta.as_slice().expect("contiguous"));
    Ok(loss + pen.value(&g.values.to_vec()))
}

/// Worst violation of the least-squares stationarity conditions.
///
/// `s[c]` is `x_j' r^(-j)_k` for cell `c = j * q + k` and `col_sq[j]` is `||x_j||^2`.
/// Cells whose blocks are all nonzero must satisfy the closed-form fixed point; every zero
/// block must satisfy the thresholded-norm inequality.
fn kkt_linear<F: Scalar>(pen: &CellPenalty<F>, coef: &[F], s: &[F], col_sq: &[F], n: usize) -> F {
    let nf = F::from_usize(n).unwrap();
    let norms: Vec<F> = (0..pen.blocks.len()).map(|g| pen.block_sq_norm(coef, g).sqrt()).collect();
    let mut worst = F::zero();
    for c in 0..pen.n_cells() {
        if pen.cell_blocks[c].iter().any(|&g| norms[g] == F::zero()) {
            continue;
        }
        let denom = col_sq[c / pen.q] + nf * pen.cell_blocks[c].iter().map(|&g| pen.l2[g] / norms[g]).sum::<F>();
        let num = soft_threshold_scalar(s[c], nf * pen.l1[c]);
        let rhs = if denom > F::zero() { num / denom } else { F::zero() };
        worst = worst.max((coef[c] - rhs).abs());
    }
    for (g, cells) in pen.blocks.iter().enumerate() {
        if norms[g] != F::zero() {
            continue;
        }
        let excess: F = cells
            .iter()
            .map(|&c| {
                let e = (s[c].abs() / nf - pen.l1[c]).max(F::zero());
                e * e
            })
            .sum();
        worst = worst.max((excess.sqrt() - pen.l2[g]).max(F::zero()));
    }
    worst
}

pub fn kkt_residual_model1<F: Scalar>(
    x: &PredictorMatrix<F>,
    y: &MultiResponse<F>,
    b: &CoefficientMatrix<F>,
    blocks: &BlockGroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    let r = model1_parts(x, y, b, blocks)?;
    let pen = CellPenalty::model1(blocks, weights, cfg)?;
    let xtr = x.values().t().dot(&r);
    let col_sq: Vec<F> = x.values().axis_iter(Axis(1)).map(|c| c.dot(&c)).collect();
    let (p, q) = b.values.dim();
    let mut s = Vec::with_capacity(p * q);
    for j in 0..p {
        for k in 0..q {
            s.push(xtr[[j, k]] + col_sq[j] * b.values[[j, k]]);
        }
    }
    let coef: Vec<F> = b.values.iter().copied().collect();
    Ok(kkt_linear(&pen, &coef, &s, &col_sq, x.n()))
}

pub fn kkt_residual_model2<F: Scalar>(
    x: &PredictorMatrix<F>,
    z: &ContinuousOutcome<F>,
    g: &CoefficientVector<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    model2_parts(x, z.n(), g, groups)?;
    let pen = CellPenalty::model2(groups, weights, cfg)?;
    let r = z.values() - &x.values().dot(&g.values);
    let xtr = x.values().t().dot(&r);
    let col_sq: Vec<F> = x.values().axis_iter(Axis(1)).map(|c| c.dot(&c)).collect();
    let s: Vec<F> = (0..x.p()).map(|j| xtr[j] + col_sq[j] * g.values[j]).collect();
    Ok(kkt_linear(&pen, &g.values.to_vec(), &s, &col_sq, x.n()))
}

/// Worst violation of the Cox stationarity conditions in gradient form: nonzero
/// coefficients need a zero subgradient sum, zero coefficients in nonzero groups need
/// `|grad| <= lambda w`, and zero groups need the thresholded gradient norm within the
/// group level.
pub fn kkt_residual_cox<F: Scalar>(
    x: &PredictorMatrix<F>,
    surv: &SurvivalOutcome<F>,
    g: &CoefficientVector<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    model2_parts(x, surv.n(), g, groups)?;
    let pen = CellPenalty::model2(groups, weights, cfg)?;
    let grad = crate::cox::cox_gradient(x, surv, g)?;
    let coef = g.values.to_vec();
    let norms: Vec<F> = (0..pen.blocks.len()).map(|b| pen.block_sq_norm(&coef, b).sqrt()).collect();
    let mut worst = F::zero();
    for j in 0..coef.len() {
        if pen.cell_blocks[j].iter().any(|&b| norms[b] == F::zero()) {
            continue;
        }
        let v = if coef[j] != F::zero() {
            let grp: F = pen.cell_blocks[j].iter().map(|&b| pen.l2[b] * coef[j] / norms[b]).sum();
            (grad[j] + pen.l1[j].copysign(coef[j]) + grp).abs()
        } else {
            (grad[j].abs() - pen.l1[j]).max(F::zero())
        };
        worst = worst.max(v);
    }
    for (b, cells) in pen.blocks.iter().enumerate() {
        if norms[b] != F::zero() {
            continue;
        }
        let excess: F = cells
            .iter()
            .map(|&j| {
                let e = (grad[j].abs() - pen.l1[j]).max(F::zero());
                e * e
            })
            .sum();
        worst = worst.max((excess.sqrt() - pen.l2[b]).max(F::zero()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_threshold_rejects_negative_threshold() {
        assert!(soft_threshold(1.0, -0.1).is_err());
        assert_eq!(soft_threshold_vec(&array![3.0, -0.5, -3.0], 1.0).unwrap(), array![2.0, 0.0, -2.0]);
    }

    #[test]
    fn soft_threshold_is_the_prox_of_the_absolute_value() {
        for &(z, thr) in &[(0.3, 0.1), (-2.0, 0.7), (0.05, 0.2), (1.0, 0.0)] {
            let u = soft_threshold(z, thr).unwrap();
            let f = |v: f64| 0.5 * (v - z) * (v - z) + thr * v.abs();
            for i in 0..=4000 {
                let v = -3.0 + 6.0 * i as f64 / 4000.0;
                assert!(f(u) <= f(v) + 1e-15);
            }
        }
    }

    #[test]
    fn scalar_objective_hand_case() {
        let x = PredictorMatrix::unnamed(array![[1.0]]).unwrap();
        let y = MultiResponse::unnamed(array![[2.0]]).unwrap();
        let b = CoefficientMatrix { values: array![[1.0]] };
        let cfg = SolverConfig::with_lambdas(1.0, 0.0);
        let v = objective_model1(&x, &y, &b, &BlockGroupStructure::empty(1, 1), &PenaltyWeights::uniform(1, 0), &cfg).unwrap();
        assert_eq!(v, 1.5);
        let z = ContinuousOutcome::new(array![2.0]).unwrap();
        let g = CoefficientVector { values: array![1.0] };
        let groups = GroupStructure::from_members(1, vec![("g", vec![0])]).unwrap();
        let cfg2 = SolverConfig::with_lambdas(1.0, 0.0);
        let v2 = objective_model2_linear(&x, &z, &g, &groups, &PenaltyWeights::uniform(1, 1), &cfg2).unwrap();
        assert_eq!(v2, 1.5);
    }

    #[test]
    fn zero_coefficients_leave_only_the_loss() {
        let x = PredictorMatrix::unnamed(array![[1.0, 0.5], [0.0, 2.0], [1.0, -1.0]]).unwrap();
        let y = MultiResponse::unnamed(array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]]).unwrap();
        let cfg = SolverConfig::with_lambdas(4.0, 9.0);
        let v: f64 = objective_model1(&x, &y, &CoefficientMatrix::zeros(2, 2), &BlockGroupStructure::empty(2, 2), &PenaltyWeights::uniform(2, 0), &cfg).unwrap();
        assert!((v - 15.25 / 6.0).abs() < 1e-15);
        let huge = SolverConfig::with_lambdas(1e6, 1e6);
        let kkt = kkt_residual_model1(&x, &y, &CoefficientMatrix::zeros(2, 2), &BlockGroupStructure::empty(2, 2), &PenaltyWeights::uniform(2, 0), &huge).unwrap();
        assert_eq!(kkt, 0.0);
    }

    #[test]
    fn cox_objective_at_zero() {
        let x = PredictorMatrix::unnamed(array![[0.3], [-1.0]]).unwrap();
        let surv = SurvivalOutcome::new(array![1.0, 2.0], vec![true, true]).unwrap();
        let groups = GroupStructure::from_members(1, vec![("g", vec![0])]).unwrap();
        let v = objective_model2_cox(&x, &surv, &CoefficientVector::zeros(1), &groups, &PenaltyWeights::uniform(1, 1), &SolverConfig::with_lambdas(1.0, 1.0)).unwrap();
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-15);
        if let Ok(none) = SurvivalOutcome::new(array![1.0, 2.0], vec![false, false]) {
            assert!(objective_model2_cox(&x, &none, &CoefficientVector::zeros(1), &groups, &PenaltyWeights::uniform(1, 1), &SolverConfig::default()).is_err());
        }
    }
}
