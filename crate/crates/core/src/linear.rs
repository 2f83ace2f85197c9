//! Least-squares losses: multivariate Model 1 and continuous Model 2.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::data::{
    BlockGroupStructure, CoefficientMatrix, CoefficientVector, ContinuousOutcome, FitResult, GroupStructure,
    IterationCounts, MultiResponse, PenaltyWeights, PredictorMatrix, SolverConfig,
};
use crate::error::{Error, Result};
use crate::penalty::CellPenalty;
use crate::scalar::Scalar;
use crate::solver::{self, Datafit, Iterate};

pub use crate::solver::{backtrack_step, coordinate_prox, nesterov_center, CoordinateState, StepSearch};

/// `(1/2n) ||R||^2` over the columns of a residual matrix, coefficients in cells `j * q + k`.
pub(crate) struct LinearDatafit<F> {
    q: usize,
    columns: Vec<Vec<F>>,
    curvature: Vec<F>,
    targets: Vec<Vec<F>>,
    resid: Vec<Vec<F>>,
    inv_n: F,
    grad0: F,
    l: F,
    current: F,
}

impl<F: Scalar> LinearDatafit<F> {
    pub fn new(x: &Array2<F>, y: &Array2<F>) -> Self {
        let n = x.nrows();
        let inv_n = F::one() / F::from_usize(n).unwrap();
        let columns: Vec<Vec<F>> = x.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
        let curvature = columns.iter().map(|c| c.iter().map(|&v| v * v).sum::<F>() * inv_n).collect();
        let targets: Vec<Vec<F>> = y.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
        Self {
            q: y.ncols(),
            columns,
            curvature,
            resid: targets.clone(),
            targets,
            inv_n,
            grad0: F::zero(),
            l: F::zero(),
            current: F::zero(),
        }
    }

    fn dot(a: &[F], b: &[F]) -> F {
        a.iter().zip(b).map(|(&u, &v)| u * v).sum()
    }
}

impl<F: Scalar> Datafit<F> for LinearDatafit<F> {
    fn focus(&mut self, cell: usize, current: F) {
        let (j, k) = (cell / self.q, cell % self.q);
        self.grad0 = -Self::dot(&self.columns[j], &self.resid[k]) * self.inv_n;
        self.l = self.curvature[j];
        self.current = current;
    }

    fn coord_loss(&mut self, b: F) -> F {
        let d = b - self.current;
        self.grad0 * d + F::lit(0.5) * self.l * d * d
    }

    fn coord_grad(&mut self, b: F) -> F {
        self.grad0 + self.l * (b - self.current)
    }

    fn update(&mut self, cell: usize, old: F, new: F) {
        let (j, k) = (cell / self.q, cell % self.q);
        let d = new - old;
        for (r, &x) in self.resid[k].iter_mut().zip(&self.columns[j]) {
            *r -= d * x;
        }
    }

    fn loss(&mut self) -> F {
        let ss: F = self.resid.iter().flat_map(|r| r.iter()).map(|&v| v * v).sum();
        F::lit(0.5) * ss * self.inv_n
    }

    fn cell_grad(&mut self, cell: usize) -> F {
        let (j, k) = (cell / self.q, cell % self.q);
        -Self::dot(&self.columns[j], &self.resid[k]) * self.inv_n
    }

    fn refresh(&mut self, coef: &[F]) {
        for (r, t) in self.resid.iter_mut().zip(&self.targets) {
            r.copy_from_slice(t);
        }
        for (cell, &b) in coef.iter().enumerate() {
            if b != F::zero() {
                let (j, k) = (cell / self.q, cell % self.q);
                for (r, &x) in self.resid[k].iter_mut().zip(&self.columns[j]) {
                    *r -= b * x;
                }
            }
        }
    }
}

fn check_rows(n_x: usize, n_y: usize) -> Result<()> {
    if n_x != n_y {
        return Err(Error::dims(format!("{n_x} predictor rows but {n_y} response rows")));
    }
    if n_x == 0 {
        return Err(Error::invalid("no observations"));
    }
    Ok(())
}

fn check_beta<F: Scalar>(x: &PredictorMatrix<F>, y: &MultiResponse<F>, b: &CoefficientMatrix<F>) -> Result<()> {
    check_rows(x.n(), y.n())?;
    if b.values.dim() != (x.p(), y.q()) {
        return Err(Error::dims(format!(
            "coefficients are {:?}, expected ({}, {})",
            b.values.dim(),
            x.p(),
            y.q()
        )));
    }
    Ok(())
}

fn check_blocks(x: &PredictorMatrix<impl Scalar>, q: usize, blocks: &BlockGroupStructure) -> Result<()> {
    if blocks.p() != x.p() || blocks.q() != q {
        return Err(Error::dims(format!(
            "blocks index a {}x{} coefficient array, data give {}x{q}",
            blocks.p(),
            blocks.q(),
            x.p()
        )));
    }
    Ok(())
}

/// `Y_k - sum_{j' != j} x_j' beta_j'k`.
pub fn partial_residual<F: Scalar>(
    x: &PredictorMatrix<F>,
    y: &MultiResponse<F>,
    b: &CoefficientMatrix<F>,
    j: usize,
    k: usize,
) -> Result<Array1<F>> {
    check_beta(x, y, b)?;
    if j >= x.p() || k >= y.q() {
        return Err(Error::invalid(format!("cell ({j}, {k}) outside {}x{}", x.p(), y.q())));
    }
    let beta = b.values.column(k);
    let mut r = y.values().column(k).to_owned() - x.values().dot(&beta);
    r.scaled_add(beta[j], &x.column(j));
    Ok(r)
}

/// Derivative of `(1/2n) ||r - x_j beta||^2` at `beta`.
pub fn coordinate_gradient<F: Scalar>(r: ArrayView1<'_, F>, x_j: ArrayView1<'_, F>, beta: F) -> Result<F> {
    if r.len() != x_j.len() || r.is_empty() {
        return Err(Error::dims(format!("residual has {} entries, column {}", r.len(), x_j.len())));
    }
    let n = F::from_usize(r.len()).unwrap();
    let fit: F = r.iter().zip(x_j).map(|(&ri, &xi)| xi * (ri - xi * beta)).sum();
    Ok(-fit / n)
}

/// Proximal update of cell `(j, k)` from `state.beta_center` with step `state.step`.
///
/// Group terms use the norm of the rest of each containing block taken from `b`; a block
/// whose other cells are all zero contributes the scalar multiplier `(1 - t c / |s|)_+`.
#[allow(clippy::too_many_arguments)]
pub fn coordinate_update<F: Scalar>(
    state: &CoordinateState<F>,
    grad: F,
    b: &CoefficientMatrix<F>,
    j: usize,
    k: usize,
    blocks: &BlockGroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<F> {
    if !(state.step > F::zero()) {
        return Err(Error::invalid("step must be positive"));
    }
    if b.values.dim() != (blocks.p(), blocks.q()) || j >= blocks.p() || k >= blocks.q() {
        return Err(Error::dims(format!("cell ({j}, {k}) does not fit the block structure")));
    }
    let pen = CellPenalty::model1(blocks, weights, cfg)?;
    let coef: Vec<F> = b.values.iter().copied().collect();
    let cell = j * blocks.q() + k;
    let groups: Vec<(F, F)> = pen.cell_blocks[cell]
        .iter()
        .map(|&g| {
            let rest: F = pen.blocks[g].iter().filter(|&&c| c != cell).map(|&c| coef[c] * coef[c]).sum();
            (pen.l2[g], rest.sqrt())
        })
        .collect();
    let t = state.step;
    Ok(coordinate_prox(state.beta_center - t * grad, t, pen.l1[cell], &groups))
}

/// One block sweep at step `t`: every block whose soft-thresholded gradient step has norm
/// at most `t` times its group level is set to zero.
pub fn group_zero_sweep<F: Scalar>(
    b: &CoefficientMatrix<F>,
    x: &PredictorMatrix<F>,
    y: &MultiResponse<F>,
    blocks: &BlockGroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
    t: F,
) -> Result<CoefficientMatrix<F>> {
    check_beta(x, y, b)?;
    check_blocks(x, y.q(), blocks)?;
    if !(t > F::zero()) {
        return Err(Error::invalid("step must be positive"));
    }
    let pen = CellPenalty::model1(blocks, weights, cfg)?;
    let mut data = LinearDatafit::new(x.values(), y.values());
    let coef: Vec<F> = b.values.iter().copied().collect();
    data.refresh(&coef);
    let mut it = Iterate::new(&pen, coef);
    solver::sweep(&mut data, &mut it, t, false);
    Ok(CoefficientMatrix { values: Array2::from_shape_vec(b.values.dim(), it.coef).expect("shape kept") })
}

/// Fits Model 1 by accelerated coordinate descent from zero.
pub fn fit_model1<F: Scalar>(
    x: &PredictorMatrix<F>,
    y: &MultiResponse<F>,
    blocks: &BlockGroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<FitResult<CoefficientMatrix<F>, F>> {
    check_rows(x.n(), y.n())?;
    check_blocks(x, y.q(), blocks)?;
    let pen = CellPenalty::model1(blocks, weights, cfg)?;
    let mut data = LinearDatafit::new(x.values(), y.values());
    let out = solver::run(&mut data, &pen, cfg, vec![F::zero(); x.p() * y.q()])?;
    Ok(FitResult {
        coefficients: CoefficientMatrix {
            values: Array2::from_shape_vec((x.p(), y.q()), out.coef).expect("p*q cells"),
        },
        converged: out.converged,
        iterations: IterationCounts { inner: out.max_inner, outer: out.outer, joint: 0 },
        final_objective: out.objective,
        objective_trace: out.trace,
        lambdas_used: cfg.penalties(),
        weights_used: weights.clone(),
        warnings: out.warnings,
    })
}

/// Fits continuous Model 2, the `q = 1` case of [`fit_model1`] with predictor groups as blocks.
pub fn fit_model2_linear<F: Scalar>(
    x: &PredictorMatrix<F>,
    z: &ContinuousOutcome<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<FitResult<CoefficientVector<F>, F>> {
    check_rows(x.n(), z.n())?;
    if groups.size() != x.p() {
        return Err(Error::dims(format!("groups index {} features, X has {}", groups.size(), x.p())));
    }
    let pen = CellPenalty::model2(groups, weights, cfg)?;
    let zcol = z.values().view().insert_axis(Axis(1)).to_owned();
    let mut data = LinearDatafit::new(x.values(), &zcol);
    let out = solver::run(&mut data, &pen, cfg, vec![F::zero(); x.p()])?;
    Ok(FitResult {
        coefficients: CoefficientVector { values: Array1::from(out.coef) },
        converged: out.converged,
        iterations: IterationCounts { inner: out.max_inner, outer: out.outer, joint: 0 },
        final_objective: out.objective,
        objective_trace: out.trace,
        lambdas_used: cfg.penalties(),
        weights_used: weights.clone(),
        warnings: out.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BlockGroup;
    use ndarray::array;

    #[test]
    fn partial_residual_cases() {
        let x = PredictorMatrix::unnamed(array![[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let y = MultiResponse::unnamed(array![[3.0], [6.0]]).unwrap();
        let b = CoefficientMatrix { values: array![[1.0], [1.0]] };
        assert_eq!(partial_residual(&x, &y, &b, 0, 0).unwrap(), array![2.0, 4.0]);
        assert_eq!(partial_residual(&x, &y, &CoefficientMatrix::zeros(2, 1), 1, 0).unwrap(), array![3.0, 6.0]);
        assert!(partial_residual(&x, &y, &b, 2, 0).is_err());
    }

    #[test]
    fn coordinate_gradient_cases() {
        let x = array![1.0, 1.0];
        assert_eq!(coordinate_gradient(x.view(), x.view(), 1.0).unwrap(), 0.0);
        assert_eq!(coordinate_gradient(array![1.0, -1.0].view(), x.view(), 0.0).unwrap(), 0.0);
        assert_eq!(coordinate_gradient(array![2.0, 2.0].view(), x.view(), 0.0).unwrap(), -2.0);
    }

    #[test]
    fn coordinate_update_hand_case() {
        let blocks = BlockGroupStructure::new(1, 1, vec![BlockGroup { name: "g".into(), cells: vec![(0, 0)], x_group: None }]).unwrap();
        let cfg = SolverConfig::with_lambdas(0.2, 0.3);
        let st = CoordinateState::new(1.0f64, 1.0);
        let u = coordinate_update(&st, 0.0, &CoefficientMatrix::zeros(1, 1), 0, 0, &blocks, &PenaltyWeights::uniform(1, 0), &cfg).unwrap();
        assert!((u - 0.5).abs() < 1e-15);
        let free = coordinate_update(&st, 0.4, &CoefficientMatrix::zeros(1, 1), 0, 0, &blocks, &PenaltyWeights::uniform(1, 0), &SolverConfig::default()).unwrap();
        assert!((free - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sweep_single_cell_block() {
        // gradient step leaves 0.5, group threshold 0.6
        let x = PredictorMatrix::unnamed(array![[1.0], [-1.0]]).unwrap();
        let y = MultiResponse::unnamed(array![[0.0], [0.0]]).unwrap();
        let b = CoefficientMatrix { values: array![[0.5]] };
        let blocks = BlockGroupStructure::new(1, 1, vec![BlockGroup { name: "g".into(), cells: vec![(0, 0)], x_group: None }]).unwrap();
        // grad = beta = 0.5 so beta - t grad = 0 with t = 1; use t = 0.5 to leave 0.25
        let out = group_zero_sweep(&b, &x, &y, &blocks, &PenaltyWeights::uniform(1, 0), &SolverConfig::with_lambdas(0.0, 0.6), 0.5).unwrap();
        assert_eq!(out.values[[0, 0]], 0.0);
        let kept = group_zero_sweep(&b, &x, &y, &blocks, &PenaltyWeights::uniform(1, 0), &SolverConfig::with_lambdas(0.0, 0.0), 0.5).unwrap();
        assert_eq!(kept.values[[0, 0]], 0.5);
    }
}
