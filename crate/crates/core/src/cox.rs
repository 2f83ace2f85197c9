//! Penalized Cox regression for the time-to-event version of Model 2.
//!
//! The loss is the Breslow negative log partial likelihood scaled by `1/n`; risk sets are
//! `R_i = {k : time_k >= time_i}`. Sums over risk sets are accumulated in one pass over
//! subjects sorted by decreasing time, with a running log-sum-exp shift so each
//! exponential is taken relative to the maximum linear predictor of its risk set.

use ndarray::{Array1, Axis};

use crate::data::{
    CoefficientVector, FitResult, GroupStructure, IterationCounts, PenaltyWeights, PredictorMatrix,
    SolverConfig, SurvivalOutcome,
};
use crate::error::{Error, Result};
use crate::penalty::CellPenalty;
use crate::scalar::Scalar;
use crate::solver::{self, Datafit};

/// Subjects ordered by decreasing time, grouped into tied-time runs.
#[derive(Debug, Clone)]
pub(crate) struct RiskSets {
    order: Vec<usize>,
    /// `[start, end)` ranges into `order` sharing one time value.
    ties: Vec<(usize, usize)>,
    event: Vec<bool>,
    n: usize,
}

/// Running `sum exp(eta - shift)` with a matching covariate-weighted sum.
struct Accumulator<F> {
    shift: F,
    sum: F,
    weighted: F,
    started: bool,
}

impl<F: Scalar> Accumulator<F> {
    fn new() -> Self {
        Self { shift: F::zero(), sum: F::zero(), weighted: F::zero(), started: false }
    }

    #[inline]
    fn push(&mut self, eta: F, x: F) {
        if !self.started {
            self.started = true;
            self.shift = eta;
            self.sum = F::one();
            self.weighted = x;
        } else if eta > self.shift {
            let r = (self.shift - eta).exp();
            self.sum = self.sum * r + F::one();
            self.weighted = self.weighted * r + x;
            self.shift = eta;
        } else {
            let e = (eta - self.shift).exp();
            self.sum += e;
            self.weighted += x * e;
        }
    }

    #[inline]
    fn log_sum(&self) -> F {
        self.shift + self.sum.ln()
    }

    #[inline]
    fn mean(&self) -> F {
        self.weighted / self.sum
    }
}

impl RiskSets {
    pub fn new<F: Scalar>(surv: &SurvivalOutcome<F>) -> Self {
        let time = surv.time();
        let mut order: Vec<usize> = (0..surv.n()).collect();
        order.sort_by(|&a, &b| time[b].partial_cmp(&time[a]).expect("finite times").then(a.cmp(&b)));
        let mut ties = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && time[order[end]] == time[order[start]] {
                end += 1;
            }
            ties.push((start, end));
            start = end;
        }
        Self { order, ties, event: surv.event().to_vec(), n: surv.n() }
    }

    /// `(1/n) sum_{i in D} [log sum_{R_i} exp(eta) - eta_i]`.
    pub fn loss<F: Scalar>(&self, eta: &[F]) -> F {
        let mut acc = Accumulator::new();
        let mut total = F::zero();
        for &(s, e) in &self.ties {
            for &k in &self.order[s..e] {
                acc.push(eta[k], F::zero());
            }
            let lse = acc.log_sum();
            for &i in &self.order[s..e] {
                if self.event[i] {
                    total += lse - eta[i];
                }
            }
        }
        total / F::from_usize(self.n).unwrap()
    }

    /// Loss and its derivative along covariate column `x`.
    pub fn loss_and_directional<F: Scalar>(&self, eta: &[F], x: &[F]) -> (F, F) {
        let mut acc = Accumulator::new();
        let (mut total, mut grad) = (F::zero(), F::zero());
        for &(s, e) in &self.ties {
            for &k in &self.order[s..e] {
                acc.push(eta[k], x[k]);
            }
            let (lse, mean) = (acc.log_sum(), acc.mean());
            for &i in &self.order[s..e] {
                if self.event[i] {
                    total += lse - eta[i];
                    grad += mean - x[i];
                }
            }
        }
        let nf = F::from_usize(self.n).unwrap();
        (total / nf, grad / nf)
    }

    /// Full gradient, one pass per covariate.
    pub fn gradient<F: Scalar>(&self, eta: &[F], columns: &[Vec<F>]) -> Array1<F> {
        columns.iter().map(|x| self.loss_and_directional(eta, x).1).collect()
    }
}

fn columns<F: Scalar>(x: &PredictorMatrix<F>) -> Vec<Vec<F>> {
    x.values().axis_iter(Axis(1)).map(|c| c.to_vec()).collect()
}

fn check_dims<F: Scalar>(x: &PredictorMatrix<F>, surv: &SurvivalOutcome<F>, p: Option<usize>) -> Result<()> {
    if x.n() != surv.n() {
        return Err(Error::dims(format!("{} predictor rows but {} survival records", x.n(), surv.n())));
    }
    if let Some(p) = p {
        if p != x.p() {
            return Err(Error::dims(format!("{p} coefficients for {} predictors", x.p())));
        }
    }
    Ok(())
}

/// Risk scores `X gamma`.
pub fn linear_predictor<F: Scalar>(x: &PredictorMatrix<F>, gamma: &CoefficientVector<F>) -> Result<Array1<F>> {
    if gamma.values.len() != x.p() {
        return Err(Error::dims(format!("{} coefficients for {} predictors", gamma.values.len(), x.p())));
    }
    Ok(x.values().dot(&gamma.values))
}

/// Scaled negative log partial likelihood (no penalty).
pub fn partial_likelihood_loss<F: Scalar>(
    x: &PredictorMatrix<F>,
    surv: &SurvivalOutcome<F>,
    gamma: &CoefficientVector<F>,
) -> Result<F> {
    check_dims(x, surv, Some(gamma.values.len()))?;
    let eta = linear_predictor(x, gamma)?;
    Ok(RiskSets::new(surv).loss(eta.as_slice().expect("contiguous")))
}

/// Gradient of the scaled negative log partial likelihood: for each event, the risk-set
/// weighted covariate mean minus the event subject's covariates, averaged over `n`.
pub fn cox_gradient<F: Scalar>(
    x: &PredictorMatrix<F>,
    surv: &SurvivalOutcome<F>,
    gamma: &CoefficientVector<F>,
) -> Result<Array1<F>> {
    check_dims(x, surv, Some(gamma.values.len()))?;
    if gamma.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("coefficients must be finite"));
    }
    let eta = linear_predictor(x, gamma)?;
    Ok(RiskSets::new(surv).gradient(eta.as_slice().expect("contiguous"), &columns(x)))
}

/// Coordinate-wise view of the Cox loss for the shared solver.
pub(crate) struct CoxDatafit<F> {
    columns: Vec<Vec<F>>,
    risk: RiskSets,
    eta: Vec<F>,
    scratch: Vec<F>,
    focus: usize,
    focus_value: F,
}

impl<F: Scalar> CoxDatafit<F> {
    pub fn new(x: &PredictorMatrix<F>, surv: &SurvivalOutcome<F>) -> Self {
        Self {
            columns: columns(x),
            risk: RiskSets::new(surv),
            eta: vec![F::zero(); x.n()],
            scratch: vec![F::zero(); x.n()],
            focus: 0,
            focus_value: F::zero(),
        }
    }

    fn shifted(&mut self, b: F) {
        let d = b - self.focus_value;
        let x = &self.columns[self.focus];
        for ((s, &e), &xi) in self.scratch.iter_mut().zip(&self.eta).zip(x) {
            *s = e + d * xi;
        }
    }
}

impl<F: Scalar> Datafit<F> for CoxDatafit<F> {
    fn focus(&mut self, cell: usize, current: F) {
        self.focus = cell;
        self.focus_value = current;
    }

    fn coord_loss(&mut self, b: F) -> F {
        self.shifted(b);
        self.risk.loss(&self.scratch)
    }

    fn coord_grad(&mut self, b: F) -> F {
        self.shifted(b);
        self.risk.loss_and_directional(&self.scratch, &self.columns[self.focus]).1
    }

    fn update(&mut self, cell: usize, old: F, new: F) {
        let d = new - old;
        for (e, &xi) in self.eta.iter_mut().zip(&self.columns[cell]) {
            *e += d * xi;
        }
    }

    fn loss(&mut self) -> F {
        self.risk.loss(&self.eta)
    }

    fn cell_grad(&mut self, cell: usize) -> F {
        self.risk.loss_and_directional(&self.eta, &self.columns[cell]).1
    }

    fn refresh(&mut self, coef: &[F]) {
        self.eta.iter_mut().for_each(|e| *e = F::zero());
        for (j, &b) in coef.iter().enumerate() {
            if b != F::zero() {
                for (e, &xi) in self.eta.iter_mut().zip(&self.columns[j]) {
                    *e += b * xi;
                }
            }
        }
    }
}

/// Fits the weighted sparse group lasso Cox model.
pub fn fit_model2_cox<F: Scalar>(
    x: &PredictorMatrix<F>,
    surv: &SurvivalOutcome<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<FitResult<CoefficientVector<F>, F>> {
    check_dims(x, surv, None)?;
    if groups.size() != x.p() {
        return Err(Error::dims(format!("groups index {} features, X has {}", groups.size(), x.p())));
    }
    if surv.n_events() == 0 {
        return Err(Error::invalid("survival outcome has no events"));
    }
    let pen = CellPenalty::model2(groups, weights, cfg)?;
    let mut data = CoxDatafit::new(x, surv);
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
