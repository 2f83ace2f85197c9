//! K-fold cross-validated grid search over `(lambda_feature, lambda_group)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cox::RiskSets;
use crate::data::{
    BlockGroupStructure, ContinuousOutcome, GroupStructure, LambdaGroup, MultiResponse, PenaltyWeights,
    PredictorMatrix, SolverConfig, SurvivalOutcome,
};
use crate::error::{Error, Result};
use crate::scalar::{weight_pow, Scalar};
use crate::{cox, linear};

/// A seeded partition of `0..n` into folds whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    pub folds: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl Folds {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Indices outside fold `f`, ascending.
    pub fn training(&self, f: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self.folds.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, v)| v.iter().copied()).collect();
        idx.sort_unstable();
        idx
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 <= folds <= n, got {k} folds for {n} observations")));
    }
    Ok(())
}

/// Deals `order` round robin into `k` folds, each fold sorted.
fn deal(order: impl IntoIterator<Item = usize>, k: usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<Folds> {
    check_k(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Folds { folds: deal(order, k), warnings: Vec::new() })
}

/// Folds stratified on event status: events are dealt first, then censored subjects
/// continue the same rotation, so every fold gets events when there are at least `k`.
pub fn make_stratified_folds(event: &[bool], k: usize, seed: u64) -> Result<Folds> {
    let n = event.len();
    check_k(n, k)?;
    let n_events = event.iter().filter(|&&e| e).count();
    if n_events < k {
        let mut f = make_folds(n, k, seed)?;
        let msg = format!("only {n_events} events for {k} folds; folds are not stratified");
        log::warn!("{msg}");
        f.warnings.push(msg);
        return Ok(f);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<usize> = (0..n).filter(|&i| event[i]).collect();
    let mut censored: Vec<usize> = (0..n).filter(|&i| !event[i]).collect();
    events.shuffle(&mut rng);
    censored.shuffle(&mut rng);
    Ok(Folds { folds: deal(events.into_iter().chain(censored), k), warnings: Vec::new() })
}

/// Data and structure for one cross-validated model.
#[derive(Debug, Clone, Copy)]
pub enum CvProblem<'a, F> {
    Model1 { x: &'a PredictorMatrix<F>, y: &'a MultiResponse<F>, blocks: &'a BlockGroupStructure },
    Model2Linear { x: &'a PredictorMatrix<F>, z: &'a ContinuousOutcome<F>, groups: &'a GroupStructure },
    Model2Cox { x: &'a PredictorMatrix<F>, surv: &'a SurvivalOutcome<F>, groups: &'a GroupStructure },
}

impl<F: Scalar> CvProblem<'_, F> {
    pub fn n(&self) -> usize {
        self.x().n()
    }

    fn x(&self) -> &PredictorMatrix<F> {
        match self {
            CvProblem::Model1 { x, .. } | CvProblem::Model2Linear { x, .. } | CvProblem::Model2Cox { x, .. } => x,
        }
    }

    /// Number of penalty blocks (`lambda_group` entries).
    pub fn n_blocks(&self) -> usize {
        match self {
            CvProblem::Model1 { blocks, .. } => blocks.len(),
            CvProblem::Model2Linear { groups, .. } | CvProblem::Model2Cox { groups, .. } => groups.len(),
        }
    }

    pub fn folds(&self, k: usize, seed: u64) -> Result<Folds> {
        match self {
            CvProblem::Model2Cox { surv, .. } => make_stratified_folds(surv.event(), k, seed),
            _ => make_folds(self.n(), k, seed),
        }
    }

    /// Fits on `train` and returns the held-out error on `test`.
    fn fold_error(&self, weights: &PenaltyWeights<F>, cfg: &SolverConfig<F>, train: &[usize], test: &[usize]) -> Result<F> {
        match *self {
            CvProblem::Model1 { x, y, blocks } => {
                let fit = linear::fit_model1(&x.select_rows(train), &y.select_rows(train), blocks, weights, cfg)?;
                let xt = x.select_rows(test);
                let r = y.select_rows(test).values() - &xt.values().dot(&fit.coefficients.values);
                Ok(r.iter().map(|&v| v * v).sum())
            }
            CvProblem::Model2Linear { x, z, groups } => {
                let fit = linear::fit_model2_linear(&x.select_rows(train), &z.select_rows(train), groups, weights, cfg)?;
                let xt = x.select_rows(test);
                let r = z.select_rows(test).values() - &xt.values().dot(&fit.coefficients.values);
                Ok(r.iter().map(|&v| v * v).sum())
            }
            CvProblem::Model2Cox { x, surv, groups } => {
                let fit = cox::fit_model2_cox(&x.select_rows(train), &surv.select_rows(train)?, groups, weights, cfg)?;
                let st = surv.select_rows(test)?;
                let eta = cox::linear_predictor(&x.select_rows(test), &fit.coefficients)?;
                Ok(cox_deviance(&st, eta.as_slice().expect("contiguous")))
            }
        }
    }

    /// Largest absolute loss gradient at zero per feature: `max_k |x_j' y_k| / n` for the
    /// linear models, `|grad_j(0)|` for Cox.
    fn gradient_at_zero(&self) -> Result<Vec<F>> {
        let inv_n = F::one() / F::from_usize(self.n()).unwrap();
        match *self {
            CvProblem::Model1 { x, y, .. } => {
                let g = x.values().t().dot(y.values());
                Ok(g.rows().into_iter().map(|r| r.iter().fold(F::zero(), |m, &v| m.max(v.abs())) * inv_n).collect())
            }
            CvProblem::Model2Linear { x, z, .. } => Ok(x.values().t().dot(z.values()).iter().map(|v| v.abs() * inv_n).collect()),
            CvProblem::Model2Cox { x, surv, .. } => {
                let g = cox::cox_gradient(x, surv, &crate::data::CoefficientVector::zeros(x.p()))?;
                Ok(g.iter().map(|v| v.abs()).collect())
            }
        }
    }
}

/// `2 sum_{i in D} [log sum_{R_i} exp(eta) - eta_i]` over the held-out subjects.
pub fn cox_deviance<F: Scalar>(surv: &SurvivalOutcome<F>, eta: &[F]) -> F {
    let n = F::from_usize(surv.n()).unwrap();
    F::lit(2.0) * n * RiskSets::new(surv).loss(eta)
}

/// Grid point and its per-fold held-out errors; failed fits score `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow<F> {
    pub lambda_feature: F,
    pub lambda_group: F,
    pub fold_errors: Vec<F>,
    pub mean: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvTable<F> {
    pub rows: Vec<CvRow<F>>,
    pub best: usize,
    pub warnings: Vec<String>,
}

impl<F: Scalar> CvTable<F> {
    pub fn best_pair(&self) -> (F, F) {
        let r = &self.rows[self.best];
        (r.lambda_feature, r.lambda_group)
    }
}

/// Index of the smallest mean; ties go to the larger `lambda_feature`, then the larger
/// `lambda_group`.
fn argmin<F: Scalar>(rows: &[CvRow<F>]) -> usize {
    let mut best = 0;
    for (i, r) in rows.iter().enumerate().skip(1) {
        let b = &rows[best];
        let better = r.mean < b.mean
            || (r.mean == b.mean
                && (r.lambda_feature > b.lambda_feature
                    || (r.lambda_feature == b.lambda_feature && r.lambda_group > b.lambda_group)));
        if better {
            best = i;
        }
    }
    best
}

/// Exhaustive k-fold search. Grid × fold fits run in parallel; every grid point uses the
/// same folds.
pub fn cv_grid_search<F: Scalar>(
    problem: &CvProblem<'_, F>,
    weights: &PenaltyWeights<F>,
    grid: &[(F, F)],
    k: usize,
    seed: u64,
    base: &SolverConfig<F>,
) -> Result<CvTable<F>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty tuning grid"));
    }
    let folds = problem.folds(k, seed)?;
    let splits: Vec<(Vec<usize>, &Vec<usize>)> = (0..k).map(|f| (folds.training(f), &folds.folds[f])).collect();
    let errors: Vec<F> = (0..grid.len() * k)
        .into_par_iter()
        .map(|cell| {
            let (g, f) = (cell / k, cell % k);
            let (lf, lg) = grid[g];
            let cfg = SolverConfig { lambda_feature: lf, lambda_group: LambdaGroup::Uniform(lg), ..base.clone() };
            match problem.fold_error(weights, &cfg, &splits[f].0, splits[f].1) {
                Ok(e) if e.is_finite() => e,
                Ok(_) => F::infinity(),
                Err(e) => {
                    log::warn!("cv fit at ({lf}, {lg}) fold {f} failed: {e}");
                    F::infinity()
                }
            }
        })
        .collect();
    let kf = F::from_usize(k).unwrap();
    let rows: Vec<CvRow<F>> = grid
        .iter()
        .enumerate()
        .map(|(g, &(lf, lg))| {
            let fold_errors = errors[g * k..(g + 1) * k].to_vec();
            let mean = fold_errors.iter().copied().sum::<F>() / kf;
            CvRow { lambda_feature: lf, lambda_group: lg, fold_errors, mean }
        })
        .collect();
    let mut warnings = folds.warnings;
    let failed = errors.iter().filter(|e| e.is_infinite()).count();
    if failed > 0 {
        warnings.push(format!("{failed} of {} cross-validation fits failed", errors.len()));
    }
    Ok(CvTable { best: argmin(&rows), rows, warnings })
}

/// Smallest `lambda_feature` at which the all-zero solution is stationary with no group
/// penalty, `max_j |grad_j(0)| / w_j^alpha`.
pub fn lambda_max<F: Scalar>(problem: &CvProblem<'_, F>, weights: &PenaltyWeights<F>, alpha: F) -> Result<F> {
    let g = problem.gradient_at_zero()?;
    if weights.feature_weights.len() != g.len() {
        return Err(Error::dims(format!("{} feature weights for {} predictors", weights.feature_weights.len(), g.len())));
    }
    Ok(g.iter().zip(weights.feature_weights.iter()).map(|(&v, &w)| v / weight_pow(w, alpha)).fold(F::zero(), F::max))
}

/// `size` log-spaced feature levels from `lambda_max` down to `lambda_max / 100`, each
/// paired with group levels at 0, 0.5 and 1 times the feature level.
pub fn default_grid<F: Scalar>(
    problem: &CvProblem<'_, F>,
    weights: &PenaltyWeights<F>,
    alpha: F,
    size: usize,
) -> Result<Vec<(F, F)>> {
    if size == 0 {
        return Err(Error::invalid("grid size must be positive"));
    }
    let mut top = lambda_max(problem, weights, alpha)? * (F::one() + F::lit(1e-9));
    if !(top > F::zero()) {
        // Zero gradient at zero: any positive level gives the null model.
        top = F::one();
    }
    let mut grid = Vec::with_capacity(3 * size);
    for i in 0..size {
        let frac = if size == 1 { 0.0 } else { i as f64 / (size - 1) as f64 };
        let lf = top * F::lit(0.01f64.powf(frac));
        for r in [0.0, 0.5, 1.0] {
            grid.push((lf, lf * F::lit(r)));
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn fold_sizes() {
        let f = make_folds(10, 5, 1).unwrap();
        assert!(f.folds.iter().all(|v| v.len() == 2));
        let f = make_folds(7, 5, 1).unwrap();
        let mut sizes: Vec<usize> = f.folds.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![2, 2, 1, 1, 1]);
        assert_eq!(make_folds(7, 5, 9).unwrap(), make_folds(7, 5, 9).unwrap());
        assert!(make_folds(3, 5, 0).is_err());
        assert!(make_folds(3, 1, 0).is_err());
    }

    #[test]
    fn folds_partition_the_indices() {
        let f = make_folds(23, 4, 3).unwrap();
        let mut all: Vec<usize> = f.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert_eq!(f.training(0).len() + f.folds[0].len(), 23);
    }

    #[test]
    fn stratified_folds_spread_events() {
        let event: Vec<bool> = (0..20).map(|i| i % 4 == 0).collect();
        let f = make_stratified_folds(&event, 5, 2).unwrap();
        assert!(f.folds.iter().all(|v| v.iter().filter(|&&i| event[i]).count() == 1));
        assert!(f.folds.iter().all(|v| v.len() == 4));
        let few = make_stratified_folds(&[true, false, false, false, false], 3, 0).unwrap();
        assert_eq!(few.warnings.len(), 1);
    }

    #[test]
    fn argmin_prefers_sparser_ties() {
        let row = |lf: f64, lg: f64, m: f64| CvRow { lambda_feature: lf, lambda_group: lg, fold_errors: vec![m], mean: m };
        assert_eq!(argmin(&[row(0.1, 0.0, 1.0), row(0.2, 0.0, 1.0), row(0.2, 0.1, 1.0), row(0.05, 0.0, 2.0)]), 2);
        assert_eq!(argmin(&[row(0.1, 0.0, 1.0), row(0.2, 0.0, 0.5)]), 1);
    }

    #[test]
    fn single_point_grid_and_lambda_max() {
        let x = PredictorMatrix::unnamed(array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5], [0.3, -2.0], [2.0, 1.0]]).unwrap();
        let z = ContinuousOutcome::new(array![1.0, -1.0, 0.5, 0.0, 2.0, 1.5]).unwrap();
        let groups = GroupStructure::contiguous(2, 1, "g").unwrap();
        let w = PenaltyWeights::uniform(2, 1);
        let prob = CvProblem::Model2Linear { x: &x, z: &z, groups: &groups };
        let t = cv_grid_search(&prob, &w, &[(0.1, 0.0)], 3, 1, &SolverConfig::default()).unwrap();
        assert_eq!(t.best, 0);
        let grid = default_grid(&prob, &w, 1.0, 5).unwrap();
        assert_eq!(grid.len(), 15);
        assert!(grid.iter().all(|&(lf, _)| lf > 0.0));
        let top = grid[0].0;
        let fit = linear::fit_model2_linear(&x, &z, &groups, &w, &SolverConfig::with_lambdas(top, 0.0)).unwrap();
        assert_eq!(fit.coefficients.nonzero_count(), 0);
    }
}
