//! Alternating joint fit: Model 1 with weights from Model 2, then Model 2 with weights from
//! Model 1, until both coefficient sets stop moving.

use crate::data::{
    align_features, cross_block_groups, BlockGroupStructure, CoefficientMatrix, CoefficientVector, FeatureAlignment,
    FitResult, GroupStructure, LambdaGroup, MultiResponse, Outcome, PenaltyWeights, PredictorMatrix, SolverConfig,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tuning::{cv_grid_search, default_grid, CvProblem, CvTable};
use crate::weights::{weights_from_beta, weights_from_gamma};
use crate::{cox, linear};

/// Cross-validation settings shared by both models.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSettings<F> {
    pub folds: usize,
    pub seed: u64,
    /// Points per feature level in the default grid (three group ratios each).
    pub grid_size: usize,
    /// Explicit grids override the default ones.
    pub grid_model1: Option<Vec<(F, F)>>,
    pub grid_model2: Option<Vec<(F, F)>>,
}

impl<F> Default for CvSettings<F> {
    fn default() -> Self {
        Self { folds: 5, seed: 1, grid_size: 8, grid_model1: None, grid_model2: None }
    }
}

/// When the penalty levels are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tuning {
    /// Use the levels in the two solver configs.
    Fixed,
    /// Tune Model 1 with unit weights and Model 2 with the first pass's Model 1 weights,
    /// then keep those levels.
    #[default]
    Once,
    /// Re-tune both models at every pass with the current weights.
    EveryPass,
}

#[derive(Debug, Clone)]
pub struct JointProblem<F> {
    pub x1: PredictorMatrix<F>,
    pub y: MultiResponse<F>,
    pub x2: PredictorMatrix<F>,
    pub z: Outcome<F>,
    pub xgroups: GroupStructure,
    pub ygroups: GroupStructure,
    pub config1: SolverConfig<F>,
    pub config2: SolverConfig<F>,
    /// Shared weight exponent; overrides the `alpha` of both configs.
    pub alpha: F,
    pub tuning: Tuning,
    pub cv: CvSettings<F>,
}

/// Weights in force during one joint pass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSnapshot<F> {
    /// Derived from Model 2 and applied to Model 1.
    pub model1: PenaltyWeights<F>,
    /// Derived from Model 1 and applied to Model 2.
    pub model2: PenaltyWeights<F>,
}

#[derive(Debug, Clone)]
pub struct JointFitResult<F> {
    pub model1: FitResult<CoefficientMatrix<F>, F>,
    pub model2: FitResult<CoefficientVector<F>, F>,
    pub joint_iterations: usize,
    pub converged: bool,
    pub weight_history: Vec<WeightSnapshot<F>>,
    /// Cross-validation tables from the last tuning round, if any.
    pub cv_model1: Option<CvTable<F>>,
    pub cv_model2: Option<CvTable<F>>,
    pub warnings: Vec<String>,
}

fn annotate(pass: usize) -> impl Fn(Error) -> Error {
    move |e| Error::JointPass { pass, source: Box::new(e) }
}

fn max_change<'a, F: Scalar>(a: impl IntoIterator<Item = &'a F>, b: impl IntoIterator<Item = &'a F>) -> F {
    a.into_iter().zip(b).map(|(&u, &v)| (u - v).abs()).fold(F::zero(), F::max)
}

fn model2_cv<'a, F: Scalar>(x: &'a PredictorMatrix<F>, z: &'a Outcome<F>, groups: &'a GroupStructure) -> CvProblem<'a, F> {
    match z {
        Outcome::Continuous(z) => CvProblem::Model2Linear { x, z, groups },
        Outcome::Survival(surv) => CvProblem::Model2Cox { x, surv, groups },
    }
}

fn tune<F: Scalar>(
    problem: &CvProblem<'_, F>,
    weights: &PenaltyWeights<F>,
    cfg: &mut SolverConfig<F>,
    cv: &CvSettings<F>,
    explicit: Option<&Vec<(F, F)>>,
) -> Result<CvTable<F>> {
    let grid = match explicit {
        Some(g) => g.clone(),
        None => default_grid(problem, weights, cfg.alpha, cv.grid_size)?,
    };
    let table = cv_grid_search(problem, weights, &grid, cv.folds, cv.seed, cfg)?;
    let (lf, lg) = table.best_pair();
    cfg.lambda_feature = lf;
    cfg.lambda_group = LambdaGroup::Uniform(lg);
    Ok(table)
}

/// Model 2 fit by outcome type.
pub fn fit_model2<F: Scalar>(
    x: &PredictorMatrix<F>,
    z: &Outcome<F>,
    groups: &GroupStructure,
    weights: &PenaltyWeights<F>,
    cfg: &SolverConfig<F>,
) -> Result<FitResult<CoefficientVector<F>, F>> {
    match z {
        Outcome::Continuous(z) => linear::fit_model2_linear(x, z, groups, weights, cfg),
        Outcome::Survival(s) => cox::fit_model2_cox(x, s, groups, weights, cfg),
    }
}

pub fn fit_joint<F: Scalar>(problem: &JointProblem<F>) -> Result<JointFitResult<F>> {
    let p = problem.x1.p();
    if problem.x2.p() != p || problem.x1.feature_names() != problem.x2.feature_names() {
        return Err(Error::Alignment("the two predictor matrices must share feature order; align them first".into()));
    }
    if problem.xgroups.size() != p || problem.ygroups.size() != problem.y.q() {
        return Err(Error::dims("group structures do not match the data dimensions"));
    }
    let blocks: BlockGroupStructure = cross_block_groups(&problem.xgroups, &problem.ygroups)?;
    let mut cfg1 = SolverConfig { alpha: problem.alpha, ..problem.config1.clone() };
    let mut cfg2 = SolverConfig { alpha: problem.alpha, ..problem.config2.clone() };
    let max_pass = cfg1.max_joint_iter.max(1);
    let tol = cfg1.joint_tol;

    let cv1 = CvProblem::Model1 { x: &problem.x1, y: &problem.y, blocks: &blocks };
    let cv2 = model2_cv(&problem.x2, &problem.z, &problem.xgroups);
    let mut w1 = PenaltyWeights::uniform(p, problem.xgroups.len());
    let (mut cv_model1, mut cv_model2) = (None, None);
    let mut warnings = Vec::new();
    let mut history = Vec::new();
    let mut prev: Option<(FitResult<CoefficientMatrix<F>, F>, FitResult<CoefficientVector<F>, F>)> = None;
    let mut converged = false;
    let mut pass = 0;
    while pass < max_pass {
        pass += 1;
        let retune = matches!(problem.tuning, Tuning::EveryPass) || (matches!(problem.tuning, Tuning::Once) && pass == 1);
        if retune {
            let t = tune(&cv1, &w1, &mut cfg1, &problem.cv, problem.cv.grid_model1.as_ref()).map_err(annotate(pass))?;
            warnings.extend(t.warnings.iter().cloned());
            cv_model1 = Some(t);
        }
        let fit1 = linear::fit_model1(&problem.x1, &problem.y, &blocks, &w1, &cfg1).map_err(annotate(pass))?;
        let w2 = weights_from_beta(&fit1.coefficients, &problem.xgroups).map_err(annotate(pass))?;
        if retune {
            let t = tune(&cv2, &w2, &mut cfg2, &problem.cv, problem.cv.grid_model2.as_ref()).map_err(annotate(pass))?;
            warnings.extend(t.warnings.iter().cloned());
            cv_model2 = Some(t);
        }
        let fit2 = fit_model2(&problem.x2, &problem.z, &problem.xgroups, &w2, &cfg2).map_err(annotate(pass))?;
        history.push(WeightSnapshot { model1: w1.clone(), model2: w2 });
        w1 = weights_from_gamma(&fit2.coefficients, &problem.xgroups).map_err(annotate(pass))?;
        let settled = prev.as_ref().is_some_and(|(b, g)| {
            max_change(&b.coefficients.values, &fit1.coefficients.values) < tol
                && max_change(&g.coefficients.values, &fit2.coefficients.values) < tol
        });
        prev = Some((fit1, fit2));
        if settled {
            converged = true;
            break;
        }
    }
    let (mut model1, mut model2) = prev.expect("at least one pass");
    model1.iterations.joint = pass;
    model2.iterations.joint = pass;
    if !converged {
        let msg = format!("joint fit did not settle within {max_pass} passes");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(JointFitResult {
        model1,
        model2,
        joint_iterations: pass,
        converged,
        weight_history: history,
        cv_model1,
        cv_model2,
        warnings,
    })
}

/// Aligned two-dataset problem plus what alignment removed.
#[derive(Debug, Clone)]
pub struct TwoDatasetProblem<F> {
    pub problem: JointProblem<F>,
    pub alignment: FeatureAlignment,
    pub dropped_features: Vec<String>,
    pub dropped_groups: Vec<String>,
}

/// Aligns two datasets on shared feature names and remaps predictor groups onto the
/// aligned features; groups left empty are dropped.
#[allow(clippy::too_many_arguments)]
pub fn build_two_dataset_problem<F: Scalar>(
    x1: &PredictorMatrix<F>,
    y: MultiResponse<F>,
    x2: &PredictorMatrix<F>,
    z: Outcome<F>,
    xgroups: &GroupStructure,
    ygroups: GroupStructure,
    config1: SolverConfig<F>,
    config2: SolverConfig<F>,
    alpha: F,
) -> Result<TwoDatasetProblem<F>> {
    if xgroups.size() != x1.p() {
        return Err(Error::dims(format!("groups index {} features, first dataset has {}", xgroups.size(), x1.p())));
    }
    let (alignment, a1, a2) = align_features(x1, x2)?;
    let mut dropped_features: Vec<String> = alignment.dropped_from_first(x1.feature_names()).into_iter().map(String::from).collect();
    dropped_features.extend(
        x2.feature_names()
            .iter()
            .zip(&alignment.second_to_aligned)
            .filter(|(_, m)| m.is_none())
            .map(|(n, _)| n.clone()),
    );
    let (groups, dropped_groups) = xgroups.remap(alignment.names.len(), &alignment.first_to_aligned)?;
    if groups.is_empty() {
        return Err(Error::Alignment("every predictor group is empty after alignment".into()));
    }
    for g in &dropped_groups {
        log::info!("group `{g}` has no shared features and was dropped");
    }
    if !dropped_features.is_empty() {
        log::info!("{} features not shared by both datasets were dropped", dropped_features.len());
    }
    Ok(TwoDatasetProblem {
        problem: JointProblem {
            x1: a1,
            y,
            x2: a2,
            z,
            xgroups: groups,
            ygroups,
            config1,
            config2,
            alpha,
            tuning: Tuning::Fixed,
            cv: CvSettings::default(),
        },
        alignment,
        dropped_features,
        dropped_groups,
    })
}
