use std::path::PathBuf;

use jointsgl::{
    build_two_dataset_problem, cross_block_groups, fit_joint, kkt_residual_cox, kkt_residual_model1,
    kkt_residual_model2, CoefficientMatrix, CoefficientVector, CvTable, FitResult, JointFitResult, LambdaGroup, Outcome,
    OutcomeKind, SolverConfig, TwoDatasetProblem,
};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{
    load_dataset, load_second, CvOverrides, BEST_CONFIG_FILE, CV_TABLE_FILE, MODEL1_FILE, MODEL2_FILE, REPORT_FILE,
};
use crate::config::{FitConfig, TuningMode, SCHEMA_VERSION};
use crate::error::{CliError, Result};
use crate::io::{self, fmt_real};

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub data: PathBuf,
    pub data2: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub cv: CvOverrides,
}

pub type CvArgs = FitArgs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub converged: bool,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub joint_iterations: usize,
    pub final_objective: f64,
    pub objective_trace: Vec<f64>,
    pub lambda_feature: f64,
    pub lambda_group: LambdaGroup<f64>,
    pub alpha: f64,
    pub nonzero: usize,
    pub kkt_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl WeightSummary {
    fn of(v: &Array1<f64>) -> Self {
        Self {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: v.mean().unwrap_or(f64::NAN),
        }
    }
}

/// Weights applied during one joint pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassWeights {
    pub pass: usize,
    pub model1_features: WeightSummary,
    pub model1_groups: WeightSummary,
    pub model2_features: WeightSummary,
    pub model2_groups: WeightSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub mode: String,
    pub outcome_kind: OutcomeKind,
    pub alpha: f64,
    pub converged: bool,
    pub joint_iterations: usize,
    pub n_model1: usize,
    pub n_model2: usize,
    pub p: usize,
    pub q: usize,
    pub dropped_features: Vec<String>,
    pub dropped_groups: Vec<String>,
    pub model1: ModelReport,
    pub model2: ModelReport,
    pub weights: Vec<PassWeights>,
    pub warnings: Vec<String>,
}

fn load_config(path: Option<&PathBuf>, overrides: &CvOverrides) -> Result<FitConfig> {
    let mut cfg = match path {
        Some(p) => FitConfig::load(p)?,
        None => FitConfig::default(),
    };
    if let Some(k) = overrides.folds {
        cfg.cv.folds = k;
    }
    if let Some(g) = overrides.grid_size {
        cfg.cv.grid_size = g;
    }
    if let Some(s) = overrides.seed {
        cfg.cv.seed = s;
    }
    Ok(cfg)
}

fn prepare(args: &FitArgs) -> Result<(FitConfig, TwoDatasetProblem<f64>)> {
    let cfg = load_config(args.config.as_ref(), &args.cv)?;
    let d = load_dataset(&args.data)?;
    let (x2, z) = match &args.data2 {
        Some(dir) => load_second(dir)?,
        None => (d.x.clone(), d.outcome),
    };
    if let Some(kind) = cfg.outcome_kind {
        if kind != z.kind() {
            return Err(CliError::Data(format!("config expects a {kind:?} outcome, data has {:?}", z.kind())));
        }
    }
    let mut t = build_two_dataset_problem(
        &d.x,
        d.y,
        &x2,
        z,
        &d.xgroups,
        d.ygroups,
        cfg.solver(&cfg.model1),
        cfg.solver(&cfg.model2),
        cfg.alpha,
    )?;
    t.problem.tuning = cfg.tuning.into();
    t.problem.cv = cfg.cv.settings();
    Ok((cfg, t))
}

fn model_report<C>(fit: &FitResult<C, f64>, nonzero: usize, kkt: f64) -> ModelReport {
    ModelReport {
        converged: fit.converged,
        inner_iterations: fit.iterations.inner,
        outer_iterations: fit.iterations.outer,
        joint_iterations: fit.iterations.joint,
        final_objective: fit.final_objective,
        objective_trace: fit.objective_trace.clone(),
        lambda_feature: fit.lambdas_used.lambda_feature,
        lambda_group: fit.lambdas_used.lambda_group.clone(),
        alpha: fit.lambdas_used.alpha,
        nonzero,
        kkt_residual: kkt,
        warnings: fit.warnings.clone(),
    }
}

fn used_config<C>(base: &SolverConfig<f64>, fit: &FitResult<C, f64>) -> SolverConfig<f64> {
    SolverConfig {
        lambda_feature: fit.lambdas_used.lambda_feature,
        lambda_group: fit.lambdas_used.lambda_group.clone(),
        alpha: fit.lambdas_used.alpha,
        ..base.clone()
    }
}

/// Builds the report, including stationarity residuals at the returned coefficients.
pub fn fit_report(t: &TwoDatasetProblem<f64>, r: &JointFitResult<f64>) -> Result<FitReport> {
    let pr = &t.problem;
    let blocks = cross_block_groups(&pr.xgroups, &pr.ygroups)?;
    let m1: &FitResult<CoefficientMatrix<f64>, f64> = &r.model1;
    let m2: &FitResult<CoefficientVector<f64>, f64> = &r.model2;
    let cfg1 = used_config(&pr.config1, m1);
    let cfg2 = used_config(&pr.config2, m2);
    let kkt1 = kkt_residual_model1(&pr.x1, &pr.y, &m1.coefficients, &blocks, &m1.weights_used, &cfg1)?;
    let kkt2 = match &pr.z {
        Outcome::Continuous(z) => kkt_residual_model2(&pr.x2, z, &m2.coefficients, &pr.xgroups, &m2.weights_used, &cfg2)?,
        Outcome::Survival(s) => kkt_residual_cox(&pr.x2, s, &m2.coefficients, &pr.xgroups, &m2.weights_used, &cfg2)?,
    };
    let weights = r
        .weight_history
        .iter()
        .enumerate()
        .map(|(i, w)| PassWeights {
            pass: i + 1,
            model1_features: WeightSummary::of(&w.model1.feature_weights),
            model1_groups: WeightSummary::of(&w.model1.group_weights),
            model2_features: WeightSummary::of(&w.model2.feature_weights),
            model2_groups: WeightSummary::of(&w.model2.group_weights),
        })
        .collect();
    Ok(FitReport {
        schema_version: SCHEMA_VERSION,
        mode: if pr.alpha == 0.0 { "separate-model mode".into() } else { "joint".into() },
        outcome_kind: pr.z.kind(),
        alpha: pr.alpha,
        converged: r.converged,
        joint_iterations: r.joint_iterations,
        n_model1: pr.x1.n(),
        n_model2: pr.x2.n(),
        p: pr.x1.p(),
        q: pr.y.q(),
        dropped_features: t.dropped_features.clone(),
        dropped_groups: t.dropped_groups.clone(),
        model1: model_report(m1, m1.coefficients.nonzero_count(), kkt1),
        model2: model_report(m2, m2.coefficients.nonzero_count(), kkt2),
        weights,
        warnings: r.warnings.clone(),
    })
}

pub fn fit(args: &FitArgs) -> Result<FitReport> {
    let (_, t) = prepare(args)?;
    let r = fit_joint(&t.problem)?;
    let pr = &t.problem;
    io::write_coefficients_model1(&args.out.join(MODEL1_FILE), &r.model1.coefficients, pr.x1.feature_names(), pr.y.response_names())?;
    io::write_coefficients_model2(&args.out.join(MODEL2_FILE), &r.model2.coefficients, pr.x2.feature_names())?;
    let report = fit_report(&t, &r)?;
    io::write_json(&args.out.join(REPORT_FILE), &report)?;
    if !report.dropped_features.is_empty() {
        log::info!("{} features dropped by alignment", report.dropped_features.len());
    }
    Ok(report)
}

fn table_rows(model: &str, table: &CvTable<f64>) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![model.to_string(), fmt_real(r.lambda_feature), fmt_real(r.lambda_group)];
            row.extend(r.fold_errors.iter().map(|&e| fmt_real(e)));
            row.push(fmt_real(r.mean));
            row.push(u8::from(i == table.best).to_string());
            row
        })
        .collect()
}

/// Tunes both models the way a one-time tuning joint fit does, then writes the error
/// tables and a config with the chosen levels fixed.
pub fn cv(args: &CvArgs) -> Result<FitConfig> {
    let (mut cfg, mut t) = prepare(args)?;
    t.problem.tuning = TuningMode::Once.into();
    t.problem.config1.max_joint_iter = 1;
    let r = fit_joint(&t.problem)?;
    let (t1, t2) = match (&r.cv_model1, &r.cv_model2) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Numerical("cross-validation produced no tables".into())),
    };
    let mut header = vec!["model".to_string(), "lambda_feature".to_string(), "lambda_group".to_string()];
    header.extend((1..=cfg.cv.folds).map(|f| format!("fold_{f}")));
    header.push("mean".into());
    header.push("best".into());
    let mut rows = table_rows("model1", t1);
    rows.extend(table_rows("model2", t2));
    io::write_table(&args.out.join(CV_TABLE_FILE), &header, rows)?;
    let (l1, g1) = t1.best_pair();
    let (l2, g2) = t2.best_pair();
    cfg.model1.lambda_feature = l1;
    cfg.model1.lambda_group = LambdaGroup::Uniform(g1);
    cfg.model2.lambda_feature = l2;
    cfg.model2.lambda_group = LambdaGroup::Uniform(g2);
    cfg.tuning = TuningMode::Fixed;
    cfg.outcome_kind = Some(t.problem.z.kind());
    io::write_json(&args.out.join(BEST_CONFIG_FILE), &cfg)?;
    Ok(cfg)
}
