use std::path::PathBuf;
use std::str::FromStr;

use jointsgl::{
    cross_block_groups, cv_grid_search, default_grid, fit_joint, fit_model2, null_prediction_error, prediction_error,
    rrpe, scenario_presets, selection_rates, survival_auc, tpr_tnr, CoefficientMatrix, CoefficientVector, CvProblem,
    CvSettings, JointProblem, Outcome, PenaltyWeights, SimulatedData, SimulationScenario, SolverConfig, Tuning,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MANIFEST_FILE, STUDY_FILE};
use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, Result};
use crate::io::{self, fmt_real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Both models with cross-model weights.
    Joint,
    /// Both models with unit weights.
    Separate,
    /// Model 2 alone with no group penalty.
    Lasso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Joint => "joint",
            Method::Separate => "separate",
            Method::Lasso => "lasso",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "joint" => Ok(Method::Joint),
            "separate" => Ok(Method::Separate),
            "lasso" => Ok(Method::Lasso),
            other => Err(format!("unknown method `{other}` (expected joint, separate or lasso)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateArgs {
    pub preset: String,
    pub overlaps: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub folds: usize,
    pub times: Vec<f64>,
    pub methods: Vec<Method>,
    /// Weight exponent of the joint method.
    pub alpha: f64,
    #[serde(skip)]
    pub out: PathBuf,
}

/// One study table row: a replication, or the mean over replications when
/// `replication` is `"mean"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub method: Method,
    pub overlap: f64,
    pub replication: String,
    pub seed: Option<u64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub model1_tpr: Option<f64>,
    pub model1_tnr: Option<f64>,
    pub rrpe: Option<f64>,
    pub auc: Vec<Option<f64>>,
    pub censoring_rate: Option<f64>,
    pub joint_iterations: Option<f64>,
    pub converged: Option<f64>,
    pub error: String,
}

impl StudyRow {
    fn empty(method: Method, overlap: f64, replication: String, seed: Option<u64>, n_times: usize) -> Self {
        Self {
            method,
            overlap,
            replication,
            seed,
            tpr: None,
            tnr: None,
            model1_tpr: None,
            model1_tnr: None,
            rrpe: None,
            auc: vec![None; n_times],
            censoring_rate: None,
            joint_iterations: None,
            converged: None,
            error: String::new(),
        }
    }
}

struct Fitted {
    b: Option<CoefficientMatrix<f64>>,
    g: CoefficientVector<f64>,
    joint_iterations: Option<usize>,
    converged: bool,
}

fn fill_metrics(row: &mut StudyRow, data: &SimulatedData, fit: &Fitted, times: &[f64]) -> jointsgl::Result<()> {
    let r2 = tpr_tnr(&fit.g, &data.truth.g_true)?;
    row.tpr = r2.tpr;
    row.tnr = r2.tnr;
    if let Some(b) = &fit.b {
        let truth = &data.truth.b_true.values;
        let r1 = selection_rates(b.values.iter().map(|&v| v != 0.0), truth.iter().map(|&v| v != 0.0), b.values.len(), truth.len())?;
        row.model1_tpr = r1.tpr;
        row.model1_tnr = r1.tnr;
    }
    row.joint_iterations = fit.joint_iterations.map(|v| v as f64);
    row.converged = Some(if fit.converged { 1.0 } else { 0.0 });
    match (&data.outcome, &data.outcome_test) {
        (Outcome::Continuous(z), Outcome::Continuous(zt)) => {
            let pe = prediction_error(&fit.g, &data.x_test, zt.values())?;
            let pe0 = null_prediction_error(z.values().mean().unwrap_or(0.0), zt.values())?;
            row.rrpe = Some(rrpe(pe0, pe)?);
        }
        (Outcome::Survival(s), Outcome::Survival(st)) => {
            row.censoring_rate = Some(s.censoring_rate());
            let risk = data.x_test.values().dot(&fit.g.values);
            for (slot, &t) in row.auc.iter_mut().zip(times) {
                *slot = survival_auc(risk.as_slice().expect("contiguous"), st, t).ok();
            }
        }
        _ => unreachable!("training and test outcomes share a kind"),
    }
    Ok(())
}

fn run_replication(scenario: &SimulationScenario, overlap: f64, rep: usize, args: &ReplicateArgs) -> Vec<StudyRow> {
    let seed = scenario.seed;
    let rows = |msg: &str| -> Vec<StudyRow> {
        args.methods
            .iter()
            .map(|&m| StudyRow { error: msg.to_string(), ..StudyRow::empty(m, overlap, (rep + 1).to_string(), Some(seed), args.times.len()) })
            .collect()
    };
    let data = match jointsgl::simulate(scenario) {
        Ok(d) => d,
        Err(e) => return rows(&e.to_string()),
    };
    let p = data.x.p();
    let unit = PenaltyWeights::uniform(p, data.xgroups.len());
    let base = SolverConfig::<f64>::default();

    // Model 1 tuning with unit weights is the same for the joint and separate methods.
    let needs_model1 = args.methods.iter().any(|m| matches!(m, Method::Joint | Method::Separate));
    let best1 = if needs_model1 {
        let tuned = cross_block_groups(&data.xgroups, &data.ygroups).and_then(|blocks| {
            let prob = CvProblem::Model1 { x: &data.x, y: &data.y, blocks: &blocks };
            let grid = default_grid(&prob, &unit, base.alpha, args.grid_size)?;
            Ok(cv_grid_search(&prob, &unit, &grid, args.folds, seed, &base)?.best_pair())
        });
        match tuned {
            Ok(b) => Some(b),
            Err(e) => return rows(&format!("model 1 tuning: {e}")),
        }
    } else {
        None
    };

    args.methods
        .iter()
        .map(|&method| {
            let mut row = StudyRow::empty(method, overlap, (rep + 1).to_string(), Some(seed), args.times.len());
            let fitted = match method {
                Method::Joint | Method::Separate => {
                    let problem = JointProblem {
                        x1: data.x.clone(),
                        y: data.y.clone(),
                        x2: data.x.clone(),
                        z: data.outcome.clone(),
                        xgroups: data.xgroups.clone(),
                        ygroups: data.ygroups.clone(),
                        config1: base.clone(),
                        config2: base.clone(),
                        alpha: if method == Method::Joint { args.alpha } else { 0.0 },
                        tuning: Tuning::Once,
                        cv: CvSettings {
                            folds: args.folds,
                            seed,
                            grid_size: args.grid_size,
                            grid_model1: best1.map(|b| vec![b]),
                            grid_model2: None,
                        },
                    };
                    fit_joint(&problem).map(|r| Fitted {
                        b: Some(r.model1.coefficients),
                        g: r.model2.coefficients,
                        joint_iterations: Some(r.joint_iterations),
                        converged: r.converged,
                    })
                }
                Method::Lasso => lasso(&data, &unit, args, seed),
            };
            let outcome = fitted.and_then(|f| fill_metrics(&mut row, &data, &f, &args.times));
            if let Err(e) = outcome {
                row.error = e.to_string();
            }
            row
        })
        .collect()
}

fn lasso(data: &SimulatedData, unit: &PenaltyWeights<f64>, args: &ReplicateArgs, seed: u64) -> jointsgl::Result<Fitted> {
    let base = SolverConfig { alpha: 0.0, ..SolverConfig::default() };
    let prob = match &data.outcome {
        Outcome::Continuous(z) => CvProblem::Model2Linear { x: &data.x, z, groups: &data.xgroups },
        Outcome::Survival(s) => CvProblem::Model2Cox { x: &data.x, surv: s, groups: &data.xgroups },
    };
    let grid: Vec<(f64, f64)> = default_grid(&prob, unit, 0.0, args.grid_size)?.into_iter().filter(|&(_, lg)| lg == 0.0).collect();
    let (lf, _) = cv_grid_search(&prob, unit, &grid, args.folds, seed, &base)?.best_pair();
    let fit = fit_model2(&data.x, &data.outcome, &data.xgroups, unit, &SolverConfig { alpha: 0.0, ..SolverConfig::with_lambdas(lf, 0.0) })?;
    Ok(Fitted { b: None, g: fit.coefficients, joint_iterations: None, converged: fit.converged })
}

fn mean_of(rows: &[&StudyRow], get: impl Fn(&StudyRow) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = rows.iter().filter_map(|r| get(r)).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn mean_row(rows: &[&StudyRow], method: Method, overlap: f64, n_times: usize) -> StudyRow {
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    StudyRow {
        tpr: mean_of(rows, |r| r.tpr),
        tnr: mean_of(rows, |r| r.tnr),
        model1_tpr: mean_of(rows, |r| r.model1_tpr),
        model1_tnr: mean_of(rows, |r| r.model1_tnr),
        rrpe: mean_of(rows, |r| r.rrpe),
        auc: (0..n_times).map(|i| mean_of(rows, |r| r.auc[i])).collect(),
        censoring_rate: mean_of(rows, |r| r.censoring_rate),
        joint_iterations: mean_of(rows, |r| r.joint_iterations),
        converged: mean_of(rows, |r| r.converged),
        error: if failed > 0 { format!("{failed} of {} replications failed", rows.len()) } else { String::new() },
        ..StudyRow::empty(method, overlap, "mean".into(), None, n_times)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

pub fn study_header(times: &[f64]) -> Vec<String> {
    let mut h: Vec<String> =
        ["method", "overlap", "replication", "seed", "tpr", "tnr", "model1_tpr", "model1_tnr", "rrpe"].iter().map(|s| s.to_string()).collect();
    h.extend(times.iter().map(|t| format!("auc_t{t}")));
    h.extend(["censoring_rate", "joint_iterations", "converged", "error"].iter().map(|s| s.to_string()));
    h
}

fn study_record(r: &StudyRow) -> Vec<String> {
    let mut v = vec![
        r.method.name().to_string(),
        fmt_real(r.overlap),
        r.replication.clone(),
        r.seed.map(|s| s.to_string()).unwrap_or_default(),
        opt(r.tpr),
        opt(r.tnr),
        opt(r.model1_tpr),
        opt(r.model1_tnr),
        opt(r.rrpe),
    ];
    v.extend(r.auc.iter().map(|&a| opt(a)));
    v.extend([opt(r.censoring_rate), opt(r.joint_iterations), opt(r.converged), r.error.clone()]);
    v
}

/// Simulate, tune, fit and score every method on `reps` replications per overlap. The
/// rows come back grouped by overlap and method, each group closed by its mean row.
pub fn replicate(args: &ReplicateArgs) -> Result<Vec<StudyRow>> {
    if args.reps == 0 || args.methods.is_empty() || args.overlaps.is_empty() {
        return Err(CliError::Usage("need at least one replication, method and overlap".into()));
    }
    let mut scenarios = Vec::new();
    for &overlap in &args.overlaps {
        let base = scenario_presets(&args.preset, overlap).map_err(|e| CliError::Usage(e.to_string()))?;
        for rep in 0..args.reps {
            scenarios.push((overlap, rep, SimulationScenario { seed: args.seed + rep as u64, ..base.clone() }));
        }
    }
    let results: Vec<Vec<StudyRow>> = scenarios
        .par_iter()
        .map(|(overlap, rep, sc)| {
            log::info!("replication {} at overlap {overlap}", rep + 1);
            run_replication(sc, *overlap, *rep, args)
        })
        .collect();

    let mut out = Vec::new();
    for (oi, &overlap) in args.overlaps.iter().enumerate() {
        let block = &results[oi * args.reps..(oi + 1) * args.reps];
        for (mi, &method) in args.methods.iter().enumerate() {
            let rows: Vec<&StudyRow> = block.iter().map(|r| &r[mi]).collect();
            out.extend(rows.iter().map(|r| (*r).clone()));
            out.push(mean_row(&rows, method, overlap, args.times.len()));
        }
    }
    io::write_table(&args.out.join(STUDY_FILE), &study_header(&args.times), out.iter().map(study_record))?;
    io::write_json(&args.out.join(MANIFEST_FILE), &serde_json::json!({ "schema_version": SCHEMA_VERSION, "study": args }))?;
    Ok(out)
}
