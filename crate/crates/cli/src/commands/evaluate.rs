use std::collections::HashMap;
use std::path::{Path, PathBuf};

use jointsgl::{
    null_prediction_error, prediction_error, rrpe, selection_rates, survival_auc, CoefficientVector, Error, Outcome,
    PredictorMatrix, SelectionRates,
};
use serde::{Deserialize, Serialize};

use super::{
    TruthFile, METRICS_FILE, MODEL1_FILE, MODEL2_FILE, OUTCOME_FILE, OUTCOME_TEST_FILE, TRUTH_FILE, X_TEST_FILE,
};
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    /// Dataset directory holding the truth and the test split.
    pub data: PathBuf,
    /// Directory holding the coefficient files.
    pub fit: PathBuf,
    pub out: PathBuf,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucAt {
    pub time: f64,
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model1: Option<SelectionRates>,
    pub model2: SelectionRates,
    pub prediction_error: Option<f64>,
    pub null_prediction_error: Option<f64>,
    pub rrpe: Option<f64>,
    pub auc: Vec<AucAt>,
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}

fn lookup(map: &HashMap<&str, usize>, name: &str, path: &Path) -> Result<usize> {
    map.get(name).copied().ok_or_else(|| CliError::Data(format!("{}: `{name}` is not in the truth file", path.display())))
}

/// Model 2 coefficients spread over the truth's feature order; features missing from the
/// fit count as zero.
fn spread(truth: &TruthFile, names: &[String], g: &CoefficientVector<f64>, path: &Path) -> Result<Vec<f64>> {
    let idx = index_of(&truth.features);
    let mut out = vec![0.0; truth.features.len()];
    for (n, &v) in names.iter().zip(&g.values) {
        out[lookup(&idx, n, path)?] = v;
    }
    Ok(out)
}

fn model1_rates(truth: &TruthFile, fit_dir: &Path) -> Result<Option<SelectionRates>> {
    let path = fit_dir.join(MODEL1_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let (features, responses, b) = io::read_coefficients_model1(&path)?;
    let fi = index_of(&truth.features);
    let ri = index_of(&truth.responses);
    let q = truth.responses.len();
    let mut est = vec![false; truth.features.len() * q];
    for (a, f) in features.iter().enumerate() {
        let j = lookup(&fi, f, &path)?;
        for (c, r) in responses.iter().enumerate() {
            est[j * q + lookup(&ri, r, &path)?] = b.values[[a, c]] != 0.0;
        }
    }
    let truth_flags: Vec<bool> = truth.b_true.iter().flatten().map(|&v| v != 0.0).collect();
    Ok(Some(selection_rates(est.iter().copied(), truth_flags.iter().copied(), est.len(), truth_flags.len())?))
}

/// Test predictors restricted to and ordered by `names`.
fn test_columns(x: &PredictorMatrix<f64>, names: &[String], path: &Path) -> Result<PredictorMatrix<f64>> {
    let idx = index_of(x.feature_names());
    let cols = names
        .iter()
        .map(|n| idx.get(n.as_str()).copied().ok_or_else(|| CliError::Data(format!("{}: missing feature `{n}`", path.display()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(x.select_columns(&cols))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<EvaluationReport> {
    let truth_path = args.data.join(TRUTH_FILE);
    if !truth_path.exists() {
        return Err(CliError::Data(format!("{} is required for selection metrics", truth_path.display())));
    }
    let truth: TruthFile = io::read_json(&truth_path)?;
    let m2_path = args.fit.join(MODEL2_FILE);
    let (names, g) = io::read_coefficients_model2(&m2_path)?;
    let est = spread(&truth, &names, &g, &m2_path)?;
    let model2 = selection_rates(
        est.iter().map(|&v| v != 0.0),
        truth.g_true.iter().map(|&v| v != 0.0),
        est.len(),
        truth.g_true.len(),
    )?;
    let model1 = model1_rates(&truth, &args.fit)?;

    let mut report = EvaluationReport { model1, model2, prediction_error: None, null_prediction_error: None, rrpe: None, auc: Vec::new() };
    let (xt_path, zt_path) = (args.data.join(X_TEST_FILE), args.data.join(OUTCOME_TEST_FILE));
    if xt_path.exists() && zt_path.exists() {
        let x_test = test_columns(&io::read_predictors(&xt_path)?, &names, &xt_path)?;
        match io::read_outcome(&zt_path)? {
            Outcome::Continuous(z_test) => {
                let train_mean = match io::read_outcome(&args.data.join(OUTCOME_FILE))? {
                    Outcome::Continuous(z) => z.values().mean().unwrap_or(0.0),
                    Outcome::Survival(_) => return Err(CliError::Data("training and test outcomes differ in kind".into())),
                };
                let pe = prediction_error(&g, &x_test, z_test.values())?;
                let pe0 = null_prediction_error(train_mean, z_test.values())?;
                report.prediction_error = Some(pe);
                report.null_prediction_error = Some(pe0);
                report.rrpe = Some(rrpe(pe0, pe)?);
            }
            Outcome::Survival(s) => {
                let risk = x_test.values().dot(&g.values);
                for &t in &args.times {
                    report.auc.push(match survival_auc(risk.as_slice().expect("contiguous"), &s, t) {
                        Ok(a) => AucAt { time: t, auc: Some(a), note: None },
                        Err(e @ Error::Undefined(_)) => AucAt { time: t, auc: None, note: Some(e.to_string()) },
                        Err(e) => return Err(e.into()),
                    });
                }
            }
        }
    }
    io::write_json(&args.out.join(METRICS_FILE), &report)?;
    Ok(report)
}
