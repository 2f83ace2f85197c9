//! The five subcommands. Each reads its inputs, runs the library and writes its artifacts
//! from the calling thread.

mod evaluate;
mod fit;
mod replicate;
mod simulate;

use std::path::Path;

use jointsgl::{GroupStructure, MultiResponse, Outcome, PredictorMatrix};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

pub use evaluate::{evaluate, AucAt, EvaluateArgs, EvaluationReport};
pub use fit::{cv, fit, fit_report, CvArgs, FitArgs, FitReport, ModelReport, PassWeights, WeightSummary};
pub use replicate::{replicate, study_header, Method, ReplicateArgs, StudyRow};
pub use simulate::{simulate, write_simulation, Manifest, SimulateArgs, TruthFile};

pub const X_FILE: &str = "X.csv";
pub const Y_FILE: &str = "Y.csv";
pub const OUTCOME_FILE: &str = "outcome.csv";
pub const XGROUPS_FILE: &str = "groups_x.csv";
pub const YGROUPS_FILE: &str = "groups_y.csv";
pub const X_TEST_FILE: &str = "X_test.csv";
pub const OUTCOME_TEST_FILE: &str = "outcome_test.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL1_FILE: &str = "coefficients_model1.csv";
pub const MODEL2_FILE: &str = "coefficients_model2.csv";
pub const REPORT_FILE: &str = "fit_report.json";
pub const CV_TABLE_FILE: &str = "cv_table.csv";
pub const BEST_CONFIG_FILE: &str = "best_config.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const STUDY_FILE: &str = "study.csv";

/// Settings overriding the cross-validation part of a config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CvOverrides {
    pub folds: Option<usize>,
    pub grid_size: Option<usize>,
    pub seed: Option<u64>,
}

/// Imaging side of a dataset directory plus its outcome.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: PredictorMatrix<f64>,
    pub y: MultiResponse<f64>,
    pub outcome: Outcome<f64>,
    pub xgroups: GroupStructure,
    pub ygroups: GroupStructure,
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let x = io::read_predictors(&dir.join(X_FILE))?;
    let y = io::read_responses(&dir.join(Y_FILE))?;
    let outcome = io::read_outcome(&dir.join(OUTCOME_FILE))?;
    let xgroups = io::read_groups(&dir.join(XGROUPS_FILE), x.feature_names())?;
    let ygroups = io::read_groups(&dir.join(YGROUPS_FILE), y.response_names())?;
    Ok(Dataset { x, y, outcome, xgroups, ygroups })
}

pub fn write_dataset(dir: &Path, d: &Dataset) -> Result<()> {
    io::write_predictors(&dir.join(X_FILE), &d.x)?;
    io::write_responses(&dir.join(Y_FILE), &d.y)?;
    io::write_outcome(&dir.join(OUTCOME_FILE), &d.outcome)?;
    io::write_groups(&dir.join(XGROUPS_FILE), &d.xgroups, d.x.feature_names(), "feature")?;
    io::write_groups(&dir.join(YGROUPS_FILE), &d.ygroups, d.y.response_names(), "response")
}

/// Second dataset of the two-dataset mode: predictors and outcome only.
pub fn load_second(dir: &Path) -> Result<(PredictorMatrix<f64>, Outcome<f64>)> {
    Ok((io::read_predictors(&dir.join(X_FILE))?, io::read_outcome(&dir.join(OUTCOME_FILE))?))
}
