use std::path::PathBuf;

use jointsgl::{scenario_presets, GroundTruth, SimulatedData, SimulationScenario};
use serde::{Deserialize, Serialize};

use super::{write_dataset, Dataset, MANIFEST_FILE, OUTCOME_TEST_FILE, TRUTH_FILE, X_TEST_FILE};
use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub preset: String,
    pub overlap: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Ground truth keyed by names so it survives feature alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub features: Vec<String>,
    pub responses: Vec<String>,
    pub important_model1: Vec<String>,
    pub important_model2: Vec<String>,
    /// Rows follow `features`, columns follow `responses`.
    pub b_true: Vec<Vec<f64>>,
    pub g_true: Vec<f64>,
}

impl TruthFile {
    pub fn new(truth: &GroundTruth, features: &[String], responses: &[String]) -> Self {
        Self {
            features: features.to_vec(),
            responses: responses.to_vec(),
            important_model1: truth.important_model1.iter().map(|&j| features[j].clone()).collect(),
            important_model2: truth.important_model2.iter().map(|&j| features[j].clone()).collect(),
            b_true: truth.b_true.values.rows().into_iter().map(|r| r.to_vec()).collect(),
            g_true: truth.g_true.values.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub preset: String,
    pub seed: u64,
    pub scenario: SimulationScenario,
    pub files: Vec<String>,
}

pub fn write_simulation(out: &std::path::Path, preset: &str, data: &SimulatedData) -> Result<()> {
    let d = Dataset {
        x: data.x.clone(),
        y: data.y.clone(),
        outcome: data.outcome.clone(),
        xgroups: data.xgroups.clone(),
        ygroups: data.ygroups.clone(),
    };
    write_dataset(out, &d)?;
    io::write_predictors(&out.join(X_TEST_FILE), &data.x_test)?;
    io::write_outcome(&out.join(OUTCOME_TEST_FILE), &data.outcome_test)?;
    io::write_json(&out.join(TRUTH_FILE), &TruthFile::new(&data.truth, data.x.feature_names(), data.y.response_names()))?;
    let files = [
        super::X_FILE,
        super::Y_FILE,
        super::OUTCOME_FILE,
        super::XGROUPS_FILE,
        super::YGROUPS_FILE,
        X_TEST_FILE,
        OUTCOME_TEST_FILE,
        TRUTH_FILE,
    ];
    io::write_json(
        &out.join(MANIFEST_FILE),
        &Manifest {
            schema_version: SCHEMA_VERSION,
            preset: preset.to_string(),
            seed: data.scenario.seed,
            scenario: data.scenario.clone(),
            files: files.iter().map(|f| f.to_string()).collect(),
        },
    )
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let scenario = scenario_presets(&args.preset, args.overlap).map_err(|e| CliError::Usage(e.to_string()))?;
    let scenario = SimulationScenario { seed: args.seed, ..scenario };
    let data = jointsgl::simulate(&scenario)?;
    write_simulation(&args.out, &args.preset, &data)?;
    log::info!("wrote {} scenario with seed {} to {}", args.preset, args.seed, args.out.display());
    Ok(())
}
