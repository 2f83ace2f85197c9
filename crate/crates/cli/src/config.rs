//! JSON run configuration.

use std::path::Path;

use jointsgl::{CvSettings, LambdaGroup, OutcomeKind, SolverConfig, Tuning};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

pub const SCHEMA_VERSION: u32 = 1;

/// Penalty levels and solver controls for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub lambda_feature: f64,
    pub lambda_group: LambdaGroup<f64>,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner_iter: usize,
    pub max_outer_iter: usize,
    pub step_init: f64,
    pub step_shrink: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let d = SolverConfig::<f64>::default();
        Self {
            lambda_feature: d.lambda_feature,
            lambda_group: d.lambda_group,
            inner_tol: d.inner_tol,
            outer_tol: d.outer_tol,
            max_inner_iter: d.max_inner_iter,
            max_outer_iter: d.max_outer_iter,
            step_init: d.step_init,
            step_shrink: d.step_shrink,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    Fixed,
    Once,
    EveryPass,
}

impl From<TuningMode> for Tuning {
    fn from(t: TuningMode) -> Self {
        match t {
            TuningMode::Fixed => Tuning::Fixed,
            TuningMode::Once => Tuning::Once,
            TuningMode::EveryPass => Tuning::EveryPass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub grid_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_model1: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_model2: Option<Vec<(f64, f64)>>,
}

impl Default for CvConfig {
    fn default() -> Self {
        let d = CvSettings::<f64>::default();
        Self { folds: d.folds, seed: d.seed, grid_size: d.grid_size, grid_model1: None, grid_model2: None }
    }
}

impl CvConfig {
    pub fn settings(&self) -> CvSettings<f64> {
        CvSettings {
            folds: self.folds,
            seed: self.seed,
            grid_size: self.grid_size,
            grid_model1: self.grid_model1.clone(),
            grid_model2: self.grid_model2.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub schema_version: u32,
    /// Checked against the outcome file when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_kind: Option<OutcomeKind>,
    pub alpha: f64,
    pub joint_tol: f64,
    pub max_joint_iter: usize,
    pub tuning: TuningMode,
    pub model1: ModelConfig,
    pub model2: ModelConfig,
    pub cv: CvConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        let d = SolverConfig::<f64>::default();
        Self {
            schema_version: SCHEMA_VERSION,
            outcome_kind: None,
            alpha: d.alpha,
            joint_tol: d.joint_tol,
            max_joint_iter: d.max_joint_iter,
            tuning: TuningMode::Once,
            model1: ModelConfig::default(),
            model2: ModelConfig::default(),
            cv: CvConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: FitConfig = io::read_json(path)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn solver(&self, m: &ModelConfig) -> SolverConfig<f64> {
        SolverConfig {
            lambda_feature: m.lambda_feature,
            lambda_group: m.lambda_group.clone(),
            alpha: self.alpha,
            inner_tol: m.inner_tol,
            outer_tol: m.outer_tol,
            joint_tol: self.joint_tol,
            max_inner_iter: m.max_inner_iter,
            max_outer_iter: m.max_outer_iter,
            max_joint_iter: self.max_joint_iter,
            step_init: m.step_init,
            step_shrink: m.step_shrink,
        }
    }
}
