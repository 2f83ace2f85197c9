//! Jointly penalized regression of two outcome models that share predictors.
//!
//! Model 1 regresses a multivariate response on the predictors with a sparse group
//! penalty over blocks of the coefficient matrix. Model 2 regresses a scalar outcome
//! (continuous or right-censored) on the same predictors. Each model's penalty is
//! reweighted by the other model's fitted coefficients and the two fits alternate until
//! the coefficients settle.

pub mod cox;
pub mod data;
pub mod error;
pub mod joint;
pub mod linear;
pub mod metrics;
mod penalty;
pub mod prox;
pub mod scalar;
pub mod simgen;
mod solver;
pub mod tuning;
pub mod weights;

pub use cox::{cox_gradient, fit_model2_cox, linear_predictor, partial_likelihood_loss};
pub use data::*;
pub use error::{Error, Result};
pub use joint::{
    build_two_dataset_problem, fit_joint, fit_model2, CvSettings, JointFitResult, JointProblem, Tuning,
    TwoDatasetProblem, WeightSnapshot,
};
pub use linear::{
    backtrack_step, coordinate_gradient, coordinate_prox, coordinate_update, fit_model1, fit_model2_linear,
    group_zero_sweep, nesterov_center, partial_residual, CoordinateState, StepSearch,
};
pub use metrics::{
    null_prediction_error, prediction_error, rrpe, selection_rates, survival_auc, tpr_tnr, SelectionRates,
};
pub use prox::{
    kkt_residual_cox, kkt_residual_model1, kkt_residual_model2, objective_model1, objective_model2_cox,
    objective_model2_linear, soft_threshold, soft_threshold_vec,
};
pub use scalar::{weight_pow, Scalar};
pub use simgen::{
    calibrate_censoring, gen_ground_truth, gen_linear, gen_predictors, gen_survival, scenario_presets, simulate,
    GroundTruth, SimulatedData, SimulationScenario,
};
pub use tuning::{
    cox_deviance, cv_grid_search, default_grid, lambda_max, make_folds, make_stratified_folds, CvProblem, CvRow,
    CvTable, Folds,
};
pub use weights::{
    clamp_log, clamp_log_with, group_weight_norms, normalize_feature_weights, weights_from_beta,
    weights_from_beta_with, weights_from_gamma, weights_from_gamma_with, LogClamp,
};

pub type PredictorMatrixF64 = PredictorMatrix<f64>;
pub type PredictorMatrixF32 = PredictorMatrix<f32>;
pub type MultiResponseF64 = MultiResponse<f64>;
pub type SurvivalOutcomeF64 = SurvivalOutcome<f64>;
pub type ContinuousOutcomeF64 = ContinuousOutcome<f64>;
pub type CoefficientMatrixF64 = CoefficientMatrix<f64>;
pub type CoefficientVectorF64 = CoefficientVector<f64>;
pub type PenaltyWeightsF64 = PenaltyWeights<f64>;
pub type SolverConfigF64 = SolverConfig<f64>;
