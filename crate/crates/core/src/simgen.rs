//! Simulated designs: block-correlated predictors, sparse ground truth with a chosen overlap
//! between the two models' supports, and continuous or exponential survival outcomes.

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{
    CoefficientMatrix, CoefficientVector, ContinuousOutcome, GroupStructure, MultiResponse, Outcome, OutcomeKind,
    PredictorMatrix, SurvivalOutcome,
};
use crate::error::{Error, Result};

// Independent ChaCha streams per purpose.
const STREAM_TRUTH: u64 = 1;
const STREAM_X: u64 = 2;
const STREAM_Y: u64 = 3;
const STREAM_Z: u64 = 4;
const STREAM_CENSOR: u64 = 5;
const STREAM_TEST: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub x_group_count: usize,
    pub y_group_count: usize,
    pub effect_size: f64,
    pub overlap_fraction: f64,
    pub outcome_kind: OutcomeKind,
    pub censor_target: f64,
    pub within_block_correlation: f64,
    pub noise_sd: f64,
    pub baseline_hazard: f64,
    pub n_important: usize,
    /// Response groups carrying signal for each important Model 1 feature.
    pub y_groups_per_feature: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for SimulationScenario {
    fn default() -> Self {
        Self {
            n: 100,
            p: 200,
            q: 120,
            x_group_count: 20,
            y_group_count: 4,
            effect_size: 0.5,
            overlap_fraction: 1.0,
            outcome_kind: OutcomeKind::Continuous,
            censor_target: 0.2,
            within_block_correlation: 0.5,
            noise_sd: 1.0,
            baseline_hazard: 0.1,
            n_important: 20,
            y_groups_per_feature: 2,
            test_size: 200,
            seed: 1,
        }
    }
}

impl SimulationScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.n < 2 || self.p == 0 || self.q == 0 {
            return bad(format!("need n >= 2, p >= 1, q >= 1, got n={}, p={}, q={}", self.n, self.p, self.q));
        }
        if self.x_group_count == 0 || self.x_group_count > self.p || self.y_group_count == 0 || self.y_group_count > self.q {
            return bad("group counts must lie in 1..=p and 1..=q".into());
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction <= 1.0) {
            return bad(format!("overlap fraction must lie in (0, 1], got {}", self.overlap_fraction));
        }
        if !(0.0..1.0).contains(&self.censor_target) {
            return bad(format!("censoring target must lie in [0, 1), got {}", self.censor_target));
        }
        if self.n_important == 0 || self.n_important > self.p {
            return bad(format!("n_important must lie in 1..=p, got {}", self.n_important));
        }
        let shared = self.shared_count();
        if self.n_important - shared > self.p - self.n_important {
            return bad("not enough unimportant features to fill the non-shared Model 1 support".into());
        }
        if self.y_groups_per_feature == 0 || self.y_groups_per_feature > self.y_group_count {
            return bad("y_groups_per_feature must lie in 1..=y_group_count".into());
        }
        if !(self.within_block_correlation.abs() < 1.0) {
            return bad("within-block correlation must lie in (-1, 1)".into());
        }
        if !(self.noise_sd >= 0.0 && self.baseline_hazard > 0.0 && self.effect_size.is_finite()) {
            return bad("noise_sd must be nonnegative and baseline_hazard positive".into());
        }
        if self.test_size == 0 {
            return bad("test_size must be positive".into());
        }
        Ok(())
    }

    /// `floor(overlap * n_important)`, robust to the fraction's binary rounding.
    pub fn shared_count(&self) -> usize {
        ((self.overlap_fraction * self.n_important as f64) + 1e-9).floor() as usize
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    pub fn feature_names(&self) -> Vec<String> {
        let w = self.p.to_string().len().max(3);
        (1..=self.p).map(|j| format!("x{j:0w$}")).collect()
    }

    pub fn response_names(&self) -> Vec<String> {
        let w = self.q.to_string().len().max(3);
        (1..=self.q).map(|k| format!("y{k:0w$}")).collect()
    }

    pub fn xgroups(&self) -> GroupStructure {
        GroupStructure::contiguous(self.p, self.x_group_count, "gx").expect("validated counts")
    }

    pub fn ygroups(&self) -> GroupStructure {
        GroupStructure::contiguous(self.q, self.y_group_count, "gy").expect("validated counts")
    }
}

/// Named preset: LS1-LS4 (continuous) and S1-S4 (survival) with the given overlap.
pub fn scenario_presets(name: &str, overlap: f64) -> Result<SimulationScenario> {
    let (n, effect, kind) = match name {
        "LS1" => (100, 0.5, OutcomeKind::Continuous),
        "LS2" => (50, 0.5, OutcomeKind::Continuous),
        "LS3" => (100, 0.3, OutcomeKind::Continuous),
        "LS4" => (50, 0.3, OutcomeKind::Continuous),
        "S1" => (100, 0.3, OutcomeKind::Survival),
        "S2" => (50, 0.3, OutcomeKind::Survival),
        "S3" => (100, 0.25, OutcomeKind::Survival),
        "S4" => (50, 0.25, OutcomeKind::Survival),
        other => return Err(Error::invalid(format!("unknown scenario preset `{other}` (expected LS1-LS4 or S1-S4)"))),
    };
    let s = SimulationScenario { n, effect_size: effect, outcome_kind: kind, overlap_fraction: overlap, ..Default::default() };
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub b_true: CoefficientMatrix<f64>,
    pub g_true: CoefficientVector<f64>,
    pub important_model1: Vec<usize>,
    pub important_model2: Vec<usize>,
}

/// One simulated replication: training data, test data and the truth behind them.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub scenario: SimulationScenario,
    pub x: PredictorMatrix<f64>,
    pub y: MultiResponse<f64>,
    pub outcome: Outcome<f64>,
    pub x_test: PredictorMatrix<f64>,
    pub outcome_test: Outcome<f64>,
    pub xgroups: GroupStructure,
    pub ygroups: GroupStructure,
    pub truth: GroundTruth,
}

fn sample_predictors(s: &SimulationScenario, rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let rho = s.within_block_correlation;
    let innov = (1.0 - rho * rho).sqrt();
    let groups = s.xgroups();
    let mut x = Array2::zeros((n, s.p));
    for i in 0..n {
        for g in groups.groups() {
            let mut prev = 0.0;
            for (a, &j) in g.members.iter().enumerate() {
                let e: f64 = rng.sample(StandardNormal);
                prev = if a == 0 { e } else { rho * prev + innov * e };
                x[[i, j]] = prev;
            }
        }
    }
    x
}

/// Rows i.i.d. normal with unit variances and AR(1) correlation `rho^|a-b|` inside each
/// predictor group, independent across groups.
pub fn gen_predictors(s: &SimulationScenario) -> Result<PredictorMatrix<f64>> {
    s.validate()?;
    PredictorMatrix::new(sample_predictors(s, &mut s.rng(STREAM_X), s.n), s.feature_names())
}

fn alternating_signs(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let first = if rng.random::<bool>() { 1.0 } else { -1.0 };
    (0..len).map(|r| if r % 2 == 0 { first } else { -first }).collect()
}

pub fn gen_ground_truth(s: &SimulationScenario) -> Result<GroundTruth> {
    s.validate()?;
    let mut rng = s.rng(STREAM_TRUTH);
    let mut imp2: Vec<usize> = sample(&mut rng, s.p, s.n_important).into_vec();
    imp2.sort_unstable();
    let shared = s.shared_count();
    let mut imp1: Vec<usize> = sample(&mut rng, s.n_important, shared).into_iter().map(|r| imp2[r]).collect();
    let complement: Vec<usize> = (0..s.p).filter(|j| imp2.binary_search(j).is_err()).collect();
    imp1.extend(sample(&mut rng, complement.len(), s.n_important - shared).into_iter().map(|r| complement[r]));
    imp1.sort_unstable();

    let mut g_true = Array1::zeros(s.p);
    for (&j, sign) in imp2.iter().zip(alternating_signs(&mut rng, imp2.len())) {
        g_true[j] = sign * s.effect_size;
    }
    let ygroups = s.ygroups();
    let mut b_true = Array2::zeros((s.p, s.q));
    for (&j, sign) in imp1.iter().zip(alternating_signs(&mut rng, imp1.len())) {
        for g in sample(&mut rng, s.y_group_count, s.y_groups_per_feature) {
            for &k in &ygroups.groups()[g].members {
                b_true[[j, k]] = sign * s.effect_size;
            }
        }
    }
    Ok(GroundTruth {
        b_true: CoefficientMatrix { values: b_true },
        g_true: CoefficientVector { values: g_true },
        important_model1: imp1,
        important_model2: imp2,
    })
}

fn noise(rng: &mut ChaCha8Rng, shape: (usize, usize), sd: f64) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| sd * rng.sample::<f64, _>(StandardNormal))
}

/// Censoring rate `c` with `mean_i c / (c + h_i) = target`, found by bisection on `ln c`.
pub fn calibrate_censoring(hazards: &[f64], target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid(format!("censoring target must lie in (0, 1), got {target}")));
    }
    if hazards.is_empty() || hazards.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Numerical("hazards must be finite and positive to calibrate censoring".into()));
    }
    let rate = |c: f64| hazards.iter().map(|h| c / (c + h)).sum::<f64>() / hazards.len() as f64;
    let hmin = hazards.iter().copied().fold(f64::INFINITY, f64::min);
    let hmax = hazards.iter().copied().fold(0.0, f64::max);
    let (mut lo, mut hi) = ((hmin * 1e-12).ln(), (hmax * 1e12).ln());
    if !(rate(lo.exp()) < target && rate(hi.exp()) > target) {
        return Err(Error::Numerical(format!(
            "censoring target {target} not bracketed: rates {} to {} over hazards [{hmin}, {hmax}]",
            rate(lo.exp()),
            rate(hi.exp())
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn survival_outcome(s: &SimulationScenario, x: &Array2<f64>, g: &Array1<f64>, rng: &mut ChaCha8Rng, crng: &mut ChaCha8Rng) -> Result<SurvivalOutcome<f64>> {
    let hazards: Vec<f64> = x.dot(g).iter().map(|eta| s.baseline_hazard * eta.exp()).collect();
    let censor_rate = if s.censor_target > 0.0 { Some(calibrate_censoring(&hazards, s.censor_target)?) } else { None };
    let n = hazards.len();
    let mut time = Array1::zeros(n);
    let mut event = vec![true; n];
    for i in 0..n {
        let t: f64 = rng.sample(Exp::new(hazards[i]).map_err(|e| Error::Numerical(e.to_string()))?);
        let t = t.max(f64::MIN_POSITIVE);
        if let Some(c) = censor_rate {
            let ct: f64 = crng.sample(Exp::new(c).map_err(|e| Error::Numerical(e.to_string()))?);
            let ct = ct.max(f64::MIN_POSITIVE);
            if ct < t {
                time[i] = ct;
                event[i] = false;
                continue;
            }
        }
        time[i] = t;
    }
    SurvivalOutcome::new(time, event)
}

fn outcome(
    s: &SimulationScenario,
    x: &Array2<f64>,
    truth: &GroundTruth,
    zrng: &mut ChaCha8Rng,
    crng: &mut ChaCha8Rng,
) -> Result<Outcome<f64>> {
    Ok(match s.outcome_kind {
        OutcomeKind::Continuous => {
            let z = x.dot(&truth.g_true.values) + noise(zrng, (x.nrows(), 1), s.noise_sd).column(0);
            Outcome::Continuous(ContinuousOutcome::new(z)?)
        }
        OutcomeKind::Survival => Outcome::Survival(survival_outcome(s, x, &truth.g_true.values, zrng, crng)?),
    })
}

/// Full replication: `Y = X B + W`, the scenario's Model 2 outcome, and an independent
/// test set of `test_size` rows drawn from the same truth.
pub fn simulate(s: &SimulationScenario) -> Result<SimulatedData> {
    s.validate()?;
    let truth = gen_ground_truth(s)?;
    let x = sample_predictors(s, &mut s.rng(STREAM_X), s.n);
    let y = x.dot(&truth.b_true.values) + noise(&mut s.rng(STREAM_Y), (s.n, s.q), s.noise_sd);
    let out = outcome(s, &x, &truth, &mut s.rng(STREAM_Z), &mut s.rng(STREAM_CENSOR))?;
    let mut trng = s.rng(STREAM_TEST);
    let xt = sample_predictors(s, &mut trng, s.test_size);
    let mut crng = trng.clone();
    crng.set_stream(STREAM_TEST + 1);
    let out_test = outcome(s, &xt, &truth, &mut trng, &mut crng)?;
    Ok(SimulatedData {
        scenario: s.clone(),
        x: PredictorMatrix::new(x, s.feature_names())?,
        y: MultiResponse::new(y, s.response_names())?,
        outcome: out,
        x_test: PredictorMatrix::new(xt, s.feature_names())?,
        outcome_test: out_test,
        xgroups: s.xgroups(),
        ygroups: s.ygroups(),
        truth,
    })
}

/// [`simulate`] for a continuous scenario.
pub fn gen_linear(s: &SimulationScenario) -> Result<SimulatedData> {
    if s.outcome_kind != OutcomeKind::Continuous {
        return Err(Error::invalid("gen_linear needs a continuous scenario"));
    }
    simulate(s)
}

/// [`simulate`] for a survival scenario.
pub fn gen_survival(s: &SimulationScenario) -> Result<SimulatedData> {
    if s.outcome_kind != OutcomeKind::Survival {
        return Err(Error::invalid("gen_survival needs a survival scenario"));
    }
    simulate(s)
}
