//! Simulation pipeline: sample → split → train → evaluate → estimate.
//!
//! Seeds: replicate `j` of a single-model run uses `derive_seed(seed, j)`;
//! replicate `j` at sweep grid point `i` uses
//! `derive_seed(derive_seed(seed, i), j)`. Inside a replicate, stream 0 draws
//! the exemplars, 1 the responses, 2 the split, 3 the MLE's Monte Carlo
//! budget and 4 the unbalanced training sample.

use crate::classify::{
    bayes_oracle_rule, evaluate, score_table, split, train_naive_bayes, Classify, RuleKind,
    ScoreTable,
};
use crate::error::{Error, Result};
use crate::estimators::{
    default_alpha, estimate_from_matrix, estimate_mle_logistic, estimate_naive, smooth_error,
    test_error, ConfusionMatrix, EstimateMethod, EstimateRecord, SCHEMA_VERSION,
};
use crate::models::{
    sample_exemplars, sample_responses, ExemplarSet, LabeledDataset, MiValue, ModelSpec,
    StimulusResponseModel,
};
use crate::seed::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRAIN_PER_CLASS: usize = 1000;
pub const DEFAULT_TEST_PER_CLASS: usize = 1000;
pub const DEFAULT_MC_N: usize = 40_000;

fn default_train() -> usize {
    DEFAULT_TRAIN_PER_CLASS
}
fn default_test() -> usize {
    DEFAULT_TEST_PER_CLASS
}
fn default_methods() -> Vec<EstimateMethod> {
    vec![EstimateMethod::Hd, EstimateMethod::Fano, EstimateMethod::Cm]
}
fn default_one() -> usize {
    1
}
fn default_mc_n() -> usize {
    DEFAULT_MC_N
}
fn default_true() -> bool {
    true
}

/// Signal strengths to sweep, either as multipliers of the model's
/// coefficients or as target true-information values in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleGrid {
    Scales(Vec<f64>),
    TargetMi(Vec<f64>),
}

/// Plain JSON experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub k: usize,
    #[serde(default = "default_train")]
    pub train_per_class: usize,
    /// `r`, test observations per class.
    #[serde(default = "default_test")]
    pub test_per_class: usize,
    pub classifier: RuleKind,
    /// Smoothing weight; `1/(r+1)` when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<EstimateMethod>,
    #[serde(default = "default_one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Outer Monte Carlo budget for nested-MC information values.
    #[serde(default = "default_mc_n")]
    pub mc_n: usize,
    /// Draw training labels uniformly instead of per class. Test sets stay balanced.
    #[serde(default = "default_true")]
    pub balanced_train: bool,
    #[serde(default)]
    pub grid: Option<ScaleGrid>,
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        // malformed JSON is a parse failure; well-formed but invalid content is a config error
        let cfg: Self = serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => Error::Config(e.to_string()),
            _ => Error::Json(e),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<StimulusResponseModel> {
        let model = self.model.build()?;
        if self.k < 2 {
            return Err(Error::Config(format!("k must be >= 2, got {}", self.k)));
        }
        if self.train_per_class < 1 || self.test_per_class < 1 {
            return Err(Error::Config(
                "train_per_class and test_per_class must be >= 1".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("alpha must lie in [0, 1], got {a}")));
            }
        }
        if self.classifier == RuleKind::NaiveBayes && !model.discrete_response() {
            return Err(Error::Config(format!(
                "naive_bayes needs binary responses; use bayes_oracle for {}",
                model.tag()
            )));
        }
        if self.methods.contains(&EstimateMethod::Naive) && !model.discrete_response() {
            return Err(Error::Config(format!(
                "the naive estimator needs discrete responses, not {}",
                model.tag()
            )));
        }
        if self.methods.contains(&EstimateMethod::Mle)
            && !matches!(model, StimulusResponseModel::MultiLogistic(_))
        {
            return Err(Error::Config(
                "the mle estimator is only defined for multi_logistic models".into(),
            ));
        }
        match &self.grid {
            Some(ScaleGrid::Scales(v)) | Some(ScaleGrid::TargetMi(v)) if v.is_empty() => {
                Err(Error::Config("grid must not be empty".into()))
            }
            _ => Ok(model),
        }
    }

    fn alpha_for(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| default_alpha(self.test_per_class as u64))
    }
}

/// Coefficient multiplier at which `model.scaled(s)` carries `target` nats,
/// by bisection on the deterministic information oracle.
pub fn scale_for_mi(model: &StimulusResponseModel, target: f64) -> Result<f64> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::domain(format!(
            "target information must be finite and >= 0, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let mi = |s: f64| -> Result<f64> {
        let v = model.scaled(s)?.true_mi(None, None)?;
        Ok(v.value)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut grow = 0;
    while mi(hi)? < target {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::domain(format!(
                "{target} nats is not reachable by scaling {}",
                model.tag()
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mi(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-replicate summary of the sampled data and its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub schema_version: u32,
    pub replicate: usize,
    pub seed: u64,
    pub train_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    pub e_test: f64,
    pub smoothed_error: f64,
    pub alpha: f64,
    pub confusion: ConfusionMatrix,
    pub estimates: Vec<EstimateRecord>,
}

struct Sampled {
    exemplars: ExemplarSet,
    train: LabeledDataset,
    test: LabeledDataset,
    all: LabeledDataset,
}

fn sample_replicate(
    cfg: &ExperimentConfig,
    model: &StimulusResponseModel,
    seed: u64,
) -> Result<Sampled> {
    let k = cfg.k;
    let exemplars = sample_exemplars(model, k, derive_seed(seed, 0))?;
    if cfg.balanced_train {
        let per = cfg.train_per_class + cfg.test_per_class;
        let all = sample_responses(model, &exemplars, per, derive_seed(seed, 1), true)?;
        let frac = cfg.train_per_class as f64 / per as f64;
        let (train, test) = split(&all, frac, derive_seed(seed, 2))?;
        Ok(Sampled {
            exemplars,
            train,
            test,
            all,
        })
    } else {
        let test = sample_responses(
            model,
            &exemplars,
            cfg.test_per_class,
            derive_seed(seed, 1),
            true,
        )?;
        let train = sample_responses(
            model,
            &exemplars,
            cfg.train_per_class,
            derive_seed(seed, 4),
            false,
        )?;
        let mut records = train.records.clone();
        records.extend(test.records.iter().cloned());
        let all = LabeledDataset::new(k, records, test.discrete)?;
        Ok(Sampled {
            exemplars,
            train,
            test,
            all,
        })
    }
}

fn build_rule<'a>(
    cfg: &ExperimentConfig,
    model: &'a StimulusResponseModel,
    data: &'a Sampled,
) -> Result<Box<dyn Classify + 'a>> {
    Ok(match cfg.classifier {
        RuleKind::BayesOracle => Box::new(bayes_oracle_rule(&data.exemplars, model)),
        RuleKind::NaiveBayes => Box::new(train_naive_bayes(&data.train)?),
    })
}

/// One draw of the whole protocol for a fixed model.
pub fn run_replicate(
    cfg: &ExperimentConfig,
    model: &StimulusResponseModel,
    replicate: usize,
    seed: u64,
) -> Result<ReplicateOutcome> {
    let k = cfg.k;
    let data = sample_replicate(cfg, model, seed)?;
    let rule = build_rule(cfg, model, &data)?;
    let confusion = evaluate(rule.as_ref(), &data.test, k)?;
    let alpha = cfg.alpha_for();
    let e_test = test_error(&confusion);
    let smoothed = smooth_error(e_test, alpha, k)?;

    let tag = model.tag();
    let mut estimates = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let rec = match method {
            EstimateMethod::Naive => estimate_naive(&data.all)?,
            EstimateMethod::Mle => {
                estimate_mle_logistic(&data.all, &data.exemplars, cfg.mc_n, derive_seed(seed, 3))?
            }
            m => estimate_from_matrix(m, &confusion, Some(alpha))?,
        };
        estimates.push(rec.with_seed(seed).with_model_tag(tag.clone()));
    }
    Ok(ReplicateOutcome {
        schema_version: SCHEMA_VERSION,
        replicate,
        seed,
        train_counts: data.train.class_counts(),
        test_counts: data.test.class_counts(),
        e_test,
        smoothed_error: smoothed.value,
        alpha,
        confusion,
        estimates,
    })
}

/// Test-set scores of the replicate drawn from `seed`; the same data and
/// rule as [`run_replicate`] with that seed.
pub fn replicate_scores(
    cfg: &ExperimentConfig,
    model: &StimulusResponseModel,
    seed: u64,
) -> Result<ScoreTable> {
    let data = sample_replicate(cfg, model, seed)?;
    let rule = build_rule(cfg, model, &data)?;
    score_table(rule.as_ref(), &data.test, cfg.k)
}

/// All replicates of a single-model configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub model_tag: String,
    pub k: usize,
    pub true_mi: MiValue,
    pub replicates: Vec<ReplicateOutcome>,
}

/// Runs every replicate of `cfg` on its model as given (the grid is ignored).
pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulationReport> {
    let model = cfg.validate()?;
    simulate_model(cfg, &model, cfg.seed)
}

fn simulate_model(
    cfg: &ExperimentConfig,
    model: &StimulusResponseModel,
    seed: u64,
) -> Result<SimulationReport> {
    let true_mi = model.true_mi(Some(cfg.mc_n), Some(derive_seed(seed, u64::MAX)))?;
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|j| run_replicate(cfg, model, j, derive_seed(seed, j as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationReport {
        schema_version: SCHEMA_VERSION,
        model_tag: model.tag(),
        k: cfg.k,
        true_mi,
        replicates,
    })
}

/// One tidy output row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResultRow {
    pub s: f64,
    pub true_mi: f64,
    pub true_mi_se: f64,
    pub method: EstimateMethod,
    pub replicate: usize,
    pub estimate: f64,
    pub seed: u64,
}

pub const SWEEP_CSV_HEADER: &str = "s,true_mi,true_mi_se,method,replicate,estimate,seed";

/// Resolves the grid to `(s, model)` pairs.
pub fn grid_models(cfg: &ExperimentConfig) -> Result<Vec<(f64, StimulusResponseModel)>> {
    let base = cfg.validate()?;
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a grid (scales or target_mi)".into()))?;
    let scales = match grid {
        ScaleGrid::Scales(v) => v.clone(),
        ScaleGrid::TargetMi(v) => v
            .iter()
            .map(|t| scale_for_mi(&base, *t))
            .collect::<Result<_>>()?,
    };
    scales
        .into_iter()
        .map(|s| Ok((s, base.scaled(s)?)))
        .collect()
}

/// Rows ordered by grid point, then replicate, then method.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepResultRow>> {
    let points = grid_models(cfg)?;
    let mut rows = Vec::new();
    for (i, (s, model)) in points.iter().enumerate() {
        let report = simulate_model(cfg, model, derive_seed(cfg.seed, i as u64))?;
        for rep in &report.replicates {
            for est in &rep.estimates {
                rows.push(SweepResultRow {
                    s: *s,
                    true_mi: report.true_mi.value,
                    true_mi_se: report.true_mi.std_error,
                    method: est.method,
                    replicate: rep.replicate,
                    estimate: est.value,
                    seed: rep.seed,
                });
            }
        }
    }
    Ok(rows)
}
