//! Generative stimulus–response channels and stratified sampling.
//!
//! A classification task is built by drawing `k` exemplar stimuli i.i.d.
//! from the stimulus marginal, then drawing responses conditionally on each
//! exemplar. Every model exposes its exact conditional log-density (used by
//! the Bayes oracle rule) and an oracle for its true mutual information.

mod expfamily;
mod gaussian;
mod logistic;
mod spec;
mod staircase;

pub use expfamily::{ExpFamilyInstance, ExpFamilySequenceParams};
pub use gaussian::GaussianSequenceParams;
pub use logistic::{logistic_mi_1d, logistic_scale_for_mi, Coefficients, MultiLogisticParams};
pub use spec::{CoefficientSpec, DiagSpec, ModelSpec};
pub use staircase::StaircaseParams;

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, SimRng};
use serde::{Deserialize, Serialize};

/// How a true-information value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MiMethod {
    ClosedForm,
    Quadrature,
    NestedMonteCarlo {
        outer: usize,
        inner: usize,
        /// Mean delta-method correction added to `ln p̂(y)`; the size of
        /// the downward bias that was removed.
        bias_correction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiValue {
    /// Nats.
    pub value: f64,
    pub std_error: f64,
    #[serde(flatten)]
    pub method: MiMethod,
}

impl MiValue {
    pub fn exact(value: f64, method: MiMethod) -> Self {
        Self {
            value,
            std_error: 0.0,
            method,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianSequence,
    MultiLogistic,
    ExpFamilySequence,
    Staircase,
}

/// A generative channel `p(x, y) = G(x) p(y | x)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StimulusResponseModel {
    GaussianSequence(GaussianSequenceParams),
    MultiLogistic(MultiLogisticParams),
    ExpFamilySequence(ExpFamilySequenceParams),
    Staircase(StaircaseParams),
}

impl StimulusResponseModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::GaussianSequence(_) => ModelKind::GaussianSequence,
            Self::MultiLogistic(_) => ModelKind::MultiLogistic,
            Self::ExpFamilySequence(_) => ModelKind::ExpFamilySequence,
            Self::Staircase(_) => ModelKind::Staircase,
        }
    }

    pub fn stimulus_dim(&self) -> usize {
        match self {
            Self::GaussianSequence(m) => m.dim(),
            Self::MultiLogistic(m) => m.p(),
            Self::ExpFamilySequence(m) => m.d,
            Self::Staircase(_) => 1,
        }
    }

    pub fn response_dim(&self) -> usize {
        match self {
            Self::GaussianSequence(m) => m.dim(),
            Self::MultiLogistic(m) => m.q(),
            Self::ExpFamilySequence(m) => m.d,
            Self::Staircase(_) => 1,
        }
    }

    /// Whether responses take finitely many values.
    pub fn discrete_response(&self) -> bool {
        match self {
            Self::MultiLogistic(_) => true,
            Self::ExpFamilySequence(m) => m.instance == ExpFamilyInstance::LogisticProduct,
            Self::GaussianSequence(_) | Self::Staircase(_) => false,
        }
    }

    /// Short human-readable description, used as provenance in records.
    pub fn tag(&self) -> String {
        match self {
            Self::GaussianSequence(m) => format!(
                "gaussian_sequence(d={},mi={:.6})",
                m.dim(),
                m.mutual_information()
            ),
            Self::MultiLogistic(m) => match &m.coefficients {
                Coefficients::ScaledIdentity { dim, scale } => {
                    format!("multi_logistic(p=q={dim},B={scale}*I)")
                }
                Coefficients::Dense { p, q, .. } => format!("multi_logistic(p={p},q={q},dense)"),
            },
            Self::ExpFamilySequence(m) => format!(
                "exp_family_sequence({:?},d={},kappa={})",
                m.instance, m.d, m.kappa
            ),
            Self::Staircase(m) => format!("staircase(k_bins={})", m.k_bins),
        }
    }

    /// Model with its signal strength multiplied by `s`: logistic
    /// coefficients or Gaussian stimulus scales.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::domain("scale must be finite"));
        }
        match self {
            Self::MultiLogistic(m) => Ok(Self::MultiLogistic(MultiLogisticParams::new(
                m.coefficients.scaled(s),
            )?)),
            Self::GaussianSequence(m) => Ok(Self::GaussianSequence(GaussianSequenceParams::new(
                m.sigma_x.iter().map(|v| v * s).collect(),
                m.sigma_e.clone(),
            )?)),
            _ => Err(Error::Unsupported(format!(
                "scaling is not defined for {}",
                self.tag()
            ))),
        }
    }

    pub fn sample_stimulus(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self {
            Self::GaussianSequence(m) => m.sample_stimulus(rng, out),
            Self::MultiLogistic(m) => m.sample_stimulus(rng, out),
            Self::ExpFamilySequence(m) => m.sample_stimulus(rng, out),
            Self::Staircase(m) => m.sample_stimulus(rng, out),
        }
    }

    pub fn sample_response(&self, x: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        match self {
            Self::GaussianSequence(m) => m.sample_response(x, rng, out),
            Self::MultiLogistic(m) => m.sample_response(x, rng, out),
            Self::ExpFamilySequence(m) => m.sample_response(x, rng, out),
            Self::Staircase(m) => m.sample_response(x, rng, out),
        }
    }

    /// Exact `ln p(y | x)` including all normalizing constants.
    /// The staircase model returns `−∞` off the stimulus' bin.
    pub fn log_conditional_density(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::GaussianSequence(m) => m.log_conditional_density(x, y),
            Self::MultiLogistic(m) => m.log_conditional_density(x, y),
            Self::ExpFamilySequence(m) => m.log_conditional_density(x, y),
            Self::Staircase(m) => m.log_conditional_density(x, y),
        }
    }

    /// Exact `ln p(y)` where it has a closed form.
    pub fn log_marginal_density(&self, y: &[f64]) -> Option<f64> {
        match self {
            Self::GaussianSequence(m) => Some(m.log_marginal_density(y)),
            Self::MultiLogistic(m) => m.log_marginal_density(y),
            Self::ExpFamilySequence(m) => Some(m.log_marginal_density(y)),
            Self::Staircase(m) => Some(m.log_marginal_density(y)),
        }
    }

    /// True mutual information in nats.
    ///
    /// Closed form for Gaussian, exponential-family and staircase models;
    /// one-dimensional quadrature for separable logistic models; nested
    /// Monte Carlo (which requires `mc_n`) for general logistic models.
    pub fn true_mi(&self, mc_n: Option<usize>, seed: Option<u64>) -> Result<MiValue> {
        match self {
            Self::GaussianSequence(m) => {
                Ok(MiValue::exact(m.mutual_information(), MiMethod::ClosedForm))
            }
            Self::MultiLogistic(m) => m.mutual_information(mc_n, seed),
            Self::ExpFamilySequence(m) => {
                let method = match m.instance {
                    ExpFamilyInstance::GaussianProduct => MiMethod::ClosedForm,
                    ExpFamilyInstance::LogisticProduct => MiMethod::Quadrature,
                };
                Ok(MiValue::exact(m.mutual_information(), method))
            }
            Self::Staircase(m) => Ok(MiValue::exact(m.mutual_information(), MiMethod::ClosedForm)),
        }
    }
}

/// `k` i.i.d. exemplar stimuli; exemplar `i` defines class `i` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub exemplars: Vec<Vec<f64>>,
    pub seed: u64,
}

impl ExemplarSet {
    pub fn new(exemplars: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if exemplars.len() < 2 {
            return Err(Error::domain(format!(
                "need k >= 2 exemplars, got {}",
                exemplars.len()
            )));
        }
        Ok(Self { exemplars, seed })
    }

    pub fn k(&self) -> usize {
        self.exemplars.len()
    }

    pub fn get(&self, class: usize) -> &[f64] {
        &self.exemplars[class]
    }
}

/// Draws `k` exemplars i.i.d. from the model's stimulus marginal.
pub fn sample_exemplars(model: &StimulusResponseModel, k: usize, seed: u64) -> Result<ExemplarSet> {
    if k < 2 {
        return Err(Error::domain(format!("need k >= 2 exemplars, got {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let dim = model.stimulus_dim();
    let exemplars = (0..k)
        .map(|_| {
            let mut x = vec![0.0; dim];
            model.sample_stimulus(&mut rng, &mut x);
            x
        })
        .collect();
    ExemplarSet::new(exemplars, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// 0-based class index.
    pub class: usize,
    pub response: Vec<f64>,
}

/// Labeled responses from stratified sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub k: usize,
    pub records: Vec<Record>,
    /// Whether responses come from a finite support.
    pub discrete: bool,
}

impl LabeledDataset {
    pub fn new(k: usize, records: Vec<Record>, discrete: bool) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("need k >= 2 classes, got {k}")));
        }
        if let Some(r) = records.iter().find(|r| r.class >= k) {
            return Err(Error::domain(format!(
                "class index {} out of range for k = {k}",
                r.class
            )));
        }
        Ok(Self {
            k,
            records,
            discrete,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for r in &self.records {
            counts[r.class] += 1;
        }
        counts
    }

    /// Every class has the same number of records.
    pub fn is_balanced(&self) -> bool {
        let counts = self.class_counts();
        counts.iter().all(|c| *c == counts[0])
    }

    /// Per-class count if balanced.
    pub fn per_class(&self) -> Option<usize> {
        self.is_balanced().then(|| self.class_counts()[0])
    }
}

/// Draws labeled responses for an exemplar set.
///
/// Balanced mode draws exactly `n_per_class` responses per exemplar.
/// Unbalanced mode draws `k · n_per_class` labels uniformly at random and
/// a response for each.
pub fn sample_responses(
    model: &StimulusResponseModel,
    exemplars: &ExemplarSet,
    n_per_class: usize,
    seed: u64,
    balanced: bool,
) -> Result<LabeledDataset> {
    use rand::Rng;
    if n_per_class == 0 {
        return Err(Error::domain("n_per_class must be >= 1"));
    }
    if exemplars.get(0).len() != model.stimulus_dim() {
        return Err(Error::domain(format!(
            "exemplar dimension {} does not match model stimulus dimension {}",
            exemplars.get(0).len(),
            model.stimulus_dim()
        )));
    }
    let k = exemplars.k();
    let mut rng = rng_from_seed(seed);
    let dim = model.response_dim();
    let total = k * n_per_class;
    let mut records = Vec::with_capacity(total);
    for j in 0..total {
        let class = if balanced {
            j / n_per_class
        } else {
            rng.random_range(0..k)
        };
        let mut y = vec![0.0; dim];
        model.sample_response(exemplars.get(class), &mut rng, &mut y);
        records.push(Record { class, response: y });
    }
    LabeledDataset::new(k, records, model.discrete_response())
}

#[cfg(test)]
mod tests;
