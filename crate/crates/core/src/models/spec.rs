//! JSON model parameter files.
//!
//! ```json
//! {"kind": "multi_logistic", "p": 10, "q": 10, "coefficients": {"scaled_identity": 1.2649}}
//! {"kind": "multi_logistic", "p": 2, "q": 2, "coefficients": {"row_major": [1, 0, 0, 1]}}
//! {"kind": "multi_logistic", "p": 20, "q": 40, "coefficients": {"random_normal": {"variance": 0.025, "seed": 7}}}
//! {"kind": "gaussian_sequence", "d": 64, "sigma_x": 0.1, "sigma_e": 1.0}
//! {"kind": "gaussian_sequence", "sigma_x": [1.0, 0.5], "sigma_e": [1.0, 1.0]}
//! {"kind": "exp_family_sequence", "instance": "logistic_product", "d": 100, "kappa": 0.02}
//! {"kind": "staircase", "k_bins": 20}
//! ```

use super::*;
use crate::seed::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    ScaledIdentity(f64),
    RowMajor(Vec<f64>),
    /// Entries i.i.d. `N(0, variance)`, drawn from `seed`.
    RandomNormal {
        variance: f64,
        seed: u64,
    },
}

/// A per-coordinate scale given either once for all `d` coordinates or as a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiagSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl DiagSpec {
    fn expand(&self, d: Option<usize>, name: &str) -> Result<Vec<f64>> {
        match (self, d) {
            (DiagSpec::Vector(v), None) => Ok(v.clone()),
            (DiagSpec::Vector(v), Some(d)) if v.len() == d => Ok(v.clone()),
            (DiagSpec::Vector(v), Some(d)) => Err(Error::Config(format!(
                "{name} has {} entries but d = {d}",
                v.len()
            ))),
            (DiagSpec::Scalar(s), Some(d)) => Ok(vec![*s; d]),
            (DiagSpec::Scalar(_), None) => Err(Error::Config(format!("scalar {name} requires d"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    GaussianSequence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        sigma_x: DiagSpec,
        sigma_e: DiagSpec,
    },
    MultiLogistic {
        p: usize,
        q: usize,
        coefficients: CoefficientSpec,
    },
    ExpFamilySequence {
        instance: ExpFamilyInstance,
        d: usize,
        kappa: f64,
    },
    Staircase {
        k_bins: usize,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<StimulusResponseModel> {
        let model = match self {
            ModelSpec::GaussianSequence {
                d,
                sigma_x,
                sigma_e,
            } => {
                let sx = sigma_x.expand(*d, "sigma_x")?;
                let se = sigma_e.expand(*d, "sigma_e")?;
                StimulusResponseModel::GaussianSequence(GaussianSequenceParams::new(sx, se)?)
            }
            ModelSpec::MultiLogistic { p, q, coefficients } => {
                let coefficients = match coefficients {
                    CoefficientSpec::ScaledIdentity(s) => {
                        if p != q {
                            return Err(Error::Config(format!(
                                "scaled_identity needs p == q, got {p} and {q}"
                            )));
                        }
                        Coefficients::ScaledIdentity { dim: *p, scale: *s }
                    }
                    CoefficientSpec::RowMajor(values) => Coefficients::Dense {
                        p: *p,
                        q: *q,
                        values: values.clone(),
                    },
                    CoefficientSpec::RandomNormal { variance, seed } => {
                        if !(*variance >= 0.0) {
                            return Err(Error::Config(
                                "random_normal variance must be >= 0".into(),
                            ));
                        }
                        let mut rng = rng_from_seed(*seed);
                        let sd = variance.sqrt();
                        Coefficients::Dense {
                            p: *p,
                            q: *q,
                            values: (0..p * q)
                                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                                .collect(),
                        }
                    }
                };
                StimulusResponseModel::MultiLogistic(MultiLogisticParams::new(coefficients)?)
            }
            ModelSpec::ExpFamilySequence { instance, d, kappa } => {
                StimulusResponseModel::ExpFamilySequence(ExpFamilySequenceParams::new(
                    *instance, *d, *kappa,
                )?)
            }
            ModelSpec::Staircase { k_bins } => {
                StimulusResponseModel::Staircase(StaircaseParams::new(*k_bins)?)
            }
        };
        Ok(model)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<&StimulusResponseModel> for ModelSpec {
    fn from(model: &StimulusResponseModel) -> Self {
        match model {
            StimulusResponseModel::GaussianSequence(m) => ModelSpec::GaussianSequence {
                d: None,
                sigma_x: DiagSpec::Vector(m.sigma_x.clone()),
                sigma_e: DiagSpec::Vector(m.sigma_e.clone()),
            },
            StimulusResponseModel::MultiLogistic(m) => ModelSpec::MultiLogistic {
                p: m.p(),
                q: m.q(),
                coefficients: match &m.coefficients {
                    Coefficients::ScaledIdentity { scale, .. } => {
                        CoefficientSpec::ScaledIdentity(*scale)
                    }
                    Coefficients::Dense { values, .. } => CoefficientSpec::RowMajor(values.clone()),
                },
            },
            StimulusResponseModel::ExpFamilySequence(m) => ModelSpec::ExpFamilySequence {
                instance: m.instance,
                d: m.d,
                kappa: m.kappa,
            },
            StimulusResponseModel::Staircase(m) => ModelSpec::Staircase { k_bins: m.k_bins },
        }
    }
}
