//! Product-form exponential family models: `d` independent scalar blocks, each
//! with joint density `∝ b_x(x) b_y(y) exp(κ t(x, y))`.

use crate::error::{Error, Result};
use crate::quadrature::normal_expectation;
use crate::seed::SimRng;
use crate::special::{binary_entropy_logit, ln_sigmoid, sigmoid, LN2, LN_SQRT_2PI};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpFamilyInstance {
    /// Standard normal carriers, `t(x, y) = xy`. Needs `|κ| < 1`.
    GaussianProduct,
    /// Standard normal carrier for `x`, uniform on {0, 1} for `y`,
    /// `t(x, y) = x (2y − 1)`.
    LogisticProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilySequenceParams {
    pub instance: ExpFamilyInstance,
    pub d: usize,
    pub kappa: f64,
}

impl ExpFamilySequenceParams {
    pub fn new(instance: ExpFamilyInstance, d: usize, kappa: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("exponential family model needs d >= 1"));
        }
        if !kappa.is_finite() {
            return Err(Error::domain("kappa must be finite"));
        }
        if instance == ExpFamilyInstance::GaussianProduct && kappa.abs() >= 1.0 {
            return Err(Error::domain(format!(
                "gaussian product needs |kappa| < 1 for a normalizable density, got {kappa}"
            )));
        }
        Ok(Self { instance, d, kappa })
    }

    /// Coupling `κ_d = c / d`.
    pub fn with_limit(instance: ExpFamilyInstance, d: usize, c: f64) -> Result<Self> {
        Self::new(instance, d, c / d as f64)
    }

    /// Log normalizer `ln Z_d` relative to the product of carriers.
    pub fn log_normalizer(&self) -> f64 {
        let k = self.kappa;
        let per_block = match self.instance {
            ExpFamilyInstance::GaussianProduct => -0.5 * (-k * k).ln_1p(),
            // ∫ φ(x) cosh(κx) dx = e^{κ²/2}
            ExpFamilyInstance::LogisticProduct => 0.5 * k * k,
        };
        self.d as f64 * per_block
    }

    pub(crate) fn sample_stimulus(&self, rng: &mut SimRng, out: &mut [f64]) {
        let k = self.kappa;
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = match self.instance {
                ExpFamilyInstance::GaussianProduct => z / (1.0 - k * k).sqrt(),
                // marginal ½N(κ,1) + ½N(−κ,1)
                ExpFamilyInstance::LogisticProduct => {
                    if rng.random::<bool>() {
                        z + k
                    } else {
                        z - k
                    }
                }
            };
        }
    }

    pub(crate) fn sample_response(&self, x: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        let k = self.kappa;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = match self.instance {
                ExpFamilyInstance::GaussianProduct => k * xi + rng.sample::<f64, _>(StandardNormal),
                ExpFamilyInstance::LogisticProduct => {
                    if rng.random::<f64>() < sigmoid(2.0 * k * xi) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
    }

    pub(crate) fn log_conditional_density(&self, x: &[f64], y: &[f64]) -> f64 {
        let k = self.kappa;
        x.iter()
            .zip(y)
            .map(|(xi, yi)| match self.instance {
                ExpFamilyInstance::GaussianProduct => {
                    let r = yi - k * xi;
                    -LN_SQRT_2PI - 0.5 * r * r
                }
                ExpFamilyInstance::LogisticProduct => {
                    let t = 2.0 * k * xi;
                    if *yi > 0.5 {
                        ln_sigmoid(t)
                    } else {
                        ln_sigmoid(-t)
                    }
                }
            })
            .sum()
    }

    pub(crate) fn log_marginal_density(&self, y: &[f64]) -> f64 {
        match self.instance {
            ExpFamilyInstance::GaussianProduct => {
                let var = 1.0 / (1.0 - self.kappa * self.kappa);
                y.iter()
                    .map(|yi| -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * yi * yi / var)
                    .sum()
            }
            ExpFamilyInstance::LogisticProduct => -(y.len() as f64) * LN2,
        }
    }

    /// Information of a single block.
    pub fn block_mutual_information(&self) -> f64 {
        let k = self.kappa;
        match self.instance {
            ExpFamilyInstance::GaussianProduct => -0.5 * (-k * k).ln_1p(),
            ExpFamilyInstance::LogisticProduct => {
                if k == 0.0 {
                    return 0.0;
                }
                // by symmetry condition on the +κ mixture component
                let cond =
                    normal_expectation(&|z: f64| binary_entropy_logit(2.0 * k * (z + k)), -k);
                (LN2 - cond).max(0.0)
            }
        }
    }

    pub fn mutual_information(&self) -> f64 {
        self.d as f64 * self.block_mutual_information()
    }
}
