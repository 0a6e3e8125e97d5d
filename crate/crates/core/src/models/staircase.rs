use crate::error::{Error, Result};
use crate::seed::SimRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Uniform stimulus on [0, 1]; the response is uniform on the stimulus' bin
/// among `k_bins` equal bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircaseParams {
    pub k_bins: usize,
}

impl StaircaseParams {
    pub fn new(k_bins: usize) -> Result<Self> {
        if k_bins == 0 {
            return Err(Error::domain("staircase needs k_bins >= 1"));
        }
        Ok(Self { k_bins })
    }

    pub fn bin(&self, v: f64) -> usize {
        ((v * self.k_bins as f64).floor().max(0.0) as usize).min(self.k_bins - 1)
    }

    pub(crate) fn sample_stimulus(&self, rng: &mut SimRng, out: &mut [f64]) {
        out[0] = rng.random::<f64>();
    }

    pub(crate) fn sample_response(&self, x: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        let b = self.bin(x[0]) as f64;
        out[0] = (b + rng.random::<f64>()) / self.k_bins as f64;
    }

    pub(crate) fn log_conditional_density(&self, x: &[f64], y: &[f64]) -> f64 {
        if !(0.0..=1.0).contains(&y[0]) || self.bin(x[0]) != self.bin(y[0]) {
            f64::NEG_INFINITY
        } else {
            (self.k_bins as f64).ln()
        }
    }

    pub(crate) fn log_marginal_density(&self, y: &[f64]) -> f64 {
        if (0.0..=1.0).contains(&y[0]) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn mutual_information(&self) -> f64 {
        (self.k_bins as f64).ln()
    }
}
