use crate::error::{Error, Result};
use crate::seed::SimRng;
use crate::special::LN_SQRT_2PI;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// `X ~ N(0, diag(sigma_x²))`, `Y = X + E`, `E ~ N(0, diag(sigma_e²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSequenceParams {
    pub sigma_x: Vec<f64>,
    pub sigma_e: Vec<f64>,
}

impl GaussianSequenceParams {
    pub fn new(sigma_x: Vec<f64>, sigma_e: Vec<f64>) -> Result<Self> {
        let p = Self { sigma_x, sigma_e };
        p.validate()?;
        Ok(p)
    }

    /// `d` identical coordinates.
    pub fn isotropic(d: usize, sigma_x: f64, sigma_e: f64) -> Result<Self> {
        Self::new(vec![sigma_x; d], vec![sigma_e; d])
    }

    /// `d` identical coordinates whose total information is exactly `iota`
    /// nats, with unit noise.
    pub fn with_total_mi(d: usize, iota: f64) -> Result<Self> {
        if d == 0 || !(iota >= 0.0) || !iota.is_finite() {
            return Err(Error::domain("need d >= 1 and finite iota >= 0"));
        }
        if iota == 0.0 {
            return Err(Error::domain(
                "iota = 0 needs sigma_x = 0; use a null model instead",
            ));
        }
        let snr = (2.0 * iota / d as f64).exp_m1();
        Self::isotropic(d, snr.sqrt(), 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_x.is_empty() || self.sigma_x.len() != self.sigma_e.len() {
            return Err(Error::domain(format!(
                "sigma_x and sigma_e need equal nonzero length, got {} and {}",
                self.sigma_x.len(),
                self.sigma_e.len()
            )));
        }
        if self
            .sigma_x
            .iter()
            .chain(&self.sigma_e)
            .any(|s| !(*s > 0.0) || !s.is_finite())
        {
            return Err(Error::domain(
                "gaussian sequence scales must be finite and > 0",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.sigma_x.len()
    }

    pub(crate) fn sample_stimulus(&self, rng: &mut SimRng, out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.sigma_x) {
            *o = s * rng.sample::<f64, _>(StandardNormal);
        }
    }

    pub(crate) fn sample_response(&self, x: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        for ((o, xi), s) in out.iter_mut().zip(x).zip(&self.sigma_e) {
            *o = xi + s * rng.sample::<f64, _>(StandardNormal);
        }
    }

    pub(crate) fn log_conditional_density(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((yi, xi), s) in y.iter().zip(x).zip(&self.sigma_e) {
            let z = (yi - xi) / s;
            total -= LN_SQRT_2PI + s.ln() + 0.5 * z * z;
        }
        total
    }

    pub(crate) fn log_marginal_density(&self, y: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((yi, sx), se) in y.iter().zip(&self.sigma_x).zip(&self.sigma_e) {
            let var = sx * sx + se * se;
            total -= LN_SQRT_2PI + 0.5 * var.ln() + 0.5 * yi * yi / var;
        }
        total
    }

    /// `½ Σ ln(1 + σ_x²/σ_e²)`.
    pub fn mutual_information(&self) -> f64 {
        self.sigma_x
            .iter()
            .zip(&self.sigma_e)
            .map(|(sx, se)| 0.5 * (sx * sx / (se * se)).ln_1p())
            .sum()
    }
}
