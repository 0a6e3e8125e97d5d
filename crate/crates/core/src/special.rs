//! Scalar special functions shared by the numerical routines.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(z)` without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// `ln Φ(z)`.
pub fn ln_normal_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-normal_sf(z)).ln_1p()
    } else {
        normal_cdf(z).ln()
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(t)` computed stably for large |t|.
pub fn ln_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// `x ln x` with the convention `0 ln 0 = 0`.
pub fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropy of a Bernoulli(p) variable in nats.
pub fn binary_entropy(p: f64) -> f64 {
    -(xlnx(p) + xlnx(1.0 - p))
}

/// Entropy of Bernoulli(σ(t)), evaluated from the logit so that tails keep precision.
pub fn binary_entropy_logit(t: f64) -> f64 {
    let a = t.abs();
    // h(σ(a)) = ln(1 + e^{-a}) + a·σ(-a)
    (-a).exp().ln_1p() + a * sigmoid(-a)
}

pub const LN2: f64 = LN_2;
