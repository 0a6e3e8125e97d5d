use crate::error::{Error, Result};
use crate::quadrature::normal_expectation;
use crate::seed::{derive_seed, rng_from_seed, SimRng};
use crate::special::{binary_entropy_logit, ln_sigmoid, sigmoid, LN2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MiMethod, MiValue};

/// Coefficient matrix `B` (p × q) of the multiple-response logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coefficients {
    /// `scale · I_dim`.
    ScaledIdentity { dim: usize, scale: f64 },
    /// Row-major `p × q` entries; column `i` drives response `i`.
    Dense {
        p: usize,
        q: usize,
        values: Vec<f64>,
    },
}

impl Coefficients {
    pub fn p(&self) -> usize {
        match self {
            Coefficients::ScaledIdentity { dim, .. } => *dim,
            Coefficients::Dense { p, .. } => *p,
        }
    }

    pub fn q(&self) -> usize {
        match self {
            Coefficients::ScaledIdentity { dim, .. } => *dim,
            Coefficients::Dense { q, .. } => *q,
        }
    }

    /// Entry `B[j, i]`.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        match self {
            Coefficients::ScaledIdentity { scale, .. } => {
                if i == j {
                    *scale
                } else {
                    0.0
                }
            }
            Coefficients::Dense { q, values, .. } => values[j * q + i],
        }
    }

    /// Linear predictor `xᵀ B_i` of response `i`.
    pub fn eta(&self, x: &[f64], i: usize) -> f64 {
        match self {
            Coefficients::ScaledIdentity { scale, .. } => scale * x[i],
            Coefficients::Dense { q, values, .. } => x
                .iter()
                .enumerate()
                .map(|(j, xj)| xj * values[j * q + i])
                .sum(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Coefficients::ScaledIdentity { dim, scale } => Coefficients::ScaledIdentity {
                dim: *dim,
                scale: scale * s,
            },
            Coefficients::Dense { p, q, values } => Coefficients::Dense {
                p: *p,
                q: *q,
                values: values.iter().map(|v| v * s).collect(),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficients::ScaledIdentity { scale, .. } => *scale == 0.0,
            Coefficients::Dense { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Euclidean norm of column `i`.
    pub fn column_norm(&self, i: usize) -> f64 {
        (0..self.p())
            .map(|j| self.get(j, i).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Per-response coupling when every response depends on at most one
    /// stimulus coordinate and no two responses share a coordinate; in that
    /// case responses are independent and the information is additive.
    pub fn separable_scales(&self) -> Option<Vec<f64>> {
        match self {
            Coefficients::ScaledIdentity { dim, scale } => Some(vec![*scale; *dim]),
            Coefficients::Dense { p, q, .. } => {
                let mut used = vec![false; *p];
                let mut scales = Vec::with_capacity(*q);
                for i in 0..*q {
                    let nonzero: Vec<usize> = (0..*p).filter(|&j| self.get(j, i) != 0.0).collect();
                    match nonzero.as_slice() {
                        [] => scales.push(0.0),
                        [j] if !used[*j] => {
                            used[*j] = true;
                            scales.push(self.get(*j, i));
                        }
                        _ => return None,
                    }
                }
                Some(scales)
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let (p, q) = (self.p(), self.q());
        let mut out = vec![0.0; p * q];
        for j in 0..p {
            for i in 0..q {
                out[j * q + i] = self.get(j, i);
            }
        }
        out
    }
}

/// `X ~ N(0, I_p)`, `Y_i | X = x ~ Bernoulli(σ(xᵀ B_i))`, `i = 1..q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLogisticParams {
    pub coefficients: Coefficients,
}

impl MultiLogisticParams {
    pub fn new(coefficients: Coefficients) -> Result<Self> {
        let (p, q) = (coefficients.p(), coefficients.q());
        if p == 0 || q == 0 {
            return Err(Error::domain("logistic model needs p, q >= 1"));
        }
        match &coefficients {
            Coefficients::ScaledIdentity { scale, .. } if !scale.is_finite() => {
                return Err(Error::domain("coefficient scale must be finite"));
            }
            Coefficients::Dense { values, .. } => {
                if values.len() != p * q {
                    return Err(Error::domain(format!(
                        "coefficient matrix needs {} entries, got {}",
                        p * q,
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("coefficients must be finite"));
                }
            }
            _ => {}
        }
        Ok(Self { coefficients })
    }

    /// `B = scale · I_dim`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        Self::new(Coefficients::ScaledIdentity { dim, scale })
    }

    pub fn p(&self) -> usize {
        self.coefficients.p()
    }

    pub fn q(&self) -> usize {
        self.coefficients.q()
    }

    pub(crate) fn sample_stimulus(&self, rng: &mut SimRng, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
    }

    pub(crate) fn sample_response(&self, x: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let p1 = sigmoid(self.coefficients.eta(x, i));
            *o = if rng.random::<f64>() < p1 { 1.0 } else { 0.0 };
        }
    }

    pub(crate) fn log_conditional_density(&self, x: &[f64], y: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, &yi)| {
                let eta = self.coefficients.eta(x, i);
                if yi > 0.5 {
                    ln_sigmoid(eta)
                } else {
                    ln_sigmoid(-eta)
                }
            })
            .sum()
    }

    pub(crate) fn log_marginal_density(&self, _y: &[f64]) -> Option<f64> {
        self.coefficients
            .separable_scales()
            .map(|s| -(s.len() as f64) * LN2)
    }

    /// Conditional entropy `H(Y | X)`; exact because each `xᵀB_i` is a
    /// centered normal with standard deviation `‖B_i‖`.
    pub fn conditional_entropy(&self) -> f64 {
        (0..self.q())
            .map(|i| LN2 - logistic_mi_1d(self.coefficients.column_norm(i)))
            .sum()
    }

    pub fn mutual_information(&self, mc_n: Option<usize>, seed: Option<u64>) -> Result<MiValue> {
        if self.coefficients.is_zero() {
            return Ok(MiValue::exact(0.0, MiMethod::ClosedForm));
        }
        if let Some(scales) = self.coefficients.separable_scales() {
            let value = scales.iter().map(|s| logistic_mi_1d(*s)).sum();
            return Ok(MiValue::exact(value, MiMethod::Quadrature));
        }
        let n = mc_n.ok_or_else(|| {
            Error::domain("non-separable logistic model needs a Monte Carlo budget (mc_n)")
        })?;
        Ok(self.nested_monte_carlo(n, None, seed.unwrap_or(0)))
    }

    /// `I = −H(Y|X) − E[ln p̂(Y)]` with `p̂(y)` averaged over `inner` fresh
    /// stimuli per outer draw (default `⌈√outer⌉`). A delta-method term
    /// removes the leading `O(1/inner)` downward bias of `ln p̂`.
    pub fn nested_monte_carlo(&self, outer: usize, inner: Option<usize>, seed: u64) -> MiValue {
        const BLOCK: usize = 256;
        let outer = outer.max(2);
        let inner = inner
            .unwrap_or((outer as f64).sqrt().ceil() as usize)
            .max(2);
        let (p, q) = (self.p(), self.q());
        let dense = self.coefficients.to_dense();
        let blocks = outer.div_ceil(BLOCK);

        let per_block: Vec<(Vec<f64>, f64)> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = rng_from_seed(derive_seed(seed, b as u64));
                let count = BLOCK.min(outer - b * BLOCK);
                let mut x = vec![0.0; p];
                let mut y = vec![0.0; q];
                let mut eta = vec![0.0; q];
                let mut logs = vec![0.0; inner];
                let mut terms = Vec::with_capacity(count);
                let mut correction_sum = 0.0;
                for _ in 0..count {
                    self.sample_stimulus(&mut rng, &mut x);
                    self.sample_response(&x, &mut rng, &mut y);
                    for l in logs.iter_mut() {
                        self.sample_stimulus(&mut rng, &mut x);
                        dense_eta(&dense, q, &x, &mut eta);
                        *l = y
                            .iter()
                            .zip(&eta)
                            .map(|(yi, e)| {
                                if *yi > 0.5 {
                                    ln_sigmoid(*e)
                                } else {
                                    ln_sigmoid(-*e)
                                }
                            })
                            .sum();
                    }
                    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for l in &logs {
                        let w = (l - max).exp();
                        s1 += w;
                        s2 += w * w;
                    }
                    let m = inner as f64;
                    let mean_w = s1 / m;
                    let var_w = ((s2 - s1 * s1 / m) / (m - 1.0)).max(0.0);
                    let correction = var_w / (2.0 * m * mean_w * mean_w);
                    correction_sum += correction;
                    terms.push(max + mean_w.ln() + correction);
                }
                (terms, correction_sum)
            })
            .collect();

        let mut terms = Vec::with_capacity(outer);
        let mut correction = 0.0;
        for (t, c) in per_block {
            terms.extend(t);
            correction += c;
        }
        let n = terms.len() as f64;
        let mean_log_marginal = terms.iter().sum::<f64>() / n;
        let se = crate::stats::std_error(&terms);
        MiValue {
            value: (-self.conditional_entropy() - mean_log_marginal).max(0.0),
            std_error: se,
            method: MiMethod::NestedMonteCarlo {
                outer,
                inner,
                bias_correction: correction / n,
            },
        }
    }
}

fn dense_eta(dense: &[f64], q: usize, x: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (j, xj) in x.iter().enumerate() {
        let row = &dense[j * q..(j + 1) * q];
        for (o, b) in out.iter_mut().zip(row) {
            *o += xj * b;
        }
    }
}

/// `I(X; Y)` for `X ~ N(0,1)`, `Y | X ~ Bernoulli(σ(sX))`: `ln 2 − E[h(σ(sX))]`.
pub fn logistic_mi_1d(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let s = s.abs();
    let cond = normal_expectation(&|z: f64| binary_entropy_logit(s * z), 0.0);
    (LN2 - cond).max(0.0)
}

/// Coupling `s ≥ 0` with `logistic_mi_1d(s) = target`, by bisection.
pub fn logistic_scale_for_mi(target: f64) -> Result<f64> {
    if !(0.0..LN2).contains(&target) {
        return Err(Error::domain(format!(
            "per-response information must lie in [0, ln 2), got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while logistic_mi_1d(hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::domain("target information too close to ln 2"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if logistic_mi_1d(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
