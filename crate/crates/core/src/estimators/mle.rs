//! Plug-in information of a fitted multiple-response logistic model.

use super::{EstimateMethod, EstimateRecord};
use crate::error::{Error, Result};
use crate::models::{Coefficients, ExemplarSet, LabeledDataset, MultiLogisticParams};
use crate::special::{ln_sigmoid, sigmoid};
use nalgebra::{DMatrix, DVector};

/// Stop when the log-likelihood gradient norm falls below this.
pub const IRLS_GRAD_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;
const SEPARATION_ETA: f64 = 50.0;
const STEP_TOL: f64 = 1e-6;

/// Successes and trials for one response at each exemplar.
struct Tally {
    ones: Vec<f64>,
    trials: Vec<f64>,
}

fn tallies(data: &LabeledDataset, q: usize) -> Result<Vec<Tally>> {
    let k = data.k;
    let mut out: Vec<Tally> = (0..q)
        .map(|_| Tally {
            ones: vec![0.0; k],
            trials: vec![0.0; k],
        })
        .collect();
    for rec in &data.records {
        if rec.response.len() != q {
            return Err(Error::domain(format!(
                "response has {} coordinates, expected {q}",
                rec.response.len()
            )));
        }
        for (t, y) in out.iter_mut().zip(&rec.response) {
            t.trials[rec.class] += 1.0;
            if *y > 0.5 {
                t.ones[rec.class] += 1.0;
            }
        }
    }
    Ok(out)
}

fn log_likelihood(design: &DMatrix<f64>, tally: &Tally, beta: &DVector<f64>) -> f64 {
    let eta = design * beta;
    eta.iter()
        .zip(tally.ones.iter().zip(&tally.trials))
        .map(|(e, (o, n))| o * ln_sigmoid(*e) + (n - o) * ln_sigmoid(-*e))
        .sum()
}

/// Newton-Raphson (IRLS) for one response without intercept. Observations
/// sharing an exemplar are pooled, so the cost scales with `k`, not `n`.
fn fit_one(design: &DMatrix<f64>, tally: &Tally) -> Result<DVector<f64>> {
    let p = design.ncols();
    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(design, tally, &beta);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let eta = design * &beta;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        for (c, e) in eta.iter().enumerate() {
            let mu = sigmoid(*e);
            let n = tally.trials[c];
            let row = design.row(c).transpose();
            grad += &row * (tally.ones[c] - n * mu);
            hess += &row * row.transpose() * (n * mu * (1.0 - mu));
        }
        grad_norm = grad.norm();
        // under separation the coefficients run off to infinity
        if eta.iter().any(|e| e.abs() > SEPARATION_ETA) {
            break;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                hess.pseudo_inverse(1e-12)
                    .map_err(|e| Error::domain(e.to_string()))?
                    * &grad
            }
        };
        // a finite optimum also has a vanishing Newton step; a separated fit
        // keeps a flat gradient but steps of order one
        if grad_norm < IRLS_GRAD_TOL && step.norm() < STEP_TOL * (1.0 + beta.norm()) {
            return Ok(beta);
        }
        // step halving keeps the likelihood nondecreasing, up to rounding
        let slack = 1e-12 * (1.0 + ll.abs());
        let mut t = 1.0;
        loop {
            let candidate = &beta + &step * t;
            let cand_ll = log_likelihood(design, tally, &candidate);
            if cand_ll >= ll - slack || t < 1e-10 {
                beta = candidate;
                ll = cand_ll;
                break;
            }
            t *= 0.5;
        }
        if !beta.iter().all(|b| b.is_finite()) {
            break;
        }
    }
    Err(Error::Fit {
        iterations,
        grad_norm,
    })
}

/// Fits `B̂` (p × q) by per-response logistic regression of `Y_i` on the
/// exemplar stimulus of each record.
pub fn fit_logistic_coefficients(
    data: &LabeledDataset,
    exemplars: &ExemplarSet,
) -> Result<Coefficients> {
    if exemplars.k() != data.k {
        return Err(Error::domain(format!(
            "dataset has k = {} classes but {} exemplars were given",
            data.k,
            exemplars.k()
        )));
    }
    if !data.discrete {
        return Err(Error::Unsupported(
            "logistic fit needs binary responses".into(),
        ));
    }
    let p = exemplars.get(0).len();
    let q = data
        .records
        .first()
        .map(|r| r.response.len())
        .ok_or_else(|| Error::domain("dataset is empty"))?;
    let design = DMatrix::from_fn(data.k, p, |c, j| exemplars.get(c)[j]);
    let mut values = vec![0.0; p * q];
    for (i, tally) in tallies(data, q)?.iter().enumerate() {
        let beta = fit_one(&design, tally)?;
        for j in 0..p {
            values[j * q + i] = beta[j];
        }
    }
    Ok(Coefficients::Dense { p, q, values })
}

/// Fits `B̂` and returns the true information of the fitted model, using a
/// nested Monte Carlo budget of `mc_n` outer draws when `B̂` is not separable.
pub fn estimate_mle_logistic(
    data: &LabeledDataset,
    exemplars: &ExemplarSet,
    mc_n: usize,
    seed: u64,
) -> Result<EstimateRecord> {
    let fitted = MultiLogisticParams::new(fit_logistic_coefficients(data, exemplars)?)?;
    let mi = fitted.mutual_information(Some(mc_n), Some(seed))?;
    Ok(EstimateRecord::new(EstimateMethod::Mle, mi.value.max(0.0), data.k, None).with_seed(seed))
}
