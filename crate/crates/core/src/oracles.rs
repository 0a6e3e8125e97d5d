//! Monte Carlo and analytic oracles for the Bayes-error / information link.

use crate::error::{Error, Result};
use crate::models::{
    logistic_scale_for_mi, sample_exemplars, ExemplarSet, GaussianSequenceParams,
    MultiLogisticParams, StimulusResponseModel,
};
use crate::pik::{lemma1_exceedance, pi_k, GaussianMaxProblem};
use crate::seed::{derive_seed, rng_from_seed, SimRng};
use crate::stats::{mean, skew_kurtosis, std_error, variance};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A Monte Carlo (or exact, with zero error) value with provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_samples(xs: &[f64], seed: u64) -> Self {
        Self {
            value: mean(xs),
            std_error: std_error(xs),
            n_samples: xs.len(),
            seed,
        }
    }

    /// `|self − other|` measured in combined standard errors.
    pub fn z_score(&self, other: f64, other_se: f64) -> f64 {
        let se = (self.std_error.powi(2) + other_se.powi(2)).sqrt();
        let gap = (self.value - other).abs();
        // exact values may still differ by summation rounding
        if gap <= 1e-12 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            gap / se
        }
    }
}

/// Expected error of the Bayes rule for a response truly from class 0,
/// splitting ties uniformly among the maximizers.
fn bayes_error_of_response(
    model: &StimulusResponseModel,
    ex: &ExemplarSet,
    y: &[f64],
    scores: &mut [f64],
) -> f64 {
    for (s, x) in scores.iter_mut().zip(&ex.exemplars) {
        *s = model.log_conditional_density(x, y);
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if scores[0] < max {
        return 1.0;
    }
    let ties = scores.iter().filter(|s| **s == max).count();
    (ties - 1) as f64 / ties as f64
}

/// Average Bayes error over random exemplar sets.
///
/// Set `j` draws its exemplars from `derive_seed(seed, 2j)` and its
/// class-0 responses from `derive_seed(seed, 2j + 1)`. The standard error is
/// computed from the per-set error rates, so it carries both the binomial
/// and the between-set variability.
pub fn mc_average_bayes_error(
    model: &StimulusResponseModel,
    k: usize,
    n_exemplar_sets: usize,
    n_responses_per_set: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_exemplar_sets == 0 || n_responses_per_set == 0 {
        return Err(Error::domain(
            "need at least one exemplar set and one response per set",
        ));
    }
    let per_set: Vec<f64> = (0..n_exemplar_sets)
        .into_par_iter()
        .map(|j| {
            let ex = sample_exemplars(model, k, derive_seed(seed, 2 * j as u64))?;
            let mut rng = rng_from_seed(derive_seed(seed, 2 * j as u64 + 1));
            let mut y = vec![0.0; model.response_dim()];
            let mut scores = vec![0.0; k];
            let mut err = 0.0;
            for _ in 0..n_responses_per_set {
                model.sample_response(ex.get(0), &mut rng, &mut y);
                err += bayes_error_of_response(model, &ex, &y, &mut scores);
            }
            Ok(err / n_responses_per_set as f64)
        })
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_samples(&per_set, seed))
}

/// One side of a moment comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentLine {
    pub estimate: f64,
    pub std_error: f64,
    pub limit: f64,
    /// `|estimate − limit| / std_error`.
    pub z: f64,
}

impl MomentLine {
    fn new(estimate: f64, std_error: f64, limit: f64) -> Self {
        let z = if std_error > 0.0 {
            (estimate - limit).abs() / std_error
        } else if (estimate - limit).abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            estimate,
            std_error,
            limit,
            z,
        }
    }

    pub fn within(&self, n_se: f64) -> bool {
        self.z <= n_se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZMomentReport {
    /// Information the limits are computed from.
    pub iota: f64,
    pub n: usize,
    pub seed: u64,
    pub mean_z: MomentLine,
    pub var_z: MomentLine,
    pub cov_z: MomentLine,
    pub mean_u: MomentLine,
    pub var_u: MomentLine,
}

impl ZMomentReport {
    pub fn lines(&self) -> [(&'static str, &MomentLine); 5] {
        [
            ("E[Z_i]", &self.mean_z),
            ("Var[Z_i]", &self.var_z),
            ("Cov[Z_i,Z_j]", &self.cov_z),
            ("E[u]", &self.mean_u),
            ("Var[u]", &self.var_u),
        ]
    }

    pub fn all_within(&self, n_se: f64) -> bool {
        self.lines().iter().all(|(_, l)| l.within(n_se))
    }
}

fn mean_line(xs: &[f64], limit: f64) -> MomentLine {
    MomentLine::new(mean(xs), std_error(xs), limit)
}

/// Sample variance with the large-sample standard error `√((m₄ − s⁴)/n)`.
fn var_line(xs: &[f64], limit: f64) -> MomentLine {
    let m = mean(xs);
    let v = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
    MomentLine::new(v, ((m4 - v * v).max(0.0) / xs.len() as f64).sqrt(), limit)
}

fn cov_line(a: &[f64], b: &[f64], limit: f64) -> MomentLine {
    let (ma, mb) = (mean(a), mean(b));
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let n = prods.len() as f64;
    MomentLine::new(mean(&prods) * n / (n - 1.0), std_error(&prods), limit)
}

/// Per draw: exemplars `X¹, X², X³` and fresh `X′`, `Y ~ p(·|X¹)`.
/// Returns `(Z₂, Z₃, u)` with `Z_i = ln p(Y|Xⁱ) − ln p(Y|X¹)` and
/// `u = ln p(Y|X′) − ln p(Y)`.
fn z_draws(model: &StimulusResponseModel, n: usize, seed: u64) -> Result<Vec<(f64, f64, f64)>> {
    const BLOCK: usize = 1024;
    let blocks = n.div_ceil(BLOCK);
    let chunks: Vec<Vec<(f64, f64, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            let count = BLOCK.min(n - b * BLOCK);
            let (p, q) = (model.stimulus_dim(), model.response_dim());
            let mut xs = vec![vec![0.0; p]; 4];
            let mut y = vec![0.0; q];
            (0..count)
                .map(|_| {
                    for x in xs.iter_mut() {
                        model.sample_stimulus(&mut rng, x);
                    }
                    model.sample_response(&xs[0], &mut rng, &mut y);
                    let l1 = model.log_conditional_density(&xs[0], &y);
                    let z2 = model.log_conditional_density(&xs[1], &y) - l1;
                    let z3 = model.log_conditional_density(&xs[2], &y) - l1;
                    let u = model.log_conditional_density(&xs[3], &y)
                        - model.log_marginal_density(&y).unwrap();
                    (z2, z3, u)
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Monte Carlo moments of the class statistics against their
/// high-dimensional limits `(−2ι, 4ι, 2ι, −ι, 2ι)` with `ι` the model's true
/// information. `k` only needs to admit two competitors.
pub fn z_moment_check(
    model: &StimulusResponseModel,
    k: usize,
    n: usize,
    seed: u64,
) -> Result<ZMomentReport> {
    if k < 3 {
        return Err(Error::domain(
            "moment check needs k >= 3 for the covariance term",
        ));
    }
    if n < 2 {
        return Err(Error::domain("moment check needs n >= 2"));
    }
    let probe = vec![0.0; model.response_dim()];
    if model.log_marginal_density(&probe).is_none() {
        return Err(Error::Unsupported(format!(
            "moment check needs a closed-form marginal density, which {} lacks",
            model.tag()
        )));
    }
    let iota = model.true_mi(None, None)?.value;
    let draws = z_draws(model, n, seed)?;
    let z2: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let z3: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let u: Vec<f64> = draws.iter().map(|d| d.2).collect();
    Ok(ZMomentReport {
        iota,
        n,
        seed,
        mean_z: mean_line(&z2, -2.0 * iota),
        var_z: var_line(&z2, 4.0 * iota),
        cov_z: cov_line(&z2, &z3, 2.0 * iota),
        mean_u: mean_line(&u, -iota),
        var_u: var_line(&u, 2.0 * iota),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeLine {
    /// 1-based class index `i` of `Z_i`.
    pub class: usize,
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub excess_kurtosis_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: usize,
    pub seed: u64,
    /// Whether exemplars were held fixed (distribution over responses only).
    pub fixed_exemplars: bool,
    pub lines: Vec<ShapeLine>,
}

fn shape_report(
    columns: Vec<Vec<f64>>,
    n: usize,
    seed: u64,
    fixed_exemplars: bool,
) -> NormalityReport {
    let nf = n as f64;
    // normal-theory standard errors
    let skew_se = (6.0 * nf * (nf - 1.0) / ((nf - 2.0) * (nf + 1.0) * (nf + 3.0))).sqrt();
    let kurt_se = 2.0 * skew_se * ((nf * nf - 1.0) / ((nf - 3.0) * (nf + 5.0))).sqrt();
    let lines = columns
        .iter()
        .enumerate()
        .map(|(i, col)| {
            let (skewness, excess_kurtosis) = skew_kurtosis(col);
            ShapeLine {
                class: i + 2,
                skewness,
                skewness_se: skew_se,
                excess_kurtosis,
                excess_kurtosis_se: kurt_se,
            }
        })
        .collect();
    NormalityReport {
        n,
        seed,
        fixed_exemplars,
        lines,
    }
}

fn z_columns(
    model: &StimulusResponseModel,
    k: usize,
    n: usize,
    seed: u64,
    fixed: Option<&ExemplarSet>,
) -> Result<Vec<Vec<f64>>> {
    const BLOCK: usize = 512;
    let blocks = n.div_ceil(BLOCK);
    let rows: Vec<Vec<Vec<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng: SimRng = rng_from_seed(derive_seed(seed, b as u64));
            let count = BLOCK.min(n - b * BLOCK);
            let mut y = vec![0.0; model.response_dim()];
            (0..count)
                .map(|_| {
                    let drawn;
                    let ex = match fixed {
                        Some(ex) => ex,
                        None => {
                            drawn = sample_exemplars(model, k, rng.random())?;
                            &drawn
                        }
                    };
                    model.sample_response(ex.get(0), &mut rng, &mut y);
                    let l1 = model.log_conditional_density(ex.get(0), &y);
                    Ok((1..k)
                        .map(|i| model.log_conditional_density(ex.get(i), &y) - l1)
                        .collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    Ok((0..k - 1)
        .map(|i| rows.iter().map(|r| r[i]).collect())
        .collect())
}

/// Marginal skewness and excess kurtosis of `Z_2, …, Z_k` over random
/// exemplar sets and responses.
pub fn normality_diagnostic(
    model: &StimulusResponseModel,
    k: usize,
    n: usize,
    seed: u64,
) -> Result<NormalityReport> {
    if n < 4 {
        return Err(Error::domain(format!(
            "normality diagnostic needs n >= 4 draws, got {n}"
        )));
    }
    if k < 2 {
        return Err(Error::domain("need k >= 2"));
    }
    Ok(shape_report(
        z_columns(model, k, n, seed, None)?,
        n,
        seed,
        false,
    ))
}

/// As [`normality_diagnostic`] with the exemplars held fixed.
pub fn normality_diagnostic_given(
    model: &StimulusResponseModel,
    exemplars: &ExemplarSet,
    n: usize,
    seed: u64,
) -> Result<NormalityReport> {
    if n < 4 {
        return Err(Error::domain(format!(
            "normality diagnostic needs n >= 4 draws, got {n}"
        )));
    }
    Ok(shape_report(
        z_columns(model, exemplars.k(), n, seed, Some(exemplars))?,
        n,
        seed,
        true,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    /// Series `(1/e) Σ_{j≥1} 1/(j·j!)`.
    PoissonFormula,
    MonteCarlo,
    /// `(1 − 1/k)^k`, the exact expectation for `k` exemplars in `k` bins.
    Exact,
}

/// `(1/e) Σ_{j≥1} 1/(j·j!)`, truncated once terms fall below 1e-15.
pub fn poisson_collision_series() -> f64 {
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for j in 1.. {
        factorial *= j as f64;
        let term = 1.0 / (j as f64 * factorial);
        sum += term;
        if term < 1e-15 {
            break;
        }
    }
    sum / std::f64::consts::E
}

/// Bayes error of the staircase task with `k_bins` exemplars placed
/// uniformly in `k_bins` bins; colliding exemplars share their bin's
/// posterior mass equally.
pub fn staircase_collision_abe(
    k_bins: usize,
    mode: CollisionMode,
    mc_n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if k_bins == 0 {
        return Err(Error::domain("k_bins must be >= 1"));
    }
    let exact = |value| McEstimate {
        value,
        std_error: 0.0,
        n_samples: 0,
        seed,
    };
    match mode {
        CollisionMode::PoissonFormula => Ok(exact(poisson_collision_series())),
        CollisionMode::Exact => Ok(exact((1.0 - 1.0 / k_bins as f64).powi(k_bins as i32))),
        CollisionMode::MonteCarlo => {
            if mc_n == 0 {
                return Err(Error::domain("monte_carlo mode needs mc_n >= 1"));
            }
            const BLOCK: usize = 4096;
            let per_set: Vec<f64> = (0..mc_n.div_ceil(BLOCK))
                .into_par_iter()
                .flat_map_iter(|b| {
                    let mut rng = rng_from_seed(derive_seed(seed, b as u64));
                    let count = BLOCK.min(mc_n - b * BLOCK);
                    let mut occupied = vec![false; k_bins];
                    (0..count)
                        .map(|_| {
                            occupied.fill(false);
                            for _ in 0..k_bins {
                                occupied[rng.random_range(0..k_bins)] = true;
                            }
                            // error = 1 − (#occupied bins)/k
                            1.0 - occupied.iter().filter(|o| **o).count() as f64 / k_bins as f64
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            Ok(McEstimate::from_samples(&per_set, seed))
        }
    }
}

/// A random moment tuple satisfying the Gaussian-maximum conditions and
/// giving a positive-definite covariance for `(Z_1, …, Z_k)`.
pub fn random_moment_problem(rng: &mut SimRng) -> GaussianMaxProblem {
    loop {
        let k = rng.random_range(2..=8usize);
        let epsilon = rng.random_range(0.0..1.0);
        let delta = epsilon + rng.random_range(0.2..2.0);
        let gamma = rng.random_range(-0.6..0.6);
        let floor = (k - 1) as f64 * gamma * gamma / (delta + (k as f64 - 2.0) * epsilon);
        let beta = floor + rng.random_range(0.05..1.5);
        let alpha = rng.random_range(-1.0..3.0);
        if let Ok(p) = GaussianMaxProblem::new(alpha, beta, gamma, delta, epsilon, k) {
            if covariance(&p).cholesky().is_some() {
                return p;
            }
        }
    }
}

fn covariance(p: &GaussianMaxProblem) -> DMatrix<f64> {
    DMatrix::from_fn(p.k, p.k, |a, b| match (a, b) {
        (0, 0) => p.beta,
        (0, _) | (_, 0) => p.gamma,
        (a, b) if a == b => p.delta,
        _ => p.epsilon,
    })
}

/// Direct Monte Carlo of `Pr[Z_1 < max_{i≥2} Z_i]` with `E[Z_1] = α`,
/// `E[Z_i] = 0` and the covariance implied by the tuple.
pub fn mc_lemma1(p: &GaussianMaxProblem, n: usize, seed: u64) -> Result<McEstimate> {
    p.validate()?;
    let chol = covariance(p).cholesky().ok_or_else(|| {
        Error::domain("moment tuple does not give a positive-definite covariance")
    })?;
    let l = chol.l();
    const BLOCK: usize = 8192;
    let hits: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            let count = BLOCK.min(n - b * BLOCK);
            let l = &l;
            (0..count)
                .map(move |_| {
                    let g = DVector::from_fn(p.k, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let z = l * g;
                    let z1 = p.alpha + z[0];
                    let max_rest = z.iter().skip(1).cloned().fold(f64::NEG_INFINITY, f64::max);
                    if z1 < max_rest {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(McEstimate::from_samples(&hits, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub problem: GaussianMaxProblem,
    pub analytic: f64,
    pub monte_carlo: McEstimate,
    pub z: f64,
}

/// Analytic exceedance vs Monte Carlo on `tuples` random moment tuples.
pub fn lemma1_suite(tuples: usize, n: usize, seed: u64) -> Result<Vec<Lemma1Check>> {
    let mut rng = rng_from_seed(seed);
    (0..tuples)
        .map(|t| {
            let problem = random_moment_problem(&mut rng);
            let analytic = lemma1_exceedance(&problem)?;
            let monte_carlo = mc_lemma1(&problem, n, derive_seed(seed, t as u64))?;
            Ok(Lemma1Check {
                problem,
                analytic,
                z: monte_carlo.z_score(analytic, 0.0),
                monte_carlo,
            })
        })
        .collect()
}

/// Model families whose total information is held at `iota` as `d` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    /// `d` coordinates with `σ_x² = e^{2ι/d} − 1`, unit noise.
    Gaussian { iota: f64 },
    /// `p = q = d`, `B = s·I` with each response carrying `ι/d`.
    Logistic { iota: f64 },
}

impl ModelFamily {
    pub fn iota(&self) -> f64 {
        match self {
            Self::Gaussian { iota } | Self::Logistic { iota } => *iota,
        }
    }

    pub fn at_dim(&self, d: usize) -> Result<StimulusResponseModel> {
        match *self {
            // the null channel is the σ_x → 0 limit
            Self::Gaussian { iota: 0.0 } => Ok(StimulusResponseModel::GaussianSequence(
                GaussianSequenceParams::isotropic(d, 1e-150, 1.0)?,
            )),
            Self::Gaussian { iota } => Ok(StimulusResponseModel::GaussianSequence(
                GaussianSequenceParams::with_total_mi(d, iota)?,
            )),
            Self::Logistic { iota } => {
                let s = logistic_scale_for_mi(iota / d as f64)?;
                Ok(StimulusResponseModel::MultiLogistic(
                    MultiLogisticParams::scaled_identity(d, s)?,
                ))
            }
        }
    }
}

/// Monte Carlo effort for one average-Bayes-error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub exemplar_sets: usize,
    pub responses_per_set: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub d: usize,
    pub true_mi: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub prediction: f64,
    pub gap: f64,
}

/// Average Bayes error against `π_k(√(2ι))` across dimensions. Dimension
/// index `i` uses seed `derive_seed(seed, i)`.
pub fn convergence_sweep(
    family: ModelFamily,
    dims: &[usize],
    k: usize,
    budget: Budget,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    let prediction = pi_k(k, (2.0 * family.iota()).sqrt())?;
    dims.iter()
        .enumerate()
        .map(|(i, &d)| {
            let model = family.at_dim(d)?;
            let est = mc_average_bayes_error(
                &model,
                k,
                budget.exemplar_sets,
                budget.responses_per_set,
                derive_seed(seed, i as u64),
            )?;
            Ok(ConvergenceRow {
                d,
                true_mi: model.true_mi(None, None)?.value,
                estimate: est.value,
                std_error: est.std_error,
                prediction,
                gap: (est.value - prediction).abs(),
            })
        })
        .collect()
}

/// Whether gaps shrink with dimension, allowing each step to rise by at
/// most `slack` combined standard errors.
pub fn gaps_nonincreasing(rows: &[ConvergenceRow], slack: f64) -> bool {
    rows.windows(2).all(|w| {
        let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].gap <= w[0].gap + slack * se
    })
}

#[cfg(test)]
mod tests;
