//! Class-subsampling diagnostic: re-estimate on random subsets of classes.

use super::{
    default_alpha, estimate_from_matrix, fano_bound, rows_plugin_mi, smooth_error, ConfusionMatrix,
    EstimateMethod,
};
use crate::classify::ScoreTable;
use crate::error::{Error, Result};
use crate::pik::pi_k_inverse;
use crate::seed::SimRng;
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{mean, ols_slope, percentile_interval, std_dev, SlopeEstimate};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsamplePoint {
    pub k: usize,
    pub mean: f64,
    /// Sample standard deviation across replicates (0 with one replicate).
    pub sd: f64,
    pub replicates: usize,
    /// Per-replicate estimates, in replicate order.
    #[serde(default, skip_serializing)]
    pub values: Vec<f64>,
}

/// Estimate on the classes `keep`: rows and columns outside the subset are
/// dropped, then each row is renormalized to a conditional distribution.
/// A row whose decisions all fell outside the subset is treated as chance.
fn subset_estimate(
    m: &ConfusionMatrix,
    keep: &[usize],
    method: EstimateMethod,
    alpha: f64,
) -> Result<f64> {
    let kk = keep.len();
    let rows: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            let row: Vec<f64> = keep.iter().map(|&j| m.get(i, j) as f64).collect();
            if row.iter().sum::<f64>() > 0.0 {
                row
            } else {
                vec![1.0; kk]
            }
        })
        .collect();
    match method {
        EstimateMethod::Cm => Ok(rows_plugin_mi(&rows)),
        EstimateMethod::Hd | EstimateMethod::Fano => {
            let correct: f64 = rows
                .iter()
                .enumerate()
                .map(|(a, row)| row[a] / row.iter().sum::<f64>())
                .sum();
            let e_test = (1.0 - correct / kk as f64).clamp(0.0, 1.0);
            let e = smooth_error(e_test, alpha, kk)?;
            Ok(match method {
                EstimateMethod::Hd => 0.5 * pi_k_inverse(e.value, kk)?.powi(2),
                _ => fano_bound(e.value, kk),
            })
        }
        other => Err(Error::Unsupported(format!(
            "{other} cannot be computed from a confusion matrix"
        ))),
    }
}

/// For each `k'` in `k_values`, draws `replicates` subsets of `k'` classes
/// without replacement and summarizes the estimates. Replicate `j` at `k'`
/// uses seed `derive_seed(derive_seed(seed, k'), j)`; results do not depend
/// on thread scheduling.
///
/// Works from the matrix alone by restricting and renormalizing. This
/// overstates accuracy at small `k'`: a row's mass on the kept columns is
/// conditioned on the winner being kept. [`k_subsample_rescored`] avoids
/// that when the test scores are available.
pub fn k_subsample_diagnostic(
    m: &ConfusionMatrix,
    k_values: &[usize],
    method: EstimateMethod,
    replicates: usize,
    seed: u64,
    alpha: Option<f64>,
) -> Result<Vec<SubsamplePoint>> {
    check_method(method)?;
    let alpha = alpha.unwrap_or_else(|| default_alpha(m.r()));
    subsample_series(m.k(), k_values, replicates, seed, |keep| {
        subset_estimate(m, keep, method, alpha)
    })
}

/// Same series as [`k_subsample_diagnostic`], but each subset is evaluated
/// by re-running the classifier with its choice limited to the kept classes.
pub fn k_subsample_rescored(
    table: &ScoreTable,
    k_values: &[usize],
    method: EstimateMethod,
    replicates: usize,
    seed: u64,
    alpha: Option<f64>,
) -> Result<Vec<SubsamplePoint>> {
    check_method(method)?;
    let alpha = alpha.unwrap_or_else(|| default_alpha(table.r() as u64));
    rescored_series(
        table,
        k_values,
        method,
        replicates,
        seed,
        alpha,
        &Memo::default(),
    )
}

/// Error-based estimates of balanced matrices keyed by `(k, correct count)`,
/// the only inputs they depend on for a fixed `r` and `α`.
#[derive(Default)]
struct Memo(Mutex<HashMap<(usize, u64), f64>>);

fn rescored_series(
    table: &ScoreTable,
    k_values: &[usize],
    method: EstimateMethod,
    replicates: usize,
    seed: u64,
    alpha: f64,
    memo: &Memo,
) -> Result<Vec<SubsamplePoint>> {
    subsample_series(table.k, k_values, replicates, seed, |keep| {
        let m = table.restricted_confusion(keep)?;
        if method == EstimateMethod::Cm {
            return Ok(estimate_from_matrix(method, &m, Some(alpha))?.value);
        }
        let key = (m.k(), (0..m.k()).map(|i| m.get(i, i)).sum::<u64>());
        if let Some(v) = memo.0.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = estimate_from_matrix(method, &m, Some(alpha))?.value;
        memo.0.lock().unwrap().insert(key, v);
        Ok(v)
    })
}

fn check_method(method: EstimateMethod) -> Result<()> {
    if method.from_matrix() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{method} cannot be computed from a confusion matrix"
        )))
    }
}

fn subsample_series(
    k: usize,
    k_values: &[usize],
    replicates: usize,
    seed: u64,
    estimate: impl Fn(&[usize]) -> Result<f64> + Sync,
) -> Result<Vec<SubsamplePoint>> {
    if replicates == 0 {
        return Err(Error::domain("replicates must be >= 1"));
    }
    k_values
        .iter()
        .map(|&kk| {
            if kk < 2 {
                return Err(Error::domain(format!(
                    "subsampled k must be >= 2, got {kk}"
                )));
            }
            if kk > k {
                return Err(Error::domain(format!(
                    "subsampled k = {kk} exceeds the matrix size {k}"
                )));
            }
            let level_seed = derive_seed(seed, kk as u64);
            // every subset of size k is the full set
            if kk == k {
                let all: Vec<usize> = (0..k).collect();
                let v = estimate(&all)?;
                return Ok(SubsamplePoint {
                    k: kk,
                    mean: v,
                    sd: 0.0,
                    replicates,
                    values: vec![v; replicates],
                });
            }
            let values: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|j| {
                    let mut rng = rng_from_seed(derive_seed(level_seed, j as u64));
                    let mut keep = sample(&mut rng, k, kk).into_vec();
                    keep.sort_unstable();
                    estimate(&keep)
                })
                .collect::<Result<_>>()?;
            Ok(SubsamplePoint {
                k: kk,
                mean: mean(&values),
                sd: if values.len() > 1 {
                    std_dev(&values)
                } else {
                    0.0
                },
                replicates,
                values,
            })
        })
        .collect()
}

/// Series plus the OLS slope of the estimates against `k'`, with a
/// percentile interval from a stratified bootstrap of the test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleTrend {
    pub points: Vec<SubsamplePoint>,
    pub slope: SlopeEstimate,
    pub draws: usize,
}

/// Settings shared by the two trend functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendOptions {
    pub method: EstimateMethod,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: Option<f64>,
    /// Bootstrap resamples of the test data.
    pub draws: usize,
    pub level: f64,
}

fn series_slope(points: &[SubsamplePoint]) -> f64 {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for p in points {
        for v in &p.values {
            xs.push(p.k as f64);
            ys.push(*v);
        }
    }
    ols_slope(&xs, &ys)
}

/// Bootstrap draw `b` uses seed `derive_seed(derive_seed(seed, u64::MAX), b)`
/// to resample; the class subsets are the same in every draw.
fn trend<T: Sync>(
    source: &T,
    k_values: &[usize],
    opts: TrendOptions,
    series: impl Fn(&T) -> Result<Vec<SubsamplePoint>> + Sync,
    resample: impl Fn(&T, &mut SimRng) -> Result<T> + Sync,
) -> Result<SubsampleTrend> {
    if opts.draws == 0 {
        return Err(Error::domain("bootstrap draws must be >= 1"));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::domain(format!(
            "interval level must lie in (0, 1), got {}",
            opts.level
        )));
    }
    if k_values.len() < 2 {
        return Err(Error::domain("a slope needs at least two subsample sizes"));
    }
    let points = series(source)?;
    let boot_seed = derive_seed(opts.seed, u64::MAX);
    let slopes: Vec<f64> = (0..opts.draws)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(boot_seed, b as u64));
            Ok(series_slope(&series(&resample(source, &mut rng)?)?))
        })
        .collect::<Result<_>>()?;
    let (ci_low, ci_high) = percentile_interval(&slopes, opts.level);
    Ok(SubsampleTrend {
        slope: SlopeEstimate {
            slope: series_slope(&points),
            ci_low,
            ci_high,
            level: opts.level,
        },
        points,
        draws: opts.draws,
    })
}

/// Trend of [`k_subsample_diagnostic`]; each bootstrap draw resamples every
/// row's `r` decisions from that row's empirical distribution.
pub fn k_subsample_trend(
    m: &ConfusionMatrix,
    k_values: &[usize],
    opts: TrendOptions,
) -> Result<SubsampleTrend> {
    let alpha = Some(opts.alpha.unwrap_or_else(|| default_alpha(m.r())));
    trend(
        m,
        k_values,
        opts,
        |m| k_subsample_diagnostic(m, k_values, opts.method, opts.replicates, opts.seed, alpha),
        |m, rng| {
            let r = m.r();
            let counts = m
                .counts()
                .iter()
                .map(|row| {
                    let probs: Vec<f64> = row.iter().map(|c| *c as f64 / r as f64).collect();
                    let mut out = vec![0u64; row.len()];
                    let cells =
                        WeightedIndex::new(&probs).map_err(|e| Error::domain(e.to_string()))?;
                    for _ in 0..r {
                        out[cells.sample(rng)] += 1;
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()?;
            ConfusionMatrix::new(counts)
        },
    )
}

/// Trend of [`k_subsample_rescored`]; each bootstrap draw resamples test
/// records with replacement within each class.
pub fn k_subsample_rescored_trend(
    table: &ScoreTable,
    k_values: &[usize],
    opts: TrendOptions,
) -> Result<SubsampleTrend> {
    let alpha = opts
        .alpha
        .unwrap_or_else(|| default_alpha(table.r() as u64));
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); table.k];
    for (n, &c) in table.labels.iter().enumerate() {
        by_class[c].push(n);
    }
    check_method(opts.method)?;
    let memo = Memo::default();
    trend(
        table,
        k_values,
        opts,
        |t| {
            rescored_series(
                t,
                k_values,
                opts.method,
                opts.replicates,
                opts.seed,
                alpha,
                &memo,
            )
        },
        |t, rng| {
            let mut labels = Vec::with_capacity(t.labels.len());
            let mut scores = Vec::with_capacity(t.scores.len());
            for (c, members) in by_class.iter().enumerate() {
                for _ in 0..members.len() {
                    let n = members[rng.random_range(0..members.len())];
                    labels.push(c);
                    scores.extend_from_slice(&t.scores[n * t.k..(n + 1) * t.k]);
                }
            }
            Ok(ScoreTable {
                k: t.k,
                labels,
                scores,
            })
        },
    )
}
