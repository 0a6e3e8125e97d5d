//! Mutual-information estimates from classification performance.
//!
//! Error-based estimators (`hd`, `fano`) consume a [`SmoothedError`];
//! matrix-based ones (`cm`) consume a [`ConfusionMatrix`]; `naive` and `mle`
//! work on raw labeled responses.

mod diagnostic;
mod mle;

pub use diagnostic::{
    k_subsample_diagnostic, k_subsample_rescored, k_subsample_rescored_trend, k_subsample_trend,
    SubsamplePoint, SubsampleTrend, TrendOptions,
};
pub use mle::{estimate_mle_logistic, fit_logistic_coefficients, IRLS_GRAD_TOL, IRLS_MAX_ITER};

use crate::error::{Error, Result};
use crate::models::LabeledDataset;
use crate::pik::{chance_error, pi_k_inverse};
use crate::special::xlnx;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Version of the JSON record layout.
pub const SCHEMA_VERSION: u32 = 1;

/// `k × k` test-set counts; row `i` holds the decisions for true class `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    r: u64,
}

impl ConfusionMatrix {
    /// Validates squareness, `k >= 2`, and equal positive row sums.
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k < 2 {
            return Err(Error::domain(format!(
                "confusion matrix needs k >= 2, got {k}"
            )));
        }
        if let Some((i, row)) = counts.iter().enumerate().find(|(_, row)| row.len() != k) {
            return Err(Error::domain(format!(
                "confusion matrix row {} has {} entries, expected {k}",
                i + 1,
                row.len()
            )));
        }
        let r: u64 = counts[0].iter().sum();
        if r == 0 {
            return Err(Error::domain("confusion matrix rows must sum to r >= 1"));
        }
        if let Some((i, s)) = counts
            .iter()
            .map(|row| row.iter().sum::<u64>())
            .enumerate()
            .find(|(_, s)| *s != r)
        {
            return Err(Error::domain(format!(
                "confusion matrix row {} sums to {s}, expected {r}",
                i + 1
            )));
        }
        Ok(Self { counts, r })
    }

    pub fn zeros(k: usize) -> Vec<Vec<u64>> {
        vec![vec![0; k]; k]
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Test observations per class.
    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    /// Simultaneous row/column relabeling: new class `a` is old class `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let k = self.k();
        let mut seen = vec![false; k];
        if perm.len() != k
            || perm
                .iter()
                .any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::domain("permutation must be a rearrangement of 0..k"));
        }
        let counts = perm
            .iter()
            .map(|&a| perm.iter().map(|&b| self.counts[a][b]).collect())
            .collect();
        Self::new(counts)
    }

    fn as_rows(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<u64>>> for ConfusionMatrix {
    type Error = Error;
    fn try_from(counts: Vec<Vec<u64>>) -> Result<Self> {
        Self::new(counts)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<u64>> {
    fn from(m: ConfusionMatrix) -> Self {
        m.counts
    }
}

/// Test error `ê` of a matrix.
pub fn test_error(m: &ConfusionMatrix) -> f64 {
    let k = m.k();
    let off: u64 = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j))
        .sum();
    off as f64 / (k as f64 * m.r() as f64)
}

/// Error after shrinking toward chance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedError {
    pub value: f64,
    pub alpha: f64,
    pub k: usize,
}

/// Default shrinkage weight for `r` test rows per class.
pub fn default_alpha(r: u64) -> f64 {
    1.0 / (r as f64 + 1.0)
}

/// `(1 − α) e_test + α (k − 1)/k`.
pub fn smooth_error(e_test: f64, alpha: f64, k: usize) -> Result<SmoothedError> {
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    if !(0.0..=1.0).contains(&e_test) {
        return Err(Error::domain(format!(
            "test error must lie in [0, 1], got {e_test}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let chance = chance_error(k);
    // exact fixed point at chance
    let value = if e_test == chance {
        chance
    } else {
        (1.0 - alpha) * e_test + alpha * chance
    };
    Ok(SmoothedError { value, alpha, k })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    Hd,
    Fano,
    Cm,
    Naive,
    Mle,
}

impl EstimateMethod {
    pub const ALL: [EstimateMethod; 5] = [Self::Hd, Self::Fano, Self::Cm, Self::Naive, Self::Mle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hd => "hd",
            Self::Fano => "fano",
            Self::Cm => "cm",
            Self::Naive => "naive",
            Self::Mle => "mle",
        }
    }

    /// Whether the method needs only a confusion matrix.
    pub fn from_matrix(self) -> bool {
        matches!(self, Self::Hd | Self::Fano | Self::Cm)
    }
}

impl fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method '{s}' (expected hd, fano, cm, naive or mle)"
                ))
            })
    }
}

/// One estimate in nats plus the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub schema_version: u32,
    pub method: EstimateMethod,
    pub value: f64,
    pub k: usize,
    /// Shrinkage weight; absent for methods that do not smooth.
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub model_tag: Option<String>,
}

impl EstimateRecord {
    pub fn new(method: EstimateMethod, value: f64, k: usize, alpha: Option<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method,
            value,
            k,
            alpha,
            seed: None,
            model_tag: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_model_tag(mut self, tag: impl Into<String>) -> Self {
        self.model_tag = Some(tag.into());
        self
    }
}

/// `½ (π_k⁻¹(ê))²`.
pub fn estimate_hd(e: &SmoothedError) -> Result<EstimateRecord> {
    let c = pi_k_inverse(e.value, e.k)?;
    Ok(EstimateRecord::new(
        EstimateMethod::Hd,
        0.5 * c * c,
        e.k,
        Some(e.alpha),
    ))
}

/// Fano lower bound `ln k − H(ê) − ê ln(k − 1)`, floored at 0. Errors at
/// or above chance give 0, as for the high-dimensional estimator.
pub fn fano_bound(e: f64, k: usize) -> f64 {
    let kf = k as f64;
    if e >= chance_error(k) {
        return 0.0;
    }
    let v = kf.ln() + xlnx(e) + xlnx(1.0 - e) - e * (kf - 1.0).ln();
    v.max(0.0)
}

pub fn estimate_fano(e: &SmoothedError) -> Result<EstimateRecord> {
    if !(0.0..=1.0).contains(&e.value) {
        return Err(Error::domain(format!(
            "error must lie in [0, 1], got {}",
            e.value
        )));
    }
    Ok(EstimateRecord::new(
        EstimateMethod::Fano,
        fano_bound(e.value, e.k),
        e.k,
        Some(e.alpha),
    ))
}

/// Plug-in MI of a joint given as rows of counts; each row is weighted
/// equally (balanced classes) and normalized by its own total.
pub(crate) fn rows_plugin_mi(rows: &[Vec<f64>]) -> f64 {
    let k = rows.len() as f64;
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    if totals.iter().all(|t| *t == totals[0]) {
        // equal totals: ratios of integer counts, so independence gives ln 1 exactly
        let width = rows[0].len();
        let cols: Vec<f64> = (0..width)
            .map(|j| rows.iter().map(|r| r[j]).sum())
            .collect();
        let n = k * totals[0];
        let mi: f64 = rows
            .iter()
            .flat_map(|r| r.iter().zip(&cols))
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, col)| c / n * (c * k / col).ln())
            .sum();
        return mi.clamp(0.0, k.ln());
    }
    let cond: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            row.iter().map(|c| c / total).collect()
        })
        .collect();
    let width = cond[0].len();
    let col: Vec<f64> = (0..width)
        .map(|j| cond.iter().map(|r| r[j]).sum::<f64>() / k)
        .collect();
    let mut mi = 0.0;
    for row in &cond {
        for (p, q) in row.iter().zip(&col) {
            if *p > 0.0 {
                mi += p / k * (p / q).ln();
            }
        }
    }
    mi.clamp(0.0, k.ln())
}

/// Plug-in MI of the (true class, decision) joint.
pub fn estimate_cm(m: &ConfusionMatrix) -> EstimateRecord {
    EstimateRecord::new(
        EstimateMethod::Cm,
        rows_plugin_mi(&m.as_rows()),
        m.k(),
        None,
    )
}

/// Plug-in MI between class labels and exact discrete responses.
pub fn estimate_naive(data: &LabeledDataset) -> Result<EstimateRecord> {
    if !data.discrete {
        return Err(Error::Unsupported(
            "naive plug-in estimate needs discrete responses; continuous responses are not binned"
                .into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::domain("dataset is empty"));
    }
    let n = data.len() as f64;
    let mut joint: HashMap<(usize, Vec<u64>), f64> = HashMap::new();
    let mut by_y: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut by_class = vec![0.0; data.k];
    for rec in &data.records {
        let key: Vec<u64> = rec.response.iter().map(|v| v.to_bits()).collect();
        *by_y.entry(key.clone()).or_default() += 1.0;
        *joint.entry((rec.class, key)).or_default() += 1.0;
        by_class[rec.class] += 1.0;
    }
    // sum over cells sorted for a reproducible floating-point order
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    let mi: f64 = cells
        .iter()
        .map(|((z, y), c)| c / n * (c * n / (by_class[*z] * by_y[y])).ln())
        .sum();
    Ok(EstimateRecord::new(
        EstimateMethod::Naive,
        mi.clamp(0.0, (data.k as f64).ln()),
        data.k,
        None,
    ))
}

/// Error-based estimate from a smoothed error.
pub fn estimate_from_error(method: EstimateMethod, e: &SmoothedError) -> Result<EstimateRecord> {
    match method {
        EstimateMethod::Hd => estimate_hd(e),
        EstimateMethod::Fano => estimate_fano(e),
        other => Err(Error::Unsupported(format!(
            "{other} does not work from an error rate"
        ))),
    }
}

/// Any confusion-matrix estimate, smoothing with `alpha` (default `1/(r+1)`).
pub fn estimate_from_matrix(
    method: EstimateMethod,
    m: &ConfusionMatrix,
    alpha: Option<f64>,
) -> Result<EstimateRecord> {
    match method {
        EstimateMethod::Cm => Ok(estimate_cm(m)),
        EstimateMethod::Hd | EstimateMethod::Fano => {
            let alpha = alpha.unwrap_or_else(|| default_alpha(m.r()));
            estimate_from_error(method, &smooth_error(test_error(m), alpha, m.k())?)
        }
        other => Err(Error::Unsupported(format!(
            "{other} needs the labeled responses, not a confusion matrix"
        ))),
    }
}
