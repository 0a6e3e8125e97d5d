//! Classification rules, stratified splitting and confusion-matrix evaluation.

use crate::error::{Error, Result};
use crate::estimators::ConfusionMatrix;
use crate::models::{ExemplarSet, LabeledDataset, StimulusResponseModel};
use crate::seed::rng_from_seed;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// A deterministic map from a response vector to a 0-based class index.
pub trait Classify {
    fn k(&self) -> usize;

    /// Per-class scores; the rule picks the largest.
    fn scores(&self, y: &[f64]) -> Vec<f64>;

    fn classify(&self, y: &[f64]) -> usize {
        argmax_first(self.scores(y))
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_first(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    BayesOracle,
    NaiveBayes,
}

/// Stratified split into train and test. Each class contributes
/// `round(n_c · train_fraction)` records to train, clamped so both sides
/// receive at least one. Records keep their original relative order.
pub fn split(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let counts = data.class_counts();
    if let Some((c, n)) = counts.iter().enumerate().find(|(_, n)| **n < 2) {
        return Err(Error::domain(format!(
            "class {} has {n} records; splitting needs at least 2 per class",
            c + 1
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.k];
    for (idx, rec) in data.records.iter().enumerate() {
        by_class[rec.class].push(idx);
    }
    let mut in_train = vec![false; data.len()];
    for members in by_class.iter_mut() {
        let n = members.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        for &idx in &members[..n_train] {
            in_train[idx] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (rec, t) in data.records.iter().zip(in_train) {
        if t {
            train.push(rec.clone());
        } else {
            test.push(rec.clone());
        }
    }
    Ok((
        LabeledDataset::new(data.k, train, data.discrete)?,
        LabeledDataset::new(data.k, test, data.discrete)?,
    ))
}

/// `argmax_i ln p(y | x⁽ⁱ⁾)` under the true model.
#[derive(Debug, Clone)]
pub struct BayesOracleRule<'a> {
    model: &'a StimulusResponseModel,
    exemplars: &'a ExemplarSet,
}

pub fn bayes_oracle_rule<'a>(
    exemplars: &'a ExemplarSet,
    model: &'a StimulusResponseModel,
) -> BayesOracleRule<'a> {
    BayesOracleRule { model, exemplars }
}

impl Classify for BayesOracleRule<'_> {
    fn k(&self) -> usize {
        self.exemplars.k()
    }

    fn scores(&self, y: &[f64]) -> Vec<f64> {
        let scores: Vec<f64> = self
            .exemplars
            .exemplars
            .iter()
            .map(|x| self.model.log_conditional_density(x, y))
            .collect();
        debug_assert!(
            scores.iter().any(|s| *s > f64::NEG_INFINITY),
            "response has zero density under every exemplar"
        );
        scores
    }
}

/// Bernoulli naive Bayes with add-one smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesRule {
    /// `θ[i][m]`: smoothed probability that coordinate `m` is 1 in class `i`.
    pub theta: Vec<Vec<f64>>,
    pub train_size: usize,
    /// Σ_m ln(1 − θ_im).
    base: Vec<f64>,
    /// ln θ_im − ln(1 − θ_im).
    log_odds: Vec<Vec<f64>>,
}

pub fn train_naive_bayes(train: &LabeledDataset) -> Result<NaiveBayesRule> {
    if !train.discrete {
        return Err(Error::Unsupported(
            "naive Bayes is defined for binary responses only".into(),
        ));
    }
    let counts = train.class_counts();
    if let Some(c) = counts.iter().position(|n| *n == 0) {
        return Err(Error::domain(format!(
            "class {} has no training records",
            c + 1
        )));
    }
    let q = train.records[0].response.len();
    let mut ones = vec![vec![0.0; q]; train.k];
    for rec in &train.records {
        if rec.response.len() != q {
            return Err(Error::domain("responses have inconsistent lengths"));
        }
        for (m, y) in rec.response.iter().enumerate() {
            match *y {
                1.0 => ones[rec.class][m] += 1.0,
                0.0 => {}
                v => {
                    return Err(Error::Unsupported(format!(
                        "naive Bayes needs 0/1 responses, saw {v}"
                    )))
                }
            }
        }
    }
    let theta: Vec<Vec<f64>> = ones
        .iter()
        .zip(&counts)
        .map(|(row, n)| row.iter().map(|o| (o + 1.0) / (*n as f64 + 2.0)).collect())
        .collect();
    let base = theta
        .iter()
        .map(|row| row.iter().map(|t| (-t).ln_1p()).sum())
        .collect();
    let log_odds = theta
        .iter()
        .map(|row| row.iter().map(|t| t.ln() - (-t).ln_1p()).collect())
        .collect();
    Ok(NaiveBayesRule {
        theta,
        train_size: train.len(),
        base,
        log_odds,
    })
}

impl Classify for NaiveBayesRule {
    fn k(&self) -> usize {
        self.theta.len()
    }

    fn scores(&self, y: &[f64]) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.log_odds)
            .map(|(b, lo)| {
                b + y
                    .iter()
                    .zip(lo)
                    .filter(|(v, _)| **v > 0.5)
                    .map(|(_, l)| l)
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Confusion matrix of `rule` on a balanced test set.
pub fn evaluate(rule: &dyn Classify, test: &LabeledDataset, k: usize) -> Result<ConfusionMatrix> {
    check_balanced(rule, test, k)?;
    let mut counts = ConfusionMatrix::zeros(k);
    for rec in &test.records {
        counts[rec.class][rule.classify(&rec.response)] += 1;
    }
    ConfusionMatrix::new(counts)
}

fn check_balanced(rule: &dyn Classify, test: &LabeledDataset, k: usize) -> Result<()> {
    if test.k != k || rule.k() != k {
        return Err(Error::domain(format!(
            "class count mismatch: rule has {}, test set has {}, requested {k}",
            rule.k(),
            test.k
        )));
    }
    if test.per_class().unwrap_or(0) == 0 {
        return Err(Error::domain(format!(
            "evaluation needs a balanced test set with every class present, got counts {:?}",
            test.class_counts()
        )));
    }
    Ok(())
}

/// Scores of every test record under every class, kept so that rules
/// restricted to a subset of classes can be evaluated without rescoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub k: usize,
    pub labels: Vec<usize>,
    /// Row-major `labels.len() × k`.
    pub scores: Vec<f64>,
}

pub fn score_table(rule: &dyn Classify, test: &LabeledDataset, k: usize) -> Result<ScoreTable> {
    check_balanced(rule, test, k)?;
    let mut scores = Vec::with_capacity(test.len() * k);
    for rec in &test.records {
        scores.extend(rule.scores(&rec.response));
    }
    Ok(ScoreTable {
        k,
        labels: test.records.iter().map(|r| r.class).collect(),
        scores,
    })
}

impl ScoreTable {
    /// Test records per class.
    pub fn r(&self) -> usize {
        self.labels.len() / self.k
    }

    /// Confusion matrix of the rule that only chooses among `keep` (sorted,
    /// distinct), on the test records of those classes.
    pub fn restricted_confusion(&self, keep: &[usize]) -> Result<ConfusionMatrix> {
        let mut position = vec![usize::MAX; self.k];
        for (a, &c) in keep.iter().enumerate() {
            position[c] = a;
        }
        let mut counts = ConfusionMatrix::zeros(keep.len());
        for (n, &label) in self.labels.iter().enumerate() {
            if position[label] == usize::MAX {
                continue;
            }
            let row = &self.scores[n * self.k..(n + 1) * self.k];
            let pick = argmax_first(keep.iter().map(|&c| row[c]));
            counts[position[label]][pick] += 1;
        }
        ConfusionMatrix::new(counts)
    }
}
