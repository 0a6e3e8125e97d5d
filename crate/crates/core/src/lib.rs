//! Mutual information estimation from classification error under
//! stratified sampling, with the generative models and Monte Carlo oracles
//! used to check it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod io;
pub mod models;
pub mod oracles;
pub mod pik;
pub mod quadrature;
pub mod seed;
pub mod special;
pub mod stats;
pub mod verify;

pub use classify::{bayes_oracle_rule, evaluate, split, train_naive_bayes, Classify, RuleKind};
pub use error::{Error, Result};
pub use estimators::{
    estimate_from_matrix, test_error, ConfusionMatrix, EstimateMethod, EstimateRecord,
    SmoothedError, SCHEMA_VERSION,
};
pub use experiment::{ExperimentConfig, ScaleGrid, SweepResultRow};
pub use models::{ExemplarSet, LabeledDataset, MiValue, ModelSpec, StimulusResponseModel};
pub use oracles::McEstimate;
pub use pik::{
    chance_error, gaussian_max_exceedance, lemma1_exceedance, pi_k, pi_k_inverse,
    GaussianMaxProblem,
};
pub use seed::derive_seed;
