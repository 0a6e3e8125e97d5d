//! Pass/fail summaries of the oracle checks, shared by the CLI and the
//! acceptance tests.

use crate::error::{Error, Result};
use crate::estimators::SCHEMA_VERSION;
use crate::models::{StaircaseParams, StimulusResponseModel};
use crate::oracles::{
    convergence_sweep, gaps_nonincreasing, lemma1_suite, staircase_collision_abe, z_moment_check,
    Budget, CollisionMode, ConvergenceRow, Lemma1Check, McEstimate, ModelFamily, ZMomentReport,
};
use crate::seed::derive_seed;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Agreement threshold, in combined standard errors.
pub const N_SE: f64 = 3.0;
/// Largest acceptable `|e_ABE − π_k(√(2ι))|` at the top dimension.
pub const THEOREM1_GAP_TOL: f64 = 0.02;
pub const THEOREM1_DIMS: [usize; 4] = [4, 16, 64, 256];
pub const THEOREM1_MOMENT_DIM: usize = 512;
pub const THEOREM1_K: usize = 10;
pub const THEOREM1_IOTA: f64 = 0.5;
pub const THEOREM1_RESPONSES_PER_SET: usize = 10;
pub const LEMMA1_TUPLES: usize = 10;
pub const STAIRCASE_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma1,
    Theorem1,
    Staircase,
}

impl Suite {
    pub fn default_budget(self) -> usize {
        match self {
            Suite::Lemma1 => 500_000,
            Suite::Theorem1 => 40_000,
            Suite::Staircase => 100_000,
        }
    }

    pub fn min_budget(self) -> usize {
        match self {
            Suite::Lemma1 => 1_000,
            Suite::Theorem1 => 100,
            Suite::Staircase => 1_000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemma1 => "lemma1",
            Suite::Theorem1 => "theorem1",
            Suite::Staircase => "staircase",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma1" => Ok(Suite::Lemma1),
            "theorem1" => Ok(Suite::Theorem1),
            "staircase" => Ok(Suite::Staircase),
            other => Err(Error::Config(format!(
                "unknown suite '{other}' (expected lemma1, theorem1 or staircase)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "snake_case")]
pub enum SuiteDetail {
    Lemma1 {
        checks: Vec<Lemma1Check>,
    },
    Theorem1 {
        rows: Vec<ConvergenceRow>,
        gaps_nonincreasing: bool,
        final_gap: f64,
        moments: ZMomentReport,
    },
    Staircase {
        k_bins: usize,
        poisson_formula: f64,
        exact: f64,
        monte_carlo: McEstimate,
        /// Monte Carlo vs the Poisson value, in standard errors.
        z_poisson: f64,
        /// Monte Carlo vs the exact occupancy value, in standard errors.
        z_exact: f64,
        true_mi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub schema_version: u32,
    pub budget: usize,
    pub seed: u64,
    pub pass: bool,
    #[serde(flatten)]
    pub detail: SuiteDetail,
}

/// Runs one suite. The budget is Monte Carlo draws per tuple for `lemma1`,
/// exemplar sets per dimension (and moment draws) for `theorem1`, and
/// exemplar sets for `staircase`.
pub fn verify_theory(suite: Suite, budget: usize, seed: u64) -> Result<TheoryReport> {
    if budget < suite.min_budget() {
        return Err(Error::Config(format!(
            "{suite} needs a budget of at least {}, got {budget}",
            suite.min_budget()
        )));
    }
    let (pass, detail) = match suite {
        Suite::Lemma1 => {
            let checks = lemma1_suite(LEMMA1_TUPLES, budget, seed)?;
            (
                checks.iter().all(|c| c.z <= N_SE),
                SuiteDetail::Lemma1 { checks },
            )
        }
        Suite::Theorem1 => {
            let family = ModelFamily::Gaussian {
                iota: THEOREM1_IOTA,
            };
            let b = Budget {
                exemplar_sets: budget,
                responses_per_set: THEOREM1_RESPONSES_PER_SET,
            };
            let rows =
                convergence_sweep(family, &THEOREM1_DIMS, THEOREM1_K, b, derive_seed(seed, 0))?;
            let moments = z_moment_check(
                &family.at_dim(THEOREM1_MOMENT_DIM)?,
                3,
                budget,
                derive_seed(seed, 1),
            )?;
            let monotone = gaps_nonincreasing(&rows, 1.0);
            let final_gap = rows.last().map_or(f64::INFINITY, |r| r.gap);
            let pass = monotone && final_gap < THEOREM1_GAP_TOL && moments.all_within(N_SE);
            (
                pass,
                SuiteDetail::Theorem1 {
                    rows,
                    gaps_nonincreasing: monotone,
                    final_gap,
                    moments,
                },
            )
        }
        Suite::Staircase => {
            let poisson =
                staircase_collision_abe(STAIRCASE_BINS, CollisionMode::PoissonFormula, 0, 0)?.value;
            let exact = staircase_collision_abe(STAIRCASE_BINS, CollisionMode::Exact, 0, 0)?.value;
            let mc =
                staircase_collision_abe(STAIRCASE_BINS, CollisionMode::MonteCarlo, budget, seed)?;
            let true_mi = StimulusResponseModel::Staircase(StaircaseParams::new(STAIRCASE_BINS)?)
                .true_mi(None, None)?
                .value;
            let z_poisson = mc.z_score(poisson, 0.0);
            (
                z_poisson <= N_SE,
                SuiteDetail::Staircase {
                    k_bins: STAIRCASE_BINS,
                    poisson_formula: poisson,
                    exact,
                    z_poisson,
                    z_exact: mc.z_score(exact, 0.0),
                    monte_carlo: mc,
                    true_mi,
                },
            )
        }
    };
    Ok(TheoryReport {
        schema_version: SCHEMA_VERSION,
        budget,
        seed,
        pass,
        detail,
    })
}
