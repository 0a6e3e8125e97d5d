use super::*;
use crate::models::StaircaseParams;
use crate::quadrature::composite_legendre;
use crate::special::{normal_cdf, normal_pdf};
use crate::stats::std_dev;
use approx::assert_abs_diff_eq;

fn gaussian(d: usize, sx: f64) -> StimulusResponseModel {
    StimulusResponseModel::GaussianSequence(GaussianSequenceParams::isotropic(d, sx, 1.0).unwrap())
}

fn null_logistic(d: usize) -> StimulusResponseModel {
    StimulusResponseModel::MultiLogistic(MultiLogisticParams::scaled_identity(d, 0.0).unwrap())
}

#[test]
fn independent_channel_sits_at_chance() {
    for k in [2, 5, 20] {
        let est = mc_average_bayes_error(&null_logistic(3), k, 200, 5, 1).unwrap();
        assert!(
            est.z_score((k as f64 - 1.0) / k as f64, 0.0) <= 3.0,
            "{est:?}"
        );
    }
}

#[test]
fn two_class_gaussian_matches_quadrature() {
    // Bayes error for exemplars (a, b) with unit noise: Φ(−|a − b| / 2)
    let sx = 1.3;
    let density = |v: f64| normal_pdf(v / sx) / sx;
    let inner = |a: f64| {
        let f = |b: f64| density(b) * normal_cdf(-(a - b).abs() / 2.0);
        composite_legendre(&f, -10.0 * sx, a, 64) + composite_legendre(&f, a, 10.0 * sx, 64)
    };
    let exact = composite_legendre(&|a: f64| density(a) * inner(a), -10.0 * sx, 10.0 * sx, 128);
    let est = mc_average_bayes_error(&gaussian(1, sx), 2, 20_000, 20, 3).unwrap();
    assert!(est.z_score(exact, 0.0) <= 3.0, "{est:?} vs {exact}");
}

#[test]
fn bayes_error_is_seeded() {
    let m = gaussian(4, 0.8);
    let a = mc_average_bayes_error(&m, 5, 300, 4, 11).unwrap();
    assert_eq!(a, mc_average_bayes_error(&m, 5, 300, 4, 11).unwrap());
    assert_ne!(
        a.value,
        mc_average_bayes_error(&m, 5, 300, 4, 12).unwrap().value
    );
    assert!(mc_average_bayes_error(&m, 5, 0, 4, 11).is_err());
}

#[test]
fn reported_error_is_calibrated() {
    let m = gaussian(4, 0.6);
    let runs: Vec<McEstimate> = (0..20)
        .map(|s| mc_average_bayes_error(&m, 5, 300, 5, derive_seed(77, s)).unwrap())
        .collect();
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let reported = mean(&runs.iter().map(|r| r.std_error).collect::<Vec<_>>());
    let ratio = std_dev(&values) / reported;
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn moderate_dimension_approaches_the_limit() {
    let family = ModelFamily::Gaussian { iota: 0.5 };
    let est = mc_average_bayes_error(&family.at_dim(64).unwrap(), 10, 3_000, 10, 5).unwrap();
    let limit = pi_k(10, 1.0).unwrap();
    assert!(
        (est.value - limit).abs() < 0.02 + 3.0 * est.std_error,
        "{est:?} vs {limit}"
    );
}

#[test]
fn moments_of_gaussian_statistics() {
    let model = StimulusResponseModel::GaussianSequence(
        GaussianSequenceParams::with_total_mi(256, 0.5).unwrap(),
    );
    let report = z_moment_check(&model, 3, 60_000, 2).unwrap();
    assert_abs_diff_eq!(report.iota, 0.5, epsilon = 1e-12);
    for (name, line) in report.lines() {
        assert!(line.within(3.0), "{name}: {line:?}");
    }
}

#[test]
fn null_channel_moments_vanish() {
    let report = z_moment_check(&null_logistic(5), 3, 1_000, 1).unwrap();
    assert!(report.all_within(3.0), "{report:?}");
    assert_eq!(report.mean_z.estimate, 0.0);
}

#[test]
fn low_dimension_misses_the_limits() {
    let model = StimulusResponseModel::GaussianSequence(
        GaussianSequenceParams::with_total_mi(1, 3.0).unwrap(),
    );
    let report = z_moment_check(&model, 3, 20_000, 3).unwrap();
    assert!(!report.mean_z.within(3.0));
    assert!(!report.all_within(3.0));
}

#[test]
fn moment_check_needs_a_marginal() {
    let dense = StimulusResponseModel::MultiLogistic(
        MultiLogisticParams::new(crate::models::Coefficients::Dense {
            p: 2,
            q: 2,
            values: vec![1.0; 4],
        })
        .unwrap(),
    );
    assert!(matches!(
        z_moment_check(&dense, 3, 100, 0),
        Err(Error::Unsupported(_))
    ));
    assert!(z_moment_check(&gaussian(2, 1.0), 2, 100, 0).is_err());
}

#[test]
fn gaussian_statistics_are_normal_given_exemplars() {
    for d in [1, 8] {
        let model = gaussian(d, 1.0);
        let ex = sample_exemplars(&model, 4, 9).unwrap();
        let report = normality_diagnostic_given(&model, &ex, 20_000, 10).unwrap();
        assert!(report.fixed_exemplars);
        assert_eq!(report.lines.len(), 3);
        for line in &report.lines {
            assert!(
                line.skewness.abs() <= 3.0 * line.skewness_se,
                "d={d}: {line:?}"
            );
        }
    }
}

#[test]
fn logistic_kurtosis_shrinks_with_dimension() {
    let kurt = |d: usize| {
        let model = ModelFamily::Logistic { iota: 1.0 }.at_dim(d).unwrap();
        let report = normality_diagnostic(&model, 3, 20_000, 4).unwrap();
        mean(
            &report
                .lines
                .iter()
                .map(|l| l.excess_kurtosis.abs())
                .collect::<Vec<_>>(),
        )
    };
    assert!(kurt(200) < kurt(10));
    assert!(normality_diagnostic(&gaussian(2, 1.0), 3, 0, 0).is_err());
}

/// Distribution of occupied bins after `k` uniform throws into `k` bins.
fn occupancy_error(k: usize) -> f64 {
    let mut dist = vec![0.0; k + 1];
    dist[0] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; k + 1];
        for (m, p) in dist.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            next[m] += p * m as f64 / k as f64;
            if m < k {
                next[m + 1] += p * (k - m) as f64 / k as f64;
            }
        }
        dist = next;
    }
    let expected: f64 = dist.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
    1.0 - expected / k as f64
}

#[test]
fn staircase_collision_values() {
    let poisson = staircase_collision_abe(20, CollisionMode::PoissonFormula, 0, 0).unwrap();
    assert_abs_diff_eq!(poisson.value, 0.484_829_1, epsilon = 5e-7);

    let exact = staircase_collision_abe(20, CollisionMode::Exact, 0, 0)
        .unwrap()
        .value;
    assert_abs_diff_eq!(exact, occupancy_error(20), epsilon = 1e-14);
    assert_abs_diff_eq!(exact, 0.358_485_922_408_541_3, epsilon = 1e-12);

    let mc = staircase_collision_abe(20, CollisionMode::MonteCarlo, 100_000, 5).unwrap();
    assert!(mc.z_score(exact, 0.0) <= 3.0, "{mc:?}");
    assert_eq!(
        mc,
        staircase_collision_abe(20, CollisionMode::MonteCarlo, 100_000, 5).unwrap()
    );

    for mode in [CollisionMode::Exact, CollisionMode::MonteCarlo] {
        assert_eq!(staircase_collision_abe(1, mode, 10, 0).unwrap().value, 0.0);
    }
    assert!(staircase_collision_abe(0, CollisionMode::Exact, 10, 0).is_err());
}

#[test]
fn staircase_oracles_agree() {
    let model = StimulusResponseModel::Staircase(StaircaseParams::new(10).unwrap());
    let generic = mc_average_bayes_error(&model, 10, 20_000, 1, 3).unwrap();
    let collision = staircase_collision_abe(10, CollisionMode::MonteCarlo, 20_000, 4).unwrap();
    assert!(generic.z_score(collision.value, collision.std_error) <= 3.0);
}

#[test]
fn lemma1_agrees_with_simulation() {
    let checks = lemma1_suite(3, 100_000, 8).unwrap();
    for c in &checks {
        assert!(c.z <= 3.0, "{c:?}");
    }
    let mut rng = rng_from_seed(1);
    for _ in 0..50 {
        let p = random_moment_problem(&mut rng);
        assert!(p.validate().is_ok());
    }
}

#[test]
fn theorem_tuple_reduces_to_separation() {
    // α = 2ι, β = 0, γ = 0, δ = 4ι, ε = 2ι gives μ = √(2ι), ν² = 1
    let iota = 0.5;
    let p = GaussianMaxProblem::new(2.0 * iota, 0.0, 0.0, 4.0 * iota, 2.0 * iota, 6).unwrap();
    assert_abs_diff_eq!(p.mu(), (2.0 * iota).sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(p.nu2(), 1.0, epsilon = 1e-15);
    // β = 0 is singular, so simulate with a tiny jitter on Var(Z_1)
    let jittered = GaussianMaxProblem { beta: 1e-9, ..p };
    let mc = mc_lemma1(&jittered, 200_000, 3).unwrap();
    assert!(mc.z_score(pi_k(6, 1.0).unwrap(), 0.0) <= 3.0);
}

#[test]
fn null_sweep_has_no_gap() {
    for family in [
        ModelFamily::Gaussian { iota: 0.0 },
        ModelFamily::Logistic { iota: 0.0 },
    ] {
        let budget = Budget {
            exemplar_sets: 200,
            responses_per_set: 5,
        };
        let rows = convergence_sweep(family, &[2, 8, 32], 5, budget, 1).unwrap();
        for r in &rows {
            assert!(r.gap <= 3.0 * r.std_error + 1e-12, "{family:?}: {r:?}");
        }
    }
}

#[test]
fn sweep_tracks_dimension_and_monotone_helper() {
    let budget = Budget {
        exemplar_sets: 400,
        responses_per_set: 5,
    };
    let rows =
        convergence_sweep(ModelFamily::Gaussian { iota: 0.5 }, &[2, 8], 4, budget, 2).unwrap();
    assert_eq!(rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![2, 8]);
    assert!(rows.iter().all(|r| (r.true_mi - 0.5).abs() < 1e-12));
    let fake = |gap: f64, se: f64| ConvergenceRow {
        d: 1,
        true_mi: 0.0,
        estimate: 0.0,
        std_error: se,
        prediction: 0.0,
        gap,
    };
    assert!(gaps_nonincreasing(
        &[fake(0.1, 0.01), fake(0.11, 0.01)],
        1.0
    ));
    assert!(!gaps_nonincreasing(
        &[fake(0.1, 0.001), fake(0.2, 0.001)],
        1.0
    ));
}
