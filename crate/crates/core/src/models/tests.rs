use super::*;
use crate::quadrature::gauss_hermite;
use crate::seed::derive_seed;
use crate::special::{binary_entropy, sigmoid, LN2};
use crate::stats::{mean, std_error, variance};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn gaussian(d: usize, sx: f64, se: f64) -> StimulusResponseModel {
    StimulusResponseModel::GaussianSequence(GaussianSequenceParams::isotropic(d, sx, se).unwrap())
}

fn logistic(dim: usize, s: f64) -> StimulusResponseModel {
    StimulusResponseModel::MultiLogistic(MultiLogisticParams::scaled_identity(dim, s).unwrap())
}

/// Independent 1-d oracle: Gauss–Hermite expectation of the binary entropy.
fn logistic_mi_gauss_hermite(s: f64) -> f64 {
    let rule = gauss_hermite(200);
    let cond: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(z, w)| w * binary_entropy(sigmoid(s * z)))
        .sum();
    LN2 - cond
}

#[test]
fn exemplar_means_are_centered() {
    let model = gaussian(2, 1.5, 1.0);
    let mut first_coord = Vec::new();
    for s in 0..10_000u64 {
        let ex = sample_exemplars(&model, 3, derive_seed(42, s)).unwrap();
        first_coord.push(mean(&ex.exemplars.iter().map(|x| x[0]).collect::<Vec<_>>()));
    }
    assert!(mean(&first_coord).abs() <= 3.0 * std_error(&first_coord));
}

#[test]
fn exemplars_are_deterministic_and_in_support() {
    let model = gaussian(4, 1.0, 1.0);
    assert_eq!(
        sample_exemplars(&model, 5, 9).unwrap(),
        sample_exemplars(&model, 5, 9).unwrap()
    );
    let stair = StimulusResponseModel::Staircase(StaircaseParams::new(5).unwrap());
    let ex = sample_exemplars(&stair, 5, 3).unwrap();
    assert!(ex.exemplars.iter().all(|x| (0.0..=1.0).contains(&x[0])));
    assert!(sample_exemplars(&model, 1, 0).is_err());
}

#[test]
fn null_logistic_responses_are_fair_coins() {
    let model = logistic(3, 0.0);
    let ex = sample_exemplars(&model, 4, 1).unwrap();
    let data = sample_responses(&model, &ex, 2_000, 2, true).unwrap();
    let ys: Vec<f64> = data.records.iter().map(|r| r.response[1]).collect();
    assert!((mean(&ys) - 0.5).abs() <= 3.0 * std_error(&ys));
    assert!(data.discrete);
}

#[test]
fn gaussian_response_variance_matches_model() {
    let (sx, se) = (1.3, 0.7);
    let model = gaussian(1, sx, se);
    let mut ys = Vec::new();
    for s in 0..20_000u64 {
        let ex = sample_exemplars(&model, 2, derive_seed(5, s)).unwrap();
        let data = sample_responses(&model, &ex, 1, derive_seed(6, s), true).unwrap();
        ys.push(data.records[0].response[0]);
    }
    let v = variance(&ys);
    let target = sx * sx + se * se;
    // SE of a normal sample variance: σ²√(2/(n−1))
    let se_v = target * (2.0 / (ys.len() as f64 - 1.0)).sqrt();
    assert!((v - target).abs() <= 3.0 * se_v, "{v} vs {target} ± {se_v}");
}

#[test]
fn balanced_and_unbalanced_sampling() {
    let model = logistic(2, 1.0);
    let ex = sample_exemplars(&model, 4, 1).unwrap();
    let data = sample_responses(&model, &ex, 10, 3, true).unwrap();
    assert_eq!(data.len(), 40);
    assert_eq!(data.class_counts(), vec![10; 4]);
    assert_eq!(data.per_class(), Some(10));

    let data = sample_responses(&model, &ex, 10, 3, false).unwrap();
    assert_eq!(data.len(), 40);
    assert_eq!(data.class_counts().iter().sum::<usize>(), 40);
    assert_eq!(data, sample_responses(&model, &ex, 10, 3, false).unwrap());
    assert!(sample_responses(&model, &ex, 0, 3, true).is_err());
}

#[test]
fn log_density_spot_values() {
    let m = logistic(1, 1.0);
    assert_abs_diff_eq!(
        m.log_conditional_density(&[0.0], &[1.0]),
        0.5f64.ln(),
        epsilon = 1e-15
    );
    let m = StimulusResponseModel::MultiLogistic(
        MultiLogisticParams::new(Coefficients::Dense {
            p: 2,
            q: 2,
            values: vec![1.0, 0.5, -2.0, 0.0],
        })
        .unwrap(),
    );
    let x = [0.3, -0.4];
    let y = [1.0, 0.0];
    let expected = sigmoid(0.3 * 1.0 + -0.4 * -2.0).ln() + (1.0 - sigmoid(0.3 * 0.5)).ln();
    assert_abs_diff_eq!(m.log_conditional_density(&x, &y), expected, epsilon = 1e-14);

    let g = gaussian(1, 1.0, 1.0);
    assert_abs_diff_eq!(
        g.log_conditional_density(&[0.0], &[0.0]),
        -0.5 * (2.0 * std::f64::consts::PI).ln(),
        epsilon = 1e-15
    );

    let st = StimulusResponseModel::Staircase(StaircaseParams::new(4).unwrap());
    assert_eq!(
        st.log_conditional_density(&[0.1], &[0.6]),
        f64::NEG_INFINITY
    );
    assert_abs_diff_eq!(st.log_conditional_density(&[0.1], &[0.2]), 4f64.ln());
}

#[test]
fn conditional_densities_normalize() {
    let trapezoid = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * f(a + i as f64 * h)
            })
            .sum::<f64>()
            * h
    };
    let g = gaussian(1, 1.0, 0.8);
    let total = trapezoid(
        &|y| g.log_conditional_density(&[0.4], &[y]).exp(),
        -12.0,
        12.0,
        20_000,
    );
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);

    let e = StimulusResponseModel::ExpFamilySequence(
        ExpFamilySequenceParams::new(ExpFamilyInstance::GaussianProduct, 1, 0.6).unwrap(),
    );
    let total = trapezoid(
        &|y| e.log_conditional_density(&[1.1], &[y]).exp(),
        -14.0,
        14.0,
        20_000,
    );
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    let total = trapezoid(
        &|y| e.log_marginal_density(&[y]).unwrap().exp(),
        -20.0,
        20.0,
        40_000,
    );
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);

    // bin width 1/5 carries mass 1; sum exact bin integrals
    let st = StimulusResponseModel::Staircase(StaircaseParams::new(5).unwrap());
    let total: f64 = (0..5)
        .map(|b| {
            st.log_conditional_density(&[0.3], &[(b as f64 + 0.5) / 5.0])
                .exp()
                / 5.0
        })
        .sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);

    let l = StimulusResponseModel::ExpFamilySequence(
        ExpFamilySequenceParams::new(ExpFamilyInstance::LogisticProduct, 1, 0.9).unwrap(),
    );
    let total = l.log_conditional_density(&[0.7], &[0.0]).exp()
        + l.log_conditional_density(&[0.7], &[1.0]).exp();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
}

#[test]
fn true_mi_examples() {
    let g = gaussian(1, 1.0, 1.0);
    assert_abs_diff_eq!(
        g.true_mi(None, None).unwrap().value,
        0.5 * 2f64.ln(),
        epsilon = 1e-15
    );
    let st = StimulusResponseModel::Staircase(StaircaseParams::new(20).unwrap());
    assert_eq!(st.true_mi(None, None).unwrap().value, 20f64.ln());

    let s = 4.0 / 10f64.sqrt();
    let m = logistic(10, s);
    let v = m.true_mi(None, None).unwrap();
    assert_eq!(v.std_error, 0.0);
    assert_eq!(v.method, MiMethod::Quadrature);
    assert_abs_diff_eq!(v.value, 1.322, epsilon = 5e-4);
    assert_abs_diff_eq!(
        v.value,
        10.0 * logistic_mi_gauss_hermite(s),
        epsilon = 1e-10
    );
}

#[test]
fn one_dimensional_logistic_information_against_gauss_hermite() {
    for &s in &[0.05, 0.4, 1.0, 2.3, 3.0] {
        assert_abs_diff_eq!(
            logistic_mi_1d(s),
            logistic_mi_gauss_hermite(s),
            epsilon = 1e-9
        );
    }
    // large coupling approaches ln 2
    let big = logistic_mi_1d(200.0);
    assert!(big < LN2 && big > 0.68);
    let s = logistic_scale_for_mi(0.132).unwrap();
    assert_abs_diff_eq!(logistic_mi_1d(s), 0.132, epsilon = 1e-12);
}

#[test]
fn null_models_carry_no_information() {
    assert_eq!(logistic(5, 0.0).true_mi(None, None).unwrap().value, 0.0);
    let dense_zero = StimulusResponseModel::MultiLogistic(
        MultiLogisticParams::new(Coefficients::Dense {
            p: 2,
            q: 3,
            values: vec![0.0; 6],
        })
        .unwrap(),
    );
    assert_eq!(dense_zero.true_mi(None, None).unwrap().value, 0.0);
    let tiny = gaussian(3, 1e-9, 1.0).true_mi(None, None).unwrap().value;
    assert!((0.0..1e-17).contains(&tiny));
}

#[test]
fn product_models_are_additive() {
    for instance in [
        ExpFamilyInstance::GaussianProduct,
        ExpFamilyInstance::LogisticProduct,
    ] {
        let one = ExpFamilySequenceParams::new(instance, 1, 0.37)
            .unwrap()
            .mutual_information();
        let many = ExpFamilySequenceParams::new(instance, 64, 0.37)
            .unwrap()
            .mutual_information();
        assert_abs_diff_eq!(many, 64.0 * one, epsilon = 1e-10);
    }
    let one = logistic(1, 0.8).true_mi(None, None).unwrap().value;
    let many = logistic(32, 0.8).true_mi(None, None).unwrap().value;
    assert_abs_diff_eq!(many, 32.0 * one, epsilon = 1e-10);
    let one = gaussian(1, 0.3, 1.0).true_mi(None, None).unwrap().value;
    let many = gaussian(16, 0.3, 1.0).true_mi(None, None).unwrap().value;
    assert_abs_diff_eq!(many, 16.0 * one, epsilon = 1e-10);
}

#[test]
fn gaussian_product_information_closed_form() {
    // bivariate normal with correlation κ: −½ ln(1 − κ²)
    let m = ExpFamilySequenceParams::new(ExpFamilyInstance::GaussianProduct, 1, 0.5).unwrap();
    assert_abs_diff_eq!(m.mutual_information(), -0.5 * 0.75f64.ln(), epsilon = 1e-15);
    assert!(ExpFamilySequenceParams::new(ExpFamilyInstance::GaussianProduct, 1, 1.0).is_err());
}

#[test]
fn logistic_product_information_by_monte_carlo() {
    let model = StimulusResponseModel::ExpFamilySequence(
        ExpFamilySequenceParams::new(ExpFamilyInstance::LogisticProduct, 1, 0.8).unwrap(),
    );
    // I = E[ln p(y|x) − ln p(y)] over the joint
    let mut rng = crate::seed::rng_from_seed(17);
    let (mut x, mut y) = ([0.0], [0.0]);
    let terms: Vec<f64> = (0..200_000)
        .map(|_| {
            model.sample_stimulus(&mut rng, &mut x);
            model.sample_response(&x, &mut rng, &mut y);
            model.log_conditional_density(&x, &y) - model.log_marginal_density(&y).unwrap()
        })
        .collect();
    let exact = model.true_mi(None, None).unwrap().value;
    assert!((mean(&terms) - exact).abs() <= 3.0 * std_error(&terms));
}

#[test]
fn nested_monte_carlo_agrees_with_quadrature() {
    let s = 1.1;
    let params = MultiLogisticParams::scaled_identity(4, s).unwrap();
    let exact = params.mutual_information(None, None).unwrap().value;
    let mc = params.nested_monte_carlo(40_000, None, 3);
    assert!(
        (mc.value - exact).abs() <= 3.0 * mc.std_error,
        "{} vs {} ± {}",
        mc.value,
        exact,
        mc.std_error
    );
    match mc.method {
        MiMethod::NestedMonteCarlo {
            inner,
            bias_correction,
            ..
        } => {
            assert_eq!(inner, 200);
            assert!(bias_correction > 0.0);
        }
        other => panic!("unexpected method {other:?}"),
    }
}

#[test]
fn dense_non_separable_needs_budget() {
    let m = StimulusResponseModel::MultiLogistic(
        MultiLogisticParams::new(Coefficients::Dense {
            p: 2,
            q: 2,
            values: vec![1.0, 1.0, 0.5, -0.5],
        })
        .unwrap(),
    );
    assert!(matches!(m.true_mi(None, None), Err(Error::Domain(_))));
    let v = m.true_mi(Some(4_000), Some(1)).unwrap();
    assert!(v.value > 0.0 && v.std_error > 0.0);
    assert!(m.log_marginal_density(&[0.0, 1.0]).is_none());
}

#[test]
fn separability_detection() {
    let diag = Coefficients::Dense {
        p: 2,
        q: 3,
        values: vec![0.0, 2.0, 0.0, 1.5, 0.0, 0.0],
    };
    assert_eq!(diag.separable_scales(), Some(vec![1.5, 2.0, 0.0]));
    let shared = Coefficients::Dense {
        p: 2,
        q: 2,
        values: vec![1.0, 1.0, 0.0, 0.0],
    };
    assert_eq!(shared.separable_scales(), None);
}

/// χ² goodness of fit of sampled responses against the exponentiated
/// conditional density, binned on a coarse grid.
fn chi_square_p_value(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

fn continuous_gof(
    model: &StimulusResponseModel,
    x: f64,
    lo: f64,
    hi: f64,
    bins: usize,
    seed: u64,
) -> f64 {
    let n = 50_000;
    let mut rng = crate::seed::rng_from_seed(seed);
    let width = (hi - lo) / bins as f64;
    let mut observed = vec![0.0; bins + 2];
    let mut y = [0.0];
    for _ in 0..n {
        model.sample_response(&[x], &mut rng, &mut y);
        let idx = if y[0] < lo {
            0
        } else if y[0] >= hi {
            bins + 1
        } else {
            1 + ((y[0] - lo) / width) as usize
        };
        observed[idx] += 1.0;
    }
    // bin probabilities by fine trapezoid on the density
    let density = |v: f64| model.log_conditional_density(&[x], &[v]).exp();
    let bin_mass = |a: f64, b: f64| {
        let m = 400;
        let h = (b - a) / m as f64;
        (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                w * density(a + i as f64 * h)
            })
            .sum::<f64>()
            * h
    };
    let mut expected: Vec<f64> = (0..bins)
        .map(|b| bin_mass(lo + b as f64 * width, lo + (b + 1) as f64 * width))
        .collect();
    let inside: f64 = expected.iter().sum();
    let below = bin_mass(lo - 30.0, lo);
    expected.insert(0, below);
    expected.push((1.0 - inside - below).max(1e-12));
    let expected: Vec<f64> = expected.iter().map(|p| p * n as f64).collect();
    // merge sparse tail cells into their neighbours
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= 20.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if let (Some(lo_), Some(le)) = (obs.last_mut(), exp.last_mut()) {
        *lo_ += o_acc;
        *le += e_acc;
    }
    chi_square_p_value(&obs, &exp)
}

#[test]
fn sampled_responses_fit_their_densities() {
    let g = gaussian(1, 1.0, 0.9);
    assert!(continuous_gof(&g, 0.7, -3.0, 4.0, 14, 1) > 1e-3);

    let e = StimulusResponseModel::ExpFamilySequence(
        ExpFamilySequenceParams::new(ExpFamilyInstance::GaussianProduct, 1, 0.4).unwrap(),
    );
    assert!(continuous_gof(&e, -1.2, -4.0, 3.0, 14, 2) > 1e-3);

    let st = StimulusResponseModel::Staircase(StaircaseParams::new(4).unwrap());
    assert!(continuous_gof(&st, 0.6, 0.0, 1.0, 16, 3) > 1e-3);

    // binary responses: two cells per coordinate
    for model in [
        logistic(1, 1.7),
        StimulusResponseModel::ExpFamilySequence(
            ExpFamilySequenceParams::new(ExpFamilyInstance::LogisticProduct, 1, 0.6).unwrap(),
        ),
    ] {
        let n = 40_000;
        let mut rng = crate::seed::rng_from_seed(4);
        let mut y = [0.0];
        let ones = (0..n)
            .filter(|_| {
                model.sample_response(&[0.35], &mut rng, &mut y);
                y[0] > 0.5
            })
            .count() as f64;
        let p1 = model.log_conditional_density(&[0.35], &[1.0]).exp();
        let p = chi_square_p_value(
            &[ones, n as f64 - ones],
            &[p1 * n as f64, (1.0 - p1) * n as f64],
        );
        assert!(p > 1e-3, "p = {p}");
    }
}

#[test]
fn model_spec_files_build() {
    let m = ModelSpec::from_json(
        r#"{"kind":"multi_logistic","p":10,"q":10,"coefficients":{"scaled_identity":1.5}}"#,
    )
    .unwrap()
    .build()
    .unwrap();
    assert_eq!(m, logistic(10, 1.5));

    let m = ModelSpec::from_json(
        r#"{"kind":"gaussian_sequence","d":3,"sigma_x":0.5,"sigma_e":[1,1,2]}"#,
    )
    .unwrap()
    .build()
    .unwrap();
    assert_eq!(m.stimulus_dim(), 3);

    let r = ModelSpec::from_json(
        r#"{"kind":"multi_logistic","p":2,"q":3,"coefficients":{"random_normal":{"variance":0.025,"seed":7}}}"#,
    )
    .unwrap();
    assert_eq!(r.build().unwrap(), r.build().unwrap());

    assert!(ModelSpec::from_json(r#"{"kind":"staircase","k_bins":0}"#)
        .unwrap()
        .build()
        .is_err());
    assert!(ModelSpec::from_json(
        r#"{"kind":"multi_logistic","p":2,"q":2,"coefficients":{"row_major":[1,2,3]}}"#
    )
    .unwrap()
    .build()
    .is_err());
    assert!(ModelSpec::from_json(r#"{"kind":"bogus"}"#).is_err());

    let spec = ModelSpec::from(&m);
    assert_eq!(spec.build().unwrap(), m);
}

proptest! {
    #[test]
    fn information_is_nonnegative(s in -6.0f64..6.0, sx in 0.01f64..5.0, kappa in -0.95f64..0.95) {
        prop_assert!(logistic(3, s).true_mi(None, None).unwrap().value >= 0.0);
        prop_assert!(gaussian(2, sx, 1.0).true_mi(None, None).unwrap().value >= 0.0);
        for instance in [ExpFamilyInstance::GaussianProduct, ExpFamilyInstance::LogisticProduct] {
            let m = ExpFamilySequenceParams::new(instance, 2, kappa).unwrap();
            prop_assert!(m.mutual_information() >= 0.0);
        }
    }
}
