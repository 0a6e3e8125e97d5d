//! The orthogonal-constellation error function `π_k` and its inverse.
//!
//! `π_k(c) = 1 − ∫ φ(z − c) Φ(z)^{k−1} dz` is the probability that a
//! `N(c, 1)` variate falls below the maximum of `k − 1` independent standard
//! normals. It maps a separation `c = √(2I)` to a `k`-class error rate, and
//! its inverse turns an observed error rate back into information.
//!
//! The integral is evaluated in the complementary form
//! `∫ φ(z − c) (1 − Φ(z)^{k−1}) dz`, with `1 − Φ^{k−1}` computed through
//! `expm1`/`ln Φ`, so small error rates keep full relative precision.

use crate::error::{Error, Result};
use crate::quadrature::integrate_doubling;
use crate::special::{ln_normal_cdf, LN_SQRT_2PI};
use serde::{Deserialize, Serialize};

/// Absolute tolerance between successive quadrature refinements.
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Bisection stops once the bracket spans less than this in error space.
pub const INVERSE_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 14;

/// A validated `(k, c)` argument for [`pi_k`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PikQuery {
    k: usize,
    c: f64,
}

impl PikQuery {
    pub fn new(k: usize, c: f64) -> Result<Self> {
        check_k(k)?;
        if !c.is_finite() {
            return Err(Error::domain(format!("c must be finite, got {c}")));
        }
        Ok(Self { k, c })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn evaluate(&self) -> f64 {
        exceedance(self.c, 1.0, self.k)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    Ok(())
}

/// Chance error rate `1 − 1/k`.
pub fn chance_error(k: usize) -> f64 {
    (k as f64 - 1.0) / k as f64
}

/// `π_k(c)`; accurate to about 1e-12 absolute.
pub fn pi_k(k: usize, c: f64) -> Result<f64> {
    Ok(PikQuery::new(k, c)?.evaluate())
}

/// `Pr[W < M_{k−1}]` for `W ~ N(mu, nu2)` independent of the maximum
/// `M_{k−1}` of `k − 1` standard normals.
pub fn gaussian_max_exceedance(mu: f64, nu2: f64, k: usize) -> Result<f64> {
    check_k(k)?;
    if !(nu2 > 0.0) || !nu2.is_finite() {
        return Err(Error::domain(format!(
            "nu2 must be > 0 and finite, got {nu2}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::domain(format!("mu must be finite, got {mu}")));
    }
    Ok(exceedance(mu, nu2, k))
}

fn exceedance(mu: f64, nu2: f64, k: usize) -> f64 {
    let nu = nu2.sqrt();
    let half_width = 10.0 * nu.max(1.0);
    let km1 = (k - 1) as f64;
    let norm = -LN_SQRT_2PI - nu.ln();
    let integrand = |w: f64| {
        let z = (w - mu) / nu;
        let log_density = norm - 0.5 * z * z;
        let tail = -(km1 * ln_normal_cdf(w)).exp_m1();
        log_density.exp() * tail
    };
    let a = mu - half_width;
    let b = mu + half_width;
    // at least one 20-node panel per four standard deviations of W
    let min_panels = ((0.5 * half_width / nu).ceil() as usize).clamp(4, MAX_PANELS);
    let start = min_panels.next_power_of_two();
    let value = integrate_doubling(&integrand, a, b, start, QUADRATURE_TOL, MAX_PANELS).value;
    value.clamp(0.0, 1.0)
}

/// Separation `c ≥ 0` with `π_k(c) = e`.
///
/// Error rates at or above chance map to 0. An error of exactly 0 has no
/// finite preimage and yields [`Error::Divergent`].
pub fn pi_k_inverse(e: f64, k: usize) -> Result<f64> {
    check_k(k)?;
    if e.is_nan() || e > 1.0 {
        return Err(Error::domain(format!(
            "error rate must lie in [0, 1], got {e}"
        )));
    }
    if e < 0.0 {
        return Err(Error::domain(format!(
            "error rate must be nonnegative, got {e}"
        )));
    }
    if e == 0.0 {
        return Err(Error::Divergent);
    }
    if e >= chance_error(k) {
        return Ok(0.0);
    }
    let f = |c: f64| exceedance(c, 1.0, k);

    let mut lo = 0.0;
    let mut f_lo = chance_error(k);
    let mut hi = 1.0;
    let mut f_hi = f(hi);
    while f_hi >= e {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi);
        if hi > 1e6 {
            return Err(Error::domain(format!("error rate {e} too small to invert")));
        }
    }
    while f_lo - f_hi >= INVERSE_TOL && hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid >= e {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Moment structure of a jointly Gaussian `(Z_1, …, Z_k)` with exchangeable
/// competitors `Z_2, …, Z_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMaxProblem {
    /// `E[Z_1 − Z_i]`
    pub alpha: f64,
    /// `Var(Z_1)`
    pub beta: f64,
    /// `Cov(Z_1, Z_i)`
    pub gamma: f64,
    /// `Var(Z_i)`
    pub delta: f64,
    /// `Cov(Z_i, Z_j)`
    pub epsilon: f64,
    pub k: usize,
}

impl GaussianMaxProblem {
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        epsilon: f64,
        k: usize,
    ) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            delta,
            epsilon,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        let all = [self.alpha, self.beta, self.gamma, self.delta, self.epsilon];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("moments must be finite"));
        }
        if self.beta < 0.0 {
            return Err(Error::domain(format!(
                "beta = Var(Z_1) must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.delta - self.epsilon > 0.0) {
            return Err(Error::domain(format!(
                "requires delta - epsilon > 0, got {}",
                self.delta - self.epsilon
            )));
        }
        if !(self.beta + self.epsilon - 2.0 * self.gamma > 0.0) {
            return Err(Error::domain(format!(
                "requires beta + epsilon - 2*gamma > 0, got {}",
                self.beta + self.epsilon - 2.0 * self.gamma
            )));
        }
        Ok(())
    }

    /// Standardized mean gap `α / √(δ − ε)`.
    pub fn mu(&self) -> f64 {
        self.alpha / (self.delta - self.epsilon).sqrt()
    }

    /// Standardized shared variance `(β + ε − 2γ) / (δ − ε)`.
    pub fn nu2(&self) -> f64 {
        (self.beta + self.epsilon - 2.0 * self.gamma) / (self.delta - self.epsilon)
    }
}

/// `Pr[Z_1 < max_{i≥2} Z_i]` for the given moment structure.
pub fn lemma1_exceedance(p: &GaussianMaxProblem) -> Result<f64> {
    p.validate()?;
    gaussian_max_exceedance(p.mu(), p.nu2(), p.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::special::normal_cdf;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::SQRT_2;

    /// Independent route: adaptive Simpson on `φ(z−c)(1 − Φ(z)^{k−1})`,
    /// evaluated with plain `powi` and a wide fixed window.
    fn simpson_oracle(mu: f64, nu: f64, k: usize) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn simpson<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let f = |w: f64| {
            let z = (w - mu) / nu;
            (-0.5 * z * z).exp() / (nu * (2.0 * std::f64::consts::PI).sqrt())
                * (1.0 - normal_cdf(w).powi(k as i32 - 1))
        };
        let (a, b) = (mu - 14.0 * nu, mu + 14.0 * nu);
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, a, b, fa, fm, fb, whole, 1e-13, 40)
    }

    fn mc_exceedance(mu: f64, nu: f64, k: usize, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = rng_from_seed(seed);
        let mut hits = 0usize;
        for _ in 0..n {
            let w = mu + nu * rng.sample::<f64, _>(StandardNormal);
            let mut m = f64::NEG_INFINITY;
            for _ in 1..k {
                m = m.max(rng.sample::<f64, _>(StandardNormal));
            }
            if w < m {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        (p, (p * (1.0 - p) / n as f64).sqrt())
    }

    #[test]
    fn chance_anchors() {
        assert_abs_diff_eq!(pi_k(2, 0.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pi_k(10, 0.0).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn binary_closed_form_at_one() {
        let expected = normal_cdf(-1.0 / SQRT_2);
        assert_abs_diff_eq!(expected, 0.239_750_061_093_476_7, epsilon = 1e-15);
        assert_abs_diff_eq!(simpson_oracle(1.0, 1.0, 2), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(pi_k(2, 1.0).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn agrees_with_simpson_oracle() {
        for &(k, c) in &[(3, 0.4), (10, 1.0), (20, 2.5), (50, 4.0), (100, 0.0)] {
            assert_abs_diff_eq!(
                pi_k(k, c).unwrap(),
                simpson_oracle(c, 1.0, k),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn k20_c6_matches_monte_carlo() {
        let v = pi_k(20, 6.0).unwrap();
        assert!(v <= 1e-3);
        let (p, se) = mc_exceedance(6.0, 1.0, 20, 200_000, 11);
        assert!((v - p).abs() <= 3.0 * se, "quadrature {v} vs MC {p} ± {se}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(pi_k(1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(pi_k(5, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(pi_k(5, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(pi_k_inverse(0.0, 5), Err(Error::Divergent)));
        assert!(matches!(pi_k_inverse(1.5, 5), Err(Error::Domain(_))));
        assert!(matches!(pi_k_inverse(-0.1, 5), Err(Error::Domain(_))));
        assert!(matches!(
            gaussian_max_exceedance(0.0, 0.0, 3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            gaussian_max_exceedance(0.0, -1.0, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(pi_k_inverse(0.5, 2).unwrap(), 0.0);
        assert_eq!(pi_k_inverse(0.95, 20).unwrap(), 0.0);
        assert_eq!(pi_k_inverse(0.99, 20).unwrap(), 0.0);
        let c = pi_k_inverse(normal_cdf(-1.0 / SQRT_2), 2).unwrap();
        assert_abs_diff_eq!(c, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(pi_k_inverse(0.23975, 2).unwrap(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn exceedance_examples() {
        assert_abs_diff_eq!(
            gaussian_max_exceedance(0.0, 1.0, 2).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // k = 2: Pr[W < N] = Φ(−μ/√(1+ν²))
        let expected = normal_cdf(-1.5 / SQRT_2);
        assert_abs_diff_eq!(expected, 0.144_422_183_173_242_46, epsilon = 1e-12);
        assert_abs_diff_eq!(
            gaussian_max_exceedance(1.5, 1.0, 2).unwrap(),
            expected,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            gaussian_max_exceedance(0.7, 2.5, 2).unwrap(),
            normal_cdf(-0.7 / 3.5f64.sqrt()),
            epsilon = 1e-10
        );
    }

    #[test]
    fn wide_and_narrow_shared_variance_match_monte_carlo() {
        let v = gaussian_max_exceedance(2.0, 4.0, 5).unwrap();
        let (p, se) = mc_exceedance(2.0, 2.0, 5, 500_000, 5);
        assert!((v - p).abs() <= 3.0 * se, "{v} vs {p} ± {se}");

        let v = gaussian_max_exceedance(1.2, 0.0004, 4).unwrap();
        assert_abs_diff_eq!(v, simpson_oracle(1.2, 0.02, 4), epsilon = 1e-9);
    }

    #[test]
    fn lemma1_examples() {
        let iota = 0.5;
        let p = GaussianMaxProblem::new(2.0 * iota, 0.0, 0.0, 4.0 * iota, 2.0 * iota, 10).unwrap();
        assert_abs_diff_eq!(p.mu(), (2.0 * iota).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.nu2(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            lemma1_exceedance(&p).unwrap(),
            pi_k(10, 1.0).unwrap(),
            epsilon = 1e-14
        );

        let p = GaussianMaxProblem::new(0.0, 1.0, 0.0, 2.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(lemma1_exceedance(&p).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lemma1_names_failed_inequality() {
        let err = GaussianMaxProblem::new(1.0, 1.0, 0.0, 1.0, 1.0, 3).unwrap_err();
        assert!(err.to_string().contains("delta - epsilon"), "{err}");
        let err = GaussianMaxProblem::new(1.0, 1.0, 1.0, 2.0, 0.5, 3).unwrap_err();
        assert!(
            err.to_string().contains("beta + epsilon - 2*gamma"),
            "{err}"
        );
    }

    #[test]
    fn reduction_is_bit_for_bit() {
        for &(k, c) in &[(2, 0.0), (7, 1.3), (40, 3.3)] {
            assert_eq!(
                gaussian_max_exceedance(c, 1.0, k).unwrap().to_bits(),
                pi_k(k, c).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn chance_anchor_all_k() {
        for k in 2..=100 {
            assert_abs_diff_eq!(pi_k(k, 0.0).unwrap(), chance_error(k), epsilon = 1e-10);
        }
    }

    #[test]
    fn monotone_in_c_on_grid() {
        for &k in &[2usize, 5, 20, 100] {
            let values: Vec<f64> = (0..=100)
                .map(|i| pi_k(k, i as f64 * 0.1).unwrap())
                .collect();
            for w in values.windows(2) {
                assert!(w[1] < w[0], "k={k}: {} !< {}", w[1], w[0]);
            }
        }
        assert!(pi_k(10, 12.0).unwrap() < 1e-15);
    }

    #[test]
    fn binary_closed_form_on_interval() {
        for i in 0..=160 {
            let c = i as f64 * 0.05;
            assert_abs_diff_eq!(pi_k(2, c).unwrap(), normal_cdf(-c / SQRT_2), epsilon = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn increases_with_k(c in 0.01f64..8.0, k in 2usize..60) {
            prop_assert!(pi_k(k + 1, c).unwrap() > pi_k(k, c).unwrap());
        }

        #[test]
        fn round_trip(k in 2usize..80, u in 0.0f64..1.0) {
            let log_lo = (1e-6f64).ln();
            let log_hi = chance_error(k).ln();
            let e = (log_lo + u * (log_hi - log_lo)).exp();
            let c = pi_k_inverse(e, k).unwrap();
            prop_assert!((pi_k(k, c).unwrap() - e).abs() <= 1e-9);
        }
    }
}
