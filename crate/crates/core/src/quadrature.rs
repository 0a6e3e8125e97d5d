//! Fixed-node quadrature rules.
//!
//! Gauss–Legendre nodes come from Newton iteration on the three-term
//! recurrence; Gauss–Hermite nodes (probabilists' weight, normalized to a
//! standard normal expectation) come from the Golub–Welsch eigenproblem.
//! Both are computed once per order and cached.

use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of a rule on its reference domain.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Order of each panel in [`composite_legendre`].
pub const PANEL_ORDER: usize = 20;

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    cached(&CACHE, n, legendre_rule)
}

/// Gauss–Hermite rule for `E[f(Z)]`, `Z ~ N(0, 1)`; weights sum to one.
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    cached(&CACHE, n, hermite_rule)
}

fn cached(
    cache: &OnceLock<Mutex<HashMap<usize, Arc<Rule>>>>,
    n: usize,
    build: fn(usize) -> Rule,
) -> Arc<Rule> {
    assert!(n >= 1, "quadrature order must be positive");
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = map.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(build(n));
    map.lock().unwrap().entry(n).or_insert(rule).clone()
}

fn legendre_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                dp = legendre_with_derivative(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn hermite_rule(n: usize) -> Rule {
    // Jacobi matrix of the monic probabilists' Hermite recurrence.
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize to remove eigen-solver round-off
    for i in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
        let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` with `panels` equal panels.
pub fn composite_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(PANEL_ORDER);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Result of an adaptive-by-doubling integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub panels: usize,
    pub last_change: f64,
}

/// Integrates `f` over `[a, b]` starting from `start_panels` panels and
/// doubling until two successive estimates differ by less than `tol` (or
/// `max_panels` is reached).
pub fn integrate_doubling<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    start_panels: usize,
    tol: f64,
    max_panels: usize,
) -> Integral {
    let mut panels = start_panels.max(1);
    let mut prev = composite_legendre(f, a, b, panels);
    loop {
        panels *= 2;
        let next = composite_legendre(f, a, b, panels);
        let change = (next - prev).abs();
        if change < tol || panels >= max_panels {
            return Integral {
                value: next,
                panels,
                last_change: change,
            };
        }
        prev = next;
    }
}

/// `E[f(Z)]` for `Z ~ N(0, 1)` by composite Gauss–Legendre on `[-12, 12]`,
/// split at `breakpoint` so a kink there does not slow convergence.
pub fn normal_expectation<F: Fn(f64) -> f64>(f: &F, breakpoint: f64) -> f64 {
    const HALF_WIDTH: f64 = 12.0;
    let g = |z: f64| crate::special::normal_pdf(z) * f(z);
    let b = breakpoint.clamp(-HALF_WIDTH, HALF_WIDTH);
    let mut total = 0.0;
    if b > -HALF_WIDTH {
        total += integrate_doubling(&g, -HALF_WIDTH, b, 2, 1e-14, 1 << 12).value;
    }
    if b < HALF_WIDTH {
        total += integrate_doubling(&g, b, HALF_WIDTH, 2, 1e-14, 1 << 12).value;
    }
    total
}
