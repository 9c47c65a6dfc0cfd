//! Gauss–Legendre rules: fixed panels and an adaptive bisection driver.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on P_n from the Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over [a, b] with one panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integral of `f` and of `|f|` over [a, b], sharing the evaluations.
    fn integrate_with_abs<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (mut s, mut sa) = (0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            s += w * v;
            sa += w * v.abs();
        }
        (s * half, sa * half.abs())
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 16-point rule used by the adaptive driver.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Shared 8-point rule used for per-panel integrals on sampling grids.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

const MAX_DEPTH: usize = 40;

/// Adaptive composite 16-point Gauss–Legendre quadrature.
///
/// A panel is accepted when the one-panel and two-half-panel estimates agree to
/// `tol` relative to the integral of `|f|` over the whole interval.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> Result<f64> {
    integrate_adaptive_floor(a, b, tol, 0.0, f)
}

/// As [`integrate_adaptive`], but panels are also accepted once the estimates agree
/// to the absolute level `floor`, for integrands known only to that accuracy.
pub fn integrate_adaptive_floor<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    tol: f64,
    floor: f64,
    mut f: F,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = gl16();
    let (whole, whole_abs) = rule.integrate_with_abs(a, b, &mut f);
    // floor keeps integrands that are identically (or nearly) zero from refining forever
    let scale = whole_abs.max(f64::MIN_POSITIVE);
    let target = (tol * scale).max(floor);
    let mut total = 0.0;
    let mut stack = vec![(a, b, whole, 0usize)];
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        let refined = left + right;
        let width_share = ((hi - lo) / (b - a)).abs();
        if (refined - est).abs() <= target * width_share || (refined - est).abs() < 1e-15 * scale {
            total += refined;
        } else if depth >= MAX_DEPTH {
            return Err(Error::ToleranceNotReached { tol });
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}
