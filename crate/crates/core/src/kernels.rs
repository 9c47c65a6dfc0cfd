//! Nested memory kernels K_i = sin_{Ω_0} ∗ sin_{Ω_1} ∗ … ∗ sin_{Ω_i}.
//!
//! Three independent routes: a partial-fraction sine series, the Taylor series
//! at the origin, and direct nested quadrature.

use crate::convolution::SineSeries;
use crate::ddouble::Dd;
use crate::error::{Error, Result};
use crate::interp::Chebyshev;
use crate::quadrature::{integrate_adaptive, integrate_adaptive_floor};

/// Relative gap below which two squared frequencies count as coinciding.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Default relative tolerance of the nested quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Sine-series form K_i(τ) = Σ_j α_j sin(Ω_j τ).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRep {
    freqs: Vec<f64>,
    coeffs: Vec<f64>,
    coeffs_dd: Vec<Dd>,
    taylor: Option<Vec<f64>>,
}

impl KernelRep {
    /// Nesting order i (the kernel has i + 1 frequencies).
    pub fn order(&self) -> usize {
        self.freqs.len() - 1
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn sine_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.freqs)
            .map(|(a, w)| a * (w * tau).sin())
            .sum()
    }

    /// K_i^{(k)}(0) from the sine series, summed in double-double.
    pub fn deriv_zero(&self, k: usize) -> f64 {
        if k % 2 == 0 {
            return 0.0;
        }
        let m = (k - 1) / 2;
        let mut acc = Dd::ZERO;
        for (a, &w) in self.coeffs_dd.iter().zip(&self.freqs) {
            acc = acc + *a * Dd::from_f64(w).powi(k as u32);
        }
        if m % 2 == 1 {
            acc = -acc;
        }
        acc.to_f64()
    }

    /// Attaches the odd derivatives K^{(2k−1)}(0) for k = 1..=max_order.
    pub fn with_taylor(mut self, max_order: usize) -> Self {
        self.taylor = Some(
            (1..=max_order)
                .map(|k| self.deriv_zero(2 * k - 1))
                .collect(),
        );
        self
    }

    /// Odd derivatives at the origin, if attached: entry k−1 holds K^{(2k−1)}(0).
    pub fn taylor(&self) -> Option<&[f64]> {
        self.taylor.as_deref()
    }

    pub fn sine_series(&self) -> SineSeries {
        SineSeries {
            amplitudes: self.coeffs.clone(),
            frequencies: self.freqs.clone(),
        }
    }
}

/// Partial-fraction closed form of K_i for distinct frequencies Ω_0..Ω_i:
/// α_j = ∏_l Ω_l / (Ω_j ∏_{l≠j} (Ω_l² − Ω_j²)).
pub fn kernel_closed_form(freqs: &[f64]) -> Result<KernelRep> {
    check_freqs(freqs)?;
    let max_sq = freqs.iter().map(|w| w * w).fold(0.0, f64::max);
    for a in 0..freqs.len() {
        for b in a + 1..freqs.len() {
            if (freqs[a] * freqs[a] - freqs[b] * freqs[b]).abs() < DEGENERACY_TOLERANCE * max_sq {
                return Err(Error::DegenerateFrequencies {
                    a: freqs[a],
                    b: freqs[b],
                });
            }
        }
    }
    let prod = freqs.iter().fold(Dd::ONE, |acc, &w| acc * Dd::from_f64(w));
    let squares: Vec<Dd> = freqs.iter().map(|&w| Dd::prod(w, w)).collect();
    let coeffs_dd: Vec<Dd> = (0..freqs.len())
        .map(|j| {
            let mut den = Dd::from_f64(freqs[j]);
            for l in 0..freqs.len() {
                if l != j {
                    den = den * (squares[l] - squares[j]);
                }
            }
            prod / den
        })
        .collect();
    Ok(KernelRep {
        freqs: freqs.to_vec(),
        coeffs: coeffs_dd.iter().map(|a| a.to_f64()).collect(),
        coeffs_dd,
        taylor: None,
    })
}

pub fn kernel_eval(rep: &KernelRep, tau: f64) -> f64 {
    rep.eval(tau)
}

/// K_i^{(k)}(0). Uses the sine series when the frequencies are distinct and the
/// confluent symmetric-polynomial form otherwise.
pub fn kernel_deriv_zero(freqs: &[f64], k: usize) -> Result<f64> {
    match kernel_closed_form(freqs) {
        Ok(rep) => Ok(rep.deriv_zero(k)),
        Err(Error::DegenerateFrequencies { .. }) => Ok(deriv_zero_symmetric(freqs, k)),
        Err(e) => Err(e),
    }
}

/// K_i^{(2m+1)}(0) = ∏Ω_l · (−1)^{m−i} · h_{m−i}(Ω_0², …, Ω_i²), zero otherwise.
fn deriv_zero_symmetric(freqs: &[f64], k: usize) -> f64 {
    let i = freqs.len() - 1;
    if k % 2 == 0 || k < 2 * i + 1 {
        return 0.0;
    }
    let r = (k - 1) / 2 - i;
    let h = complete_homogeneous(freqs, r);
    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
    sign * freqs.iter().product::<f64>() * h[r]
}

/// h_0..=h_r of the squared frequencies.
fn complete_homogeneous(freqs: &[f64], r: usize) -> Vec<f64> {
    let mut h = vec![0.0; r + 1];
    h[0] = 1.0;
    for w in freqs {
        let x = w * w;
        for p in 1..=r {
            h[p] += x * h[p - 1];
        }
    }
    h
}

/// Truncated Taylor series with the magnitude of the first omitted term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorValue {
    pub value: f64,
    pub remainder: f64,
}

/// Σ_{k=i+1}^{max_order} K_i^{(2k−1)}(0) τ^{2k−1}/(2k−1)!.
///
/// Works for coinciding frequencies as well.
pub fn kernel_taylor(freqs: &[f64], i: usize, max_order: usize, tau: f64) -> Result<TaylorValue> {
    check_freqs(freqs)?;
    if freqs.len() != i + 1 {
        return Err(Error::LengthMismatch {
            what: "kernel frequencies",
            expected: i + 1,
            found: freqs.len(),
        });
    }
    let terms = (max_order + 1).saturating_sub(i + 1);
    let h = complete_homogeneous(freqs, terms);
    let prod: f64 = freqs.iter().product();
    // weight τ^{2k−1}/(2k−1)! at k = i + 1
    let mut weight = 1.0;
    for p in 1..=(2 * i + 1) {
        weight *= tau / p as f64;
    }
    let tau2 = tau * tau;
    let mut value = 0.0;
    let mut remainder = 0.0;
    for (r, hr) in h.iter().enumerate().take(terms + 1) {
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * prod * hr * weight;
        if r == terms {
            remainder = term.abs();
        } else {
            value += term;
        }
        let k = (i + 1 + r) as f64;
        weight *= tau2 / ((2.0 * k) * (2.0 * k + 1.0));
    }
    Ok(TaylorValue { value, remainder })
}

/// Nested-quadrature evaluation of K_i on [0, τ_max].
///
/// Every inner kernel K_1..K_{i−1} is tabulated on Chebyshev–Lobatto nodes, each value
/// an adaptive Gauss–Legendre integral of the previous level's interpolant.
#[derive(Debug, Clone)]
pub struct NestedQuadrature {
    freqs: Vec<f64>,
    levels: Vec<Chebyshev>,
}

const MIN_DEGREE: usize = 32;
const MAX_DEGREE: usize = 256;

impl NestedQuadrature {
    pub fn new(freqs: &[f64], tau_max: f64, tol: f64) -> Result<Self> {
        check_freqs(freqs)?;
        if !(tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(Error::NonpositiveParameter {
                what: "kernel argument",
                value: tau_max,
            });
        }
        if !(tol > 0.0) {
            return Err(Error::NonpositiveParameter {
                what: "quadrature tolerance",
                value: tol,
            });
        }
        let mut levels: Vec<Chebyshev> = Vec::with_capacity(freqs.len().saturating_sub(1));
        if tau_max > 0.0 {
            // the outermost level is integrated directly in `eval`
            for l in 1..freqs.len().saturating_sub(1) {
                let table = Self::tabulate(freqs, &levels, l, tau_max, tol)?;
                levels.push(table);
            }
        }
        Ok(NestedQuadrature {
            freqs: freqs.to_vec(),
            levels,
        })
    }

    fn tabulate(
        freqs: &[f64],
        levels: &[Chebyshev],
        l: usize,
        tau_max: f64,
        tol: f64,
    ) -> Result<Chebyshev> {
        let mut degree = MIN_DEGREE;
        loop {
            let nodes = Chebyshev::lobatto_points(0.0, tau_max, degree);
            let values = nodes
                .iter()
                .map(|&x| Self::convolve_level(freqs, levels, l, x, tol))
                .collect::<Result<Vec<f64>>>()?;
            let scale = values.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            let table = Chebyshev::new(0.0, tau_max, values);
            if table.tail_magnitude() <= tol * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
                return Ok(table);
            }
            if degree >= MAX_DEGREE {
                return Err(Error::ToleranceNotReached { tol });
            }
            degree *= 2;
        }
    }

    /// ∫_0^τ K_{l−1}(u) sin(Ω_l (τ − u)) du with K_{l−1} taken from the tables.
    fn convolve_level(
        freqs: &[f64],
        levels: &[Chebyshev],
        l: usize,
        tau: f64,
        tol: f64,
    ) -> Result<f64> {
        let w = freqs[l];
        if l == 1 {
            let w0 = freqs[0];
            integrate_adaptive(0.0, tau, tol, |u| (w0 * u).sin() * (w * (tau - u)).sin())
        } else {
            let prev = &levels[l - 2];
            // the table is only good to tol relative to its own scale
            let floor = tol * prev.scale() * tau;
            integrate_adaptive_floor(0.0, tau, tol, floor, |u| {
                prev.eval(u) * (w * (tau - u)).sin()
            })
        }
    }

    /// K_i(τ) for τ within the tabulated interval.
    pub fn eval(&self, tau: f64, tol: f64) -> Result<f64> {
        let i = self.freqs.len() - 1;
        if i == 0 {
            return Ok((self.freqs[0] * tau).sin());
        }
        if tau == 0.0 {
            return Ok(0.0);
        }
        Self::convolve_level(&self.freqs, &self.levels, i, tau, tol)
    }
}

/// K_i(τ) by nested quadrature to relative tolerance `tol`.
pub fn kernel_quadrature(freqs: &[f64], tau: f64, tol: f64) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::NonpositiveParameter {
            what: "kernel argument",
            value: tau,
        });
    }
    NestedQuadrature::new(freqs, tau, tol)?.eval(tau, tol)
}

fn check_freqs(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::EmptyModel);
    }
    if freqs.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite {
            what: "kernel frequencies",
        });
    }
    if let Some(&w) = freqs.iter().find(|&&w| w <= 0.0) {
        return Err(Error::NonpositiveParameter {
            what: "kernel frequency",
            value: w,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn order_zero_is_a_sine() {
        let k = kernel_closed_form(&[1.0]).unwrap();
        assert_eq!(kernel_eval(&k, PI / 2.0), 1.0);
        assert_eq!(kernel_quadrature(&[1.0], 0.8, 1e-12).unwrap(), 0.8f64.sin());
    }

    #[test]
    fn first_order_closed_form() {
        let k = kernel_closed_form(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(k.sine_coeffs()[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(k.sine_coeffs()[1], -1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(k.eval(PI / 2.0), 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(k.eval(0.0), 0.0);
        let q = kernel_quadrature(&[1.0, 2.0], PI / 2.0, 1e-12).unwrap();
        assert!((q - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn second_order_against_quadrature() {
        let k = kernel_closed_form(&[1.0, 2.0, 3.0]).unwrap();
        let q = kernel_quadrature(&[1.0, 2.0, 3.0], 0.7, 1e-12).unwrap();
        assert!((k.eval(0.7) - q).abs() < 1e-9);
        let t = kernel_taylor(&[1.0, 2.0, 3.0], 2, 40, 0.5).unwrap();
        assert!((k.eval(0.5) - t.value).abs() < 1e-9);
    }

    #[test]
    fn confluent_quadrature() {
        for tau in [0.3, 1.0, 2.5] {
            let q = kernel_quadrature(&[1.0, 1.0], tau, 1e-12).unwrap();
            let exact = (tau.sin() - tau * tau.cos()) / 2.0;
            assert!((q - exact).abs() < 1e-11, "{q} vs {exact}");
            let t = kernel_taylor(&[1.0, 1.0], 1, 40, tau).unwrap();
            assert!((t.value - exact).abs() < 1e-13);
        }
        assert!(matches!(
            kernel_closed_form(&[1.0, 1.0]),
            Err(Error::DegenerateFrequencies { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        let f = [1.0, 2.0];
        assert_eq!(kernel_deriv_zero(&f, 2).unwrap(), 0.0);
        assert_relative_eq!(kernel_deriv_zero(&f, 1).unwrap(), 0.0, epsilon = 1e-30);
        assert_relative_eq!(kernel_deriv_zero(&f, 3).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(
            kernel_deriv_zero(&f, 5).unwrap(),
            -10.0,
            max_relative = 1e-15
        );
        // confluent route gives the same structure
        assert_relative_eq!(
            kernel_deriv_zero(&[1.0, 1.0], 5).unwrap(),
            -2.0,
            max_relative = 1e-15
        );
        assert_eq!(kernel_deriv_zero(&[1.0, 1.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn taylor_matches_closed_form() {
        let k = kernel_closed_form(&[1.0, 2.0]).unwrap();
        let t = kernel_taylor(&[1.0, 2.0], 1, 40, 0.1).unwrap();
        assert!((t.value - k.eval(0.1)).abs() < 1e-12);
        assert!(t.remainder < 1e-60);
        assert_eq!(
            kernel_taylor(&[1.3, 2.2, 0.9], 2, 40, 0.0).unwrap().value,
            0.0
        );
        // leading term only
        let lead = kernel_taylor(&[1.0, 2.0, 3.0], 2, 3, 0.01).unwrap();
        assert_relative_eq!(
            lead.value,
            6.0 * 0.01f64.powi(5) / 120.0,
            max_relative = 1e-15
        );
        assert!(kernel_taylor(&[1.0, 2.0], 2, 40, 0.1).is_err());
    }

    #[test]
    fn small_tau_slope() {
        let k = kernel_closed_form(&[0.8, 1.7, 2.9]).unwrap();
        let (a, b) = (1e-3, 2e-3);
        let ta = kernel_taylor(k.freqs(), 2, 40, a).unwrap().value;
        let tb = kernel_taylor(k.freqs(), 2, 40, b).unwrap().value;
        let slope = (tb / ta).ln() / (b / a).ln();
        assert!((slope - 5.0).abs() < 1e-4);
    }

    #[test]
    fn attached_taylor_coefficients() {
        let k = kernel_closed_form(&[1.0, 2.0]).unwrap().with_taylor(3);
        let t = k.taylor().unwrap();
        assert_eq!(t.len(), 3);
        assert!(t[0].abs() < 1e-30);
        assert_relative_eq!(t[1], 2.0, max_relative = 1e-15);
        assert_relative_eq!(t[2], -10.0, max_relative = 1e-15);
    }

    #[test]
    fn recursion_consistency() {
        let freqs = [0.9, 1.6, 2.7, 3.4];
        let k2 = kernel_closed_form(&freqs[..3]).unwrap();
        let k3 = kernel_closed_form(&freqs).unwrap();
        for tau in [0.4, 1.3, 2.0] {
            let conv = integrate_adaptive(0.0, tau, 1e-13, |u| {
                k2.eval(u) * (freqs[3] * (tau - u)).sin()
            })
            .unwrap();
            assert!((conv - k3.eval(tau)).abs() < 1e-8);
        }
    }

    #[test]
    fn ordering_of_successive_kernels() {
        // |K_{i+1}| / |K_i| follows the leading-term ratio Ω_{i+1} τ² / ((2i+3)(2i+2)) near 0
        let freqs = [1.1, 2.3, 3.2];
        let tau = 0.05;
        let k1 = kernel_closed_form(&freqs[..2]).unwrap().eval(tau);
        let k2 = kernel_closed_form(&freqs).unwrap().eval(tau);
        let predicted = freqs[2] * tau * tau / (5.0 * 4.0);
        assert_relative_eq!(k2 / k1, predicted, max_relative = 1e-2);
        assert!(k2.abs() <= tau * tau / (5.0 * 4.0) * freqs[2] * k1.abs() * 1.01);
    }

    fn distinct_freqs(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.5f64..5.0, 1..=max_len).prop_filter("distinct", |f| {
            let mut s = f.clone();
            s.sort_by(f64::total_cmp);
            s.windows(2).all(|w| w[1] - w[0] > 0.05)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn low_derivatives_vanish(freqs in distinct_freqs(6)) {
            let rep = kernel_closed_form(&freqs).unwrap();
            let i = rep.order();
            let prod: f64 = freqs.iter().product();
            for k in 0..=2 * i {
                prop_assert!(rep.deriv_zero(k).abs() <= 1e-8);
            }
            let lead = rep.deriv_zero(2 * i + 1);
            prop_assert!((lead - prod).abs() <= 1e-10 * prod.abs());
        }

        #[test]
        fn sine_series_matches_symmetric_form(freqs in distinct_freqs(5), m in 0usize..8) {
            let rep = kernel_closed_form(&freqs).unwrap();
            let k = 2 * (rep.order() + m) + 1;
            let a = rep.deriv_zero(k);
            let b = deriv_zero_symmetric(&freqs, k);
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }

        #[test]
        fn closed_form_matches_taylor(freqs in distinct_freqs(6), tau in 0.0f64..2.0) {
            let rep = kernel_closed_form(&freqs).unwrap();
            let t = kernel_taylor(&freqs, rep.order(), 40, tau).unwrap();
            prop_assert!((rep.eval(tau) - t.value).abs() < 1e-8);
        }
    }
}
