//! Running convolutions of sine-series kernels with signals on a uniform grid.
//!
//! With k(τ) = Σ a_j sin(w_j τ),
//!   ∫_0^t k(t-s) g(s) ds = Σ a_j [sin(w_j t) C_j(t) - cos(w_j t) S_j(t)]
//! where C_j, S_j are running integrals of cos(w_j s) g(s) and sin(w_j s) g(s).
//! Both accumulate panel by panel with an 8-point Gauss–Legendre rule, so the
//! whole series costs O(M · terms).

use crate::interp::TimeGrid;
use crate::quadrature::gl8;

/// Kernel of the form Σ_j a_j sin(w_j τ).
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl SineSeries {
    pub fn eval(&self, tau: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.frequencies)
            .map(|(a, w)| a * (w * tau).sin())
            .sum()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self
    }

    /// `∫_0^{t_m} k(t_m - s) g(s) ds` for every grid time t_m.
    ///
    /// `g(panel, s)` is evaluated only at interior Gauss nodes of `panel`.
    pub fn convolve<G: FnMut(usize, f64) -> f64>(&self, grid: &TimeGrid, mut g: G) -> Vec<f64> {
        let rule = gl8();
        let times = grid.times();
        let h = grid.step();
        let terms = self.frequencies.len();
        let mut cos_acc = vec![0.0; terms];
        let mut sin_acc = vec![0.0; terms];
        let mut out = Vec::with_capacity(times.len());
        out.push(0.0);
        let mut gvals = vec![0.0; rule.nodes().len()];
        let mut svals = vec![0.0; rule.nodes().len()];
        for panel in 0..times.len() - 1 {
            let mid = times[panel] + 0.5 * h;
            for (q, &x) in rule.nodes().iter().enumerate() {
                let s = mid + 0.5 * h * x;
                svals[q] = s;
                gvals[q] = g(panel, s);
            }
            for j in 0..terms {
                let w = self.frequencies[j];
                let (mut c, mut sn) = (0.0, 0.0);
                for q in 0..gvals.len() {
                    let (sin_ws, cos_ws) = (w * svals[q]).sin_cos();
                    c += rule.weights()[q] * cos_ws * gvals[q];
                    sn += rule.weights()[q] * sin_ws * gvals[q];
                }
                cos_acc[j] += 0.5 * h * c;
                sin_acc[j] += 0.5 * h * sn;
            }
            let t = times[panel + 1];
            let mut v = 0.0;
            for j in 0..terms {
                let (sin_wt, cos_wt) = (self.frequencies[j] * t).sin_cos();
                v += self.amplitudes[j] * (sin_wt * cos_acc[j] - cos_wt * sin_acc[j]);
            }
            out.push(v);
        }
        out
    }
}
