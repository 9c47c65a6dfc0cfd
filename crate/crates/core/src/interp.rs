//! Interpolants used to reconstruct sampled signals between grid points.

use crate::error::{Error, Result};

/// Uniform time grid starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    step: f64,
}

impl TimeGrid {
    /// `samples` equally spaced points on [0, t_max], both ends included.
    pub fn uniform(t_max: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 samples, got {samples}"
            )));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        let step = t_max / (samples - 1) as f64;
        let times = (0..samples).map(|m| m as f64 * step).collect();
        Ok(TimeGrid { times, step })
    }

    /// Validates an externally supplied grid: starts at 0, uniform, increasing.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 samples".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, starts at {}",
                times[0]
            )));
        }
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::InvalidGrid(
                "grid must be strictly increasing".into(),
            ));
        }
        for (m, &t) in times.iter().enumerate() {
            if (t - m as f64 * step).abs() > 1e-9 * step.max(t.abs()) {
                return Err(Error::InvalidGrid(format!(
                    "grid is not uniform at sample {m}"
                )));
            }
        }
        Ok(TimeGrid {
            times: times.to_vec(),
            step,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Index of the panel [t_j, t_{j+1}] containing `s`, clamped to the grid.
    pub fn panel_of(&self, s: f64) -> usize {
        let j = (s / self.step).floor();
        if j <= 0.0 {
            0
        } else {
            (j as usize).min(self.times.len() - 2)
        }
    }
}

/// Cubic Hermite interpolation on one panel from values and derivatives at its ends.
#[inline]
pub fn hermite(t0: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64, s: f64) -> f64 {
    let u = (s - t0) / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Local cubic Lagrange interpolation of uniformly sampled values.
///
/// On panel j the stencil is samples j-1..=j+2, shifted inward at the grid ends.
pub fn lagrange_cubic(grid: &TimeGrid, values: &[f64], panel: usize, s: f64) -> f64 {
    let n = values.len();
    if n < 4 {
        // linear fallback for tiny grids
        let j = panel.min(n - 2);
        let u = (s - grid.times()[j]) / grid.step();
        return values[j] * (1.0 - u) + values[j + 1] * u;
    }
    let start = panel.saturating_sub(1).min(n - 4);
    let u = (s - grid.times()[start]) / grid.step();
    let (f0, f1, f2, f3) = (
        values[start],
        values[start + 1],
        values[start + 2],
        values[start + 3],
    );
    // nodes at u = 0, 1, 2, 3
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
}

/// Polynomial interpolant through Chebyshev–Lobatto points on [a, b].
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    points: Vec<f64>,
    values: Vec<f64>,
}

impl Chebyshev {
    /// The `degree + 1` Lobatto points on [a, b], ascending.
    pub fn lobatto_points(a: f64, b: f64, degree: usize) -> Vec<f64> {
        let n = degree as f64;
        (0..=degree)
            .map(|j| {
                let x = -(std::f64::consts::PI * j as f64 / n).cos();
                0.5 * (a + b) + 0.5 * (b - a) * x
            })
            .collect()
    }

    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Self {
        let degree = values.len() - 1;
        let points = Self::lobatto_points(a, b, degree);
        Chebyshev {
            a,
            b,
            points,
            values,
        }
    }

    /// Barycentric evaluation (second form).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.points.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            let diff = x - self.points[j];
            if diff == 0.0 {
                return self.values[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                w *= 0.5;
            }
            let c = w / diff;
            num += c * self.values[j];
            den += c;
        }
        num / den
    }

    /// Magnitude of the trailing Chebyshev coefficients, used as a convergence signal.
    pub fn tail_magnitude(&self) -> f64 {
        let n = self.values.len() - 1;
        let coeffs = self.coefficients();
        coeffs[n.saturating_sub(2)..]
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max)
    }

    /// Chebyshev coefficients by the discrete cosine sum on Lobatto points.
    pub fn coefficients(&self) -> Vec<f64> {
        let n = self.values.len() - 1;
        let nf = n as f64;
        // values are stored on ascending points x_j = -cos(pi j / n)
        (0..=n)
            .map(|k| {
                let mut s = 0.0;
                for j in 0..=n {
                    let mut term =
                        self.values[j] * (std::f64::consts::PI * (k * j) as f64 / nf).cos();
                    if j == 0 || j == n {
                        term *= 0.5;
                    }
                    s += term;
                }
                // sign from x_j = -cos: T_k(-y) = (-1)^k T_k(y)
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
                sign * scale * s
            })
            .collect()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Largest node value in magnitude.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}
