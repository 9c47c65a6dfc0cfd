//! Truncation errors, their deterministic and thermal upper bounds, thermal
//! sampling and the inversion of the bound for the minimal chain length.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dynamics::{InitialState, Trajectory, TruncationResponse};
use crate::error::{Error, Result};
use crate::interp::TimeGrid;
use crate::spectral::{ChainModel, IoModel, OrthogonalMap};

/// Temperature in energy units (k_B absorbed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    kt: f64,
}

impl ThermalState {
    pub fn new(kt: f64) -> Result<Self> {
        if !(kt > 0.0 && kt.is_finite()) {
            return Err(Error::NonpositiveParameter {
                what: "temperature",
                value: kt,
            });
        }
        Ok(ThermalState { kt })
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.kt
    }
}

/// |x(t) − x_(n)(t)| sample by sample.
pub fn epsilon_empirical(full: &Trajectory, truncated: &Trajectory) -> Result<Vec<f64>> {
    if full.grid() != truncated.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(full
        .x()
        .iter()
        .zip(truncated.x())
        .map(|(a, b)| (a - b).abs())
        .collect())
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn ln_cosh(a: f64) -> f64 {
    let a = a.abs();
    a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// Time factor shared by both bounds:
/// t^{2n+2} [cosh(t√S)/(2n+2)! + D² t⁴ cosh(t√(Ω² + Ω_1² + S))/(2n+6)!],
/// S = Σ_{i=0}^{n} Ω_i², evaluated in the log domain.
pub fn bound_time_factor(chain: &ChainModel, n: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let s: f64 = (0..=n.min(chain.len()))
        .map(|i| chain.frequency(i).powi(2))
        .sum();
    let outer = chain.system_frequency().powi(2) + chain.frequency(1).powi(2) + s;
    let p = 2 * n + 2;
    let lt = t.ln();
    let first = p as f64 * lt + ln_cosh(t * s.sqrt()) - ln_factorial(p);
    let d = chain.system_coupling();
    let second =
        (p + 4) as f64 * lt + 2.0 * d.ln() + ln_cosh(t * outer.sqrt()) - ln_factorial(p + 4);
    first.exp() + second.exp()
}

fn check_sizes(io: &IoModel, chain: &ChainModel, n: usize) -> Result<()> {
    if io.len() != chain.len() {
        return Err(Error::DimensionMismatch {
            what: format!("bath has {} modes, chain has {}", io.len(), chain.len()),
        });
    }
    if n > chain.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: chain.len(),
        });
    }
    Ok(())
}

/// |P_n(ω_k²)| for every bath mode.
fn poly_weights(io: &IoModel, chain: &ChainModel, n: usize) -> Result<Vec<f64>> {
    io.omega()
        .iter()
        .map(|w| Ok(chain.char_poly(n, w * w)?.abs()))
        .collect()
}

/// Σ_k |P_n(ω_k²)| (|q_k(0)| + |q̇_k(0)|/ω_k) times the time factor.
pub fn bound_deterministic(
    io: &IoModel,
    chain: &ChainModel,
    n: usize,
    t: f64,
    init: &InitialState,
) -> Result<f64> {
    deterministic(io, chain, n, t, init, false)
}

/// As [`bound_deterministic`] with each bath term weighted by its coupling c_k.
pub fn bound_deterministic_weighted(
    io: &IoModel,
    chain: &ChainModel,
    n: usize,
    t: f64,
    init: &InitialState,
) -> Result<f64> {
    deterministic(io, chain, n, t, init, true)
}

fn deterministic(
    io: &IoModel,
    chain: &ChainModel,
    n: usize,
    t: f64,
    init: &InitialState,
    weighted: bool,
) -> Result<f64> {
    check_sizes(io, chain, n)?;
    if init.len() != io.len() {
        return Err(Error::LengthMismatch {
            what: "initial bath state",
            expected: io.len(),
            found: init.len(),
        });
    }
    let p = poly_weights(io, chain, n)?;
    let mut amp = 0.0;
    for (k, pk) in p.iter().enumerate() {
        let c = if weighted { io.couplings()[k] } else { 1.0 };
        amp += c * pk * (init.q0[k].abs() + init.qdot0[k].abs() / io.omega()[k]);
    }
    if amp == 0.0 {
        return Ok(0.0);
    }
    Ok(amp * bound_time_factor(chain, n, t))
}

/// √(8kT/π) Σ_k |P_n(ω_k²)|/ω_k times the time factor.
pub fn bound_thermal(
    io: &IoModel,
    chain: &ChainModel,
    n: usize,
    t: f64,
    th: &ThermalState,
) -> Result<f64> {
    check_sizes(io, chain, n)?;
    let p = poly_weights(io, chain, n)?;
    let amp: f64 = p.iter().zip(io.omega()).map(|(a, w)| a / w).sum();
    if amp == 0.0 {
        return Ok(0.0);
    }
    Ok((8.0 * th.kt() / std::f64::consts::PI).sqrt() * amp * bound_time_factor(chain, n, t))
}

/// Thermal initial state of the uncoupled bath from the stream `stream` of `seed`:
/// q_k ~ N(0, kT/ω_k²), q̇_k ~ N(0, kT), system at rest at the origin.
pub fn sample_thermal_stream(
    io: &IoModel,
    th: &ThermalState,
    seed: u64,
    stream: u64,
) -> InitialState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    draw_thermal(io, th, &mut rng)
}

/// Thermal sample for `seed`, identical to stream 0 of [`sample_thermal_stream`].
pub fn sample_thermal(io: &IoModel, th: &ThermalState, seed: u64) -> InitialState {
    sample_thermal_stream(io, th, seed, 0)
}

fn draw_thermal(io: &IoModel, th: &ThermalState, rng: &mut ChaCha8Rng) -> InitialState {
    let sd = th.kt().sqrt();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut q0 = Vec::with_capacity(io.len());
    let mut qdot0 = Vec::with_capacity(io.len());
    for &w in io.omega() {
        q0.push(sd / w * unit.sample(rng));
        qdot0.push(sd * unit.sample(rng));
    }
    InitialState {
        q0,
        qdot0,
        x0: 0.0,
        xdot0: 0.0,
    }
}

/// Result of [`min_modes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinModes {
    pub n: usize,
    /// False when no n ≤ N meets the tolerance; `n` is then N.
    pub certified: bool,
}

/// Smallest n with bound_thermal(n, t) ≤ tol, by a linear scan over n = 0..=N.
pub fn min_modes(
    io: &IoModel,
    chain: &ChainModel,
    t: f64,
    tol: f64,
    th: &ThermalState,
) -> Result<MinModes> {
    if !(tol > 0.0) {
        return Err(Error::NonpositiveParameter {
            what: "tolerance",
            value: tol,
        });
    }
    for n in 0..=chain.len() {
        if bound_thermal(io, chain, n, t, th)? <= tol {
            return Ok(MinModes { n, certified: true });
        }
    }
    Ok(MinModes {
        n: chain.len(),
        certified: false,
    })
}

/// Monte-Carlo mean of |x(t) − x_(n)(t)| with its standard error per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalAverage {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: usize,
}

/// Samples per independent random stream in [`thermal_average`].
pub const SAMPLES_PER_TASK: usize = 256;

/// Averages the truncation error over thermal bath states.
///
/// The error is linear in the bath data, so the response rows are computed once
/// per time and each sample costs two dot products. Task `j` draws from stream
/// `j` of `seed`; partial sums are reduced in task order, so the result does not
/// depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn thermal_average(
    io: &IoModel,
    chain: &ChainModel,
    map: &OrthogonalMap,
    n: usize,
    th: &ThermalState,
    grid: &TimeGrid,
    samples: usize,
    seed: u64,
) -> Result<ThermalAverage> {
    check_sizes(io, chain, n)?;
    if samples < 2 {
        return Err(Error::NonpositiveParameter {
            what: "sample count minus one",
            value: samples as f64 - 1.0,
        });
    }
    let response = TruncationResponse::new(chain, n)?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = grid
        .times()
        .iter()
        .map(|&t| response.bath_rows(t, map))
        .collect();
    let tasks = samples.div_ceil(SAMPLES_PER_TASK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..tasks)
        .into_par_iter()
        .map(|task| {
            let count = SAMPLES_PER_TASK.min(samples - task * SAMPLES_PER_TASK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(task as u64);
            let mut sum = vec![0.0; rows.len()];
            let mut sum_sq = vec![0.0; rows.len()];
            for _ in 0..count {
                let s = draw_thermal(io, th, &mut rng);
                for (m, (g, h)) in rows.iter().enumerate() {
                    let e = (dot(g, &s.q0) + dot(h, &s.qdot0)).abs();
                    sum[m] += e;
                    sum_sq[m] += e * e;
                }
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = vec![0.0; rows.len()];
    let mut sum_sq = vec![0.0; rows.len()];
    for (s, s2) in &partials {
        for m in 0..rows.len() {
            sum[m] += s[m];
            sum_sq[m] += s2[m];
        }
    }
    let count = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let std_error = (0..rows.len())
        .map(|m| {
            let var = ((sum_sq[m] - count * mean[m] * mean[m]) / (count - 1.0)).max(0.0);
            (var / count).sqrt()
        })
        .collect();
    Ok(ThermalAverage {
        mean,
        std_error,
        samples,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares slope of ln|y| against ln t.
pub fn loglog_slope(t: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && b.abs() > 0.0)
        .map(|(a, b)| (a.ln(), b.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Absolute slack allowed when comparing a differenced error with its bound.
pub const DOMINANCE_SLACK: f64 = 1e-12;

/// Empirical error and both bounds on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub n: usize,
    pub times: Vec<f64>,
    pub eps_empirical: Vec<f64>,
    pub bound_det: Vec<f64>,
    pub bound_thermal: Vec<f64>,
    /// Log-log slope of the error over t ∈ [1e−3, 1e−2]/max frequency.
    pub slope_smallt: f64,
}

impl ErrorReport {
    /// eps / (bound_det + [`DOMINANCE_SLACK`]) per sample. The slack absorbs the
    /// round-off floor of trajectory differencing where the bound is tiny.
    pub fn ratios(&self) -> Vec<f64> {
        self.eps_empirical
            .iter()
            .zip(&self.bound_det)
            .map(|(e, b)| e / (b + DOMINANCE_SLACK))
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }
}

/// Builds an [`ErrorReport`] from the full and truncated trajectories of `init`.
pub fn error_report(
    io: &IoModel,
    chain: &ChainModel,
    map: &OrthogonalMap,
    n: usize,
    init: &InitialState,
    grid: &TimeGrid,
    th: &ThermalState,
) -> Result<ErrorReport> {
    check_sizes(io, chain, n)?;
    let full = crate::dynamics::evolve_full(chain, init, map, grid)?;
    let trunc = crate::dynamics::evolve_truncated(chain, n, init, map, grid)?;
    let eps = epsilon_empirical(&full, &trunc)?;
    let bound_det = grid
        .times()
        .iter()
        .map(|&t| bound_deterministic(io, chain, n, t, init))
        .collect::<Result<Vec<f64>>>()?;
    let bound_th = grid
        .times()
        .iter()
        .map(|&t| bound_thermal(io, chain, n, t, th))
        .collect::<Result<Vec<f64>>>()?;
    let response = TruncationResponse::new(chain, n)?;
    let (y0, v0) = init.chain_vectors(map)?;
    let scale = 1.0 / io.max_frequency();
    let ts: Vec<f64> = (0..=10)
        .map(|j| 1e-3 * 10f64.powf(j as f64 / 10.0) * scale)
        .collect();
    let es: Vec<f64> = ts.iter().map(|&t| response.epsilon(t, &y0, &v0)).collect();
    Ok(ErrorReport {
        n,
        times: grid.times().to_vec(),
        eps_empirical: eps,
        bound_det,
        bound_thermal: bound_th,
        slope_smallt: loglog_slope(&ts, &es),
    })
}
