//! Reduced description of the system: source terms, the nested-kernel
//! identity, and the closed and numerical solutions of the Volterra equation
//! x(t) = F(t) + λ ∫_0^t K_1(t−s) x(s) ds with λ = D²/(ΩΩ_1).

use crate::convolution::SineSeries;
use crate::dynamics::assemble_extended_matrix;
use crate::dynamics::{evolve_full, InitialState, Propagator, Trajectory};
use crate::error::{Error, Result};
use crate::interp::{hermite, lagrange_cubic, TimeGrid};
use crate::kernels::{kernel_closed_form, KernelRep};
use crate::spectral::{ChainModel, OrthogonalMap};

/// Relative Δ below which the two resolvent frequencies are taken to coincide.
pub const DEGENERATE_DELTA: f64 = 1e-12;

/// Interpolation error allowed on sampled trajectories, relative to max |X|.
pub const GRID_TOLERANCE: f64 = 1e-7;

/// Largest h·ω used by [`reconstruct_system`] on its internal grid.
pub const OVERSAMPLED_PHASE_STEP: f64 = 0.02;

/// Resolvent frequencies of the n = 1 Volterra equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraParams {
    pub mu1: f64,
    pub mu2: f64,
    pub delta: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub d0: f64,
}

impl VolterraParams {
    pub fn from_chain(chain: &ChainModel) -> Result<Self> {
        mu_delta(
            chain.system_frequency(),
            chain.frequency(1),
            chain.system_coupling(),
        )
    }

    /// λ = D²/(ΩΩ_1).
    pub fn prefactor(&self) -> f64 {
        self.d0 * self.d0 / (self.omega0 * self.omega1)
    }

    /// R(τ) = D²/(μ_1μ_2(μ_2²−μ_1²)) · (μ_2 sin μ_1τ − μ_1 sin μ_2τ).
    pub fn resolvent(&self) -> SineSeries {
        let c =
            self.d0 * self.d0 / (self.mu1 * self.mu2 * (self.mu2 * self.mu2 - self.mu1 * self.mu1));
        SineSeries {
            amplitudes: vec![c * self.mu2, -c * self.mu1],
            frequencies: vec![self.mu1, self.mu2],
        }
    }
}

/// μ_{1,2}² = (Ω² + Ω_1² ± √Δ)/2 with Δ = (Ω² − Ω_1²)² + 4D², the eigenvalues of
/// [[Ω², −D], [−D, Ω_1²]].
pub fn mu_delta(omega0: f64, omega1: f64, d0: f64) -> Result<VolterraParams> {
    for (what, v) in [
        ("system frequency", omega0),
        ("first chain frequency", omega1),
    ] {
        if !(v > 0.0) {
            return Err(Error::NonpositiveParameter { what, value: v });
        }
    }
    if !(d0 >= 0.0) || !d0.is_finite() {
        return Err(Error::NonpositiveParameter {
            what: "system coupling",
            value: d0,
        });
    }
    let (a, b) = (omega0 * omega0, omega1 * omega1);
    let delta = (a - b).powi(2) + 4.0 * d0 * d0;
    let mu1_sq = 0.5 * (a + b + delta.sqrt());
    // product of the roots is the determinant, which avoids cancellation in μ_2²
    let mu2_sq = (a * b - d0 * d0) / mu1_sq;
    if !(mu2_sq > 0.0) {
        return Err(Error::ComplexResolvent { mu2_sq });
    }
    if delta < DEGENERATE_DELTA * (a + b).powi(2) {
        return Err(Error::DegenerateResolvent { delta });
    }
    Ok(VolterraParams {
        mu1: mu1_sq.sqrt(),
        mu2: mu2_sq.sqrt(),
        delta,
        omega0,
        omega1,
        d0,
    })
}

/// x = F + R ∗ F with F interpolated by local cubics between samples.
pub fn solve_volterra_closed(
    params: &VolterraParams,
    f: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    check_samples(f, grid)?;
    let conv = params
        .resolvent()
        .convolve(grid, |panel, s| lagrange_cubic(grid, f, panel, s));
    Ok(f.iter().zip(&conv).map(|(a, b)| a + b).collect())
}

/// Trapezoidal marching for x = F + λ K_1 ∗ x. K_1(0) = 0 makes every step explicit.
pub fn solve_volterra_numeric(
    k1: &KernelRep,
    prefactor: f64,
    f: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    check_samples(f, grid)?;
    let h = grid.step();
    let m = grid.len();
    let kernel: Vec<f64> = grid.times().iter().map(|&t| k1.eval(t)).collect();
    let mut x = Vec::with_capacity(m);
    x.push(f[0]);
    for i in 1..m {
        let mut acc = 0.5 * kernel[i] * x[0];
        for j in 1..i {
            acc += kernel[i - j] * x[j];
        }
        x.push(f[i] + prefactor * h * acc);
    }
    Ok(x)
}

fn check_samples(f: &[f64], grid: &TimeGrid) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "sampled source",
            expected: grid.len(),
            found: f.len(),
        });
    }
    Ok(())
}

/// Fails with `GridTooCoarse` when cubic reconstruction of coordinate `i` is
/// expected to miss by more than [`GRID_TOLERANCE`].
pub fn check_resolution(traj: &Trajectory, i: usize) -> Result<()> {
    let x = coordinate(traj, i)?;
    let scale = x.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if scale == 0.0 || x.len() < 5 {
        return Ok(());
    }
    let d4 = x
        .windows(5)
        .map(|w| (w[4] - 4.0 * w[3] + 6.0 * w[2] - 4.0 * w[1] + w[0]).abs())
        .fold(0.0, f64::max);
    let estimate = d4 / 384.0;
    let limit = GRID_TOLERANCE * scale;
    if estimate > limit {
        return Err(Error::GridTooCoarse { estimate, limit });
    }
    Ok(())
}

fn coordinate(traj: &Trajectory, i: usize) -> Result<&[f64]> {
    traj.coordinate(i).ok_or(Error::IndexOutOfRange {
        index: i,
        max: traj.modes(),
    })
}

/// ∫_0^t K(t−s) X_i(s) ds on the trajectory grid, X_i rebuilt by cubic Hermite.
fn convolve_coordinate(kernel: &SineSeries, traj: &Trajectory, i: usize) -> Result<Vec<f64>> {
    check_resolution(traj, i)?;
    let x = coordinate(traj, i)?;
    let v = traj.velocity(i).expect("velocities mirror positions");
    let grid = traj.grid();
    let (times, h) = (grid.times(), grid.step());
    Ok(kernel.convolve(grid, |p, s| {
        hermite(times[p], h, x[p], x[p + 1], v[p], v[p + 1], s)
    }))
}

/// K_i for the chain frequencies Ω_0..Ω_i.
fn chain_kernel(chain: &ChainModel, i: usize) -> Result<KernelRep> {
    let freqs: Vec<f64> = (0..=i).map(|l| chain.frequency(l)).collect();
    kernel_closed_form(&freqs)
}

/// ∏_{l=0}^{i} D_l/Ω_l.
fn ratio_product(chain: &ChainModel, i: usize) -> f64 {
    (0..=i)
        .map(|l| chain.coupling(l) / chain.frequency(l))
        .product()
}

/// (∏_{l=0}^{i−1} D_l) · D_{i−1} / ∏_{l=0}^{i} Ω_l, the weight of ∫K_i X_{i−1}.
fn memory_weight(chain: &ChainModel, i: usize) -> f64 {
    ratio_product(chain, i - 1) * chain.coupling(i - 1) / chain.frequency(i)
}

/// f̃_n: f_0 plus the free chain modes f_1..f_n propagated through K_0..K_{n−1}.
fn tilde_f(
    chain: &ChainModel,
    n: usize,
    y0: &[f64],
    v0: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    let omega = chain.system_frequency();
    let mut out: Vec<f64> = grid
        .times()
        .iter()
        .map(|&t| crate::dynamics::free_mode_evolution(omega, y0[0], v0[0], t))
        .collect();
    for i in 1..=n {
        let w = chain.frequency(i);
        let (xi, vi) = (y0[i], v0[i]);
        if xi == 0.0 && vi == 0.0 {
            continue;
        }
        let kernel = chain_kernel(chain, i - 1)?.sine_series();
        let conv = kernel.convolve(grid, |_, s| {
            crate::dynamics::free_mode_evolution(w, xi, vi, s)
        });
        let c = ratio_product(chain, i - 1);
        for (o, v) in out.iter_mut().zip(&conv) {
            *o += c * v;
        }
    }
    Ok(out)
}

fn check_truncation(chain: &ChainModel, n: usize) -> Result<()> {
    if n > chain.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: chain.len(),
        });
    }
    Ok(())
}

/// Source term F_n(t) = f̃_n(t) + Σ_{i=2}^{n} w_i ∫_0^t K_i(t−s) X_{i−1}(s) ds.
///
/// `traj` supplies X_1..X_{n−1}; for n = N this is the exact x-independent
/// forcing of the Volterra equation.
pub fn source_term(
    chain: &ChainModel,
    n: usize,
    traj: &Trajectory,
    init: &InitialState,
    map: &OrthogonalMap,
) -> Result<Vec<f64>> {
    check_truncation(chain, n)?;
    let (y0, v0) = init.chain_vectors(map)?;
    let mut f = tilde_f(chain, n, &y0, &v0, traj.grid())?;
    for i in 2..=n {
        let conv = convolve_coordinate(&chain_kernel(chain, i)?.sine_series(), traj, i - 1)?;
        let w = memory_weight(chain, i);
        for (o, v) in f.iter_mut().zip(&conv) {
            *o += w * v;
        }
    }
    Ok(f)
}

/// Right side of the nested-kernel identity for x(t) at truncation n:
/// f̃_n + Σ_{i=1}^{n} w_i ∫K_i X_{i−1} + (∏_{l=0}^{n} D_l/Ω_l) ∫K_n X_{n+1},
/// with X_0 = x and every coordinate read from the full trajectory `traj`.
pub fn nested_identity_rhs(
    chain: &ChainModel,
    n: usize,
    traj: &Trajectory,
    init: &InitialState,
    map: &OrthogonalMap,
) -> Result<Vec<f64>> {
    check_truncation(chain, n)?;
    let mut rhs = source_term(chain, n, traj, init, map)?;
    if n >= 1 {
        let conv = convolve_coordinate(&chain_kernel(chain, 1)?.sine_series(), traj, 0)?;
        let w = memory_weight(chain, 1);
        for (o, v) in rhs.iter_mut().zip(&conv) {
            *o += w * v;
        }
    }
    let tail = epsilon1(chain, n, traj)?;
    for (o, v) in rhs.iter_mut().zip(&tail) {
        *o += v;
    }
    Ok(rhs)
}

/// ε_1(n,t) = (∏_{l=0}^{n} D_l/Ω_l) ∫_0^t K_n(t−s) X_{n+1}(s) ds from the full trajectory.
///
/// Zero for n = N, where D_N = 0.
pub fn epsilon1(chain: &ChainModel, n: usize, traj: &Trajectory) -> Result<Vec<f64>> {
    check_truncation(chain, n)?;
    if n == chain.len() {
        return Ok(vec![0.0; traj.grid().len()]);
    }
    let conv = convolve_coordinate(&chain_kernel(chain, n)?.sine_series(), traj, n + 1)?;
    let c = ratio_product(chain, n);
    Ok(conv.into_iter().map(|v| c * v).collect())
}

/// ε_2 = R ∗ ε_1 with R the closed resolvent.
pub fn epsilon2(params: &VolterraParams, eps1: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    let x = solve_volterra_closed(params, eps1, grid)?;
    Ok(x.iter().zip(eps1).map(|(a, b)| a - b).collect())
}

/// Exact and Volterra-reconstructed system trajectories on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub x_exact: Vec<f64>,
    pub x_volterra: Vec<f64>,
    pub source: Vec<f64>,
}

impl Reconstruction {
    pub fn max_error(&self) -> f64 {
        self.x_exact
            .iter()
            .zip(&self.x_volterra)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Rebuilds x(t) from F_N and the closed resolvent, next to the exact x(t).
///
/// Work happens on a refined grid with h·ω ≤ [`OVERSAMPLED_PHASE_STEP`] for the
/// fastest frequency present; results are returned on `grid`.
pub fn reconstruct_system(
    chain: &ChainModel,
    map: &OrthogonalMap,
    init: &InitialState,
    grid: &TimeGrid,
) -> Result<Reconstruction> {
    let params = VolterraParams::from_chain(chain)?;
    let a = assemble_extended_matrix(chain, chain.len())?;
    let fastest = Propagator::new(&a.to_dense())?
        .frequencies()
        .iter()
        .chain(chain.frequencies())
        .chain([&chain.system_frequency(), &params.mu1])
        .fold(0.0, |m: f64, &w| m.max(w));
    let refine = ((grid.step() * fastest / OVERSAMPLED_PHASE_STEP).ceil() as usize).max(1);
    let fine = TimeGrid::uniform(grid.t_max(), (grid.len() - 1) * refine + 1)?;
    let traj = evolve_full(chain, init, map, &fine)?;
    let f = source_term(chain, chain.len(), &traj, init, map)?;
    let x = solve_volterra_closed(&params, &f, &fine)?;
    let pick = |v: &[f64]| (0..grid.len()).map(|m| v[m * refine]).collect::<Vec<f64>>();
    Ok(Reconstruction {
        x_exact: pick(traj.x()),
        x_volterra: pick(&x),
        source: pick(&f),
    })
}
