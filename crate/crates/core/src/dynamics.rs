//! Exact evolution of the system coupled to a (possibly truncated) chain.
//!
//! The equations of motion are ÿ = −A·y with y = (x, X_1, …, X_n) and A the
//! extended tridiagonal matrix, so y(t) = cos(√A t) y0 + sin(√A t)/√A ẏ0.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::interp::TimeGrid;
use crate::spectral::{ChainModel, IoModel, OrthogonalMap};

/// Initial data of the system and the bath in bath coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub q0: Vec<f64>,
    pub qdot0: Vec<f64>,
    pub x0: f64,
    pub xdot0: f64,
}

impl InitialState {
    pub fn new(q0: Vec<f64>, qdot0: Vec<f64>, x0: f64, xdot0: f64) -> Result<Self> {
        if q0.len() != qdot0.len() {
            return Err(Error::LengthMismatch {
                what: "bath velocities",
                expected: q0.len(),
                found: qdot0.len(),
            });
        }
        let finite = q0
            .iter()
            .chain(&qdot0)
            .chain([&x0, &xdot0])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite {
                what: "initial state",
            });
        }
        Ok(InitialState {
            q0,
            qdot0,
            x0,
            xdot0,
        })
    }

    /// Everything at rest except the system position.
    pub fn displaced_system(n: usize, x0: f64) -> Self {
        InitialState {
            q0: vec![0.0; n],
            qdot0: vec![0.0; n],
            x0,
            xdot0: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.q0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q0.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        InitialState {
            q0: self.q0.iter().map(|v| v * factor).collect(),
            qdot0: self.qdot0.iter().map(|v| v * factor).collect(),
            x0: self.x0 * factor,
            xdot0: self.xdot0 * factor,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.q0.len() != n {
            return Err(Error::LengthMismatch {
                what: "initial bath state",
                expected: n,
                found: self.q0.len(),
            });
        }
        Ok(())
    }

    /// Extended vectors (x, X_1..X_N) and their velocities, X = O·q.
    pub fn chain_vectors(&self, map: &OrthogonalMap) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(map.len())?;
        let mut y0 = vec![self.x0];
        y0.extend(map.to_chain(&self.q0));
        let mut v0 = vec![self.xdot0];
        v0.extend(map.to_chain(&self.qdot0));
        Ok((y0, v0))
    }

    /// Extended vectors (x, q_1..q_N) for the independent-oscillator picture.
    pub fn bath_vectors(&self) -> (Vec<f64>, Vec<f64>) {
        let mut y0 = vec![self.x0];
        y0.extend(&self.q0);
        let mut v0 = vec![self.xdot0];
        v0.extend(&self.qdot0);
        (y0, v0)
    }
}

/// Symmetric tridiagonal matrix stored by its diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            a[(j, j)] = self.diag[j];
        }
        for (j, &o) in self.off.iter().enumerate() {
            a[(j, j + 1)] = o;
            a[(j + 1, j)] = o;
        }
        a
    }

    /// Row-vector product r·A.
    fn left_mul(&self, r: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|j| {
                let mut v = r[j] * self.diag[j];
                if j > 0 {
                    v += r[j - 1] * self.off[j - 1];
                }
                if j + 1 < n {
                    v += r[j + 1] * self.off[j];
                }
                v
            })
            .collect()
    }

    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let ay = self.left_mul(y);
        y.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }
}

/// Extended matrix of the system plus the first `n` chain sites: diagonal
/// (Ω², Ω_1², …, Ω_n²), off-diagonal (−D, −D_1, …, −D_{n−1}).
pub fn assemble_extended_matrix(chain: &ChainModel, n: usize) -> Result<SymTridiagonal> {
    if n > chain.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: chain.len(),
        });
    }
    let diag = (0..=n).map(|l| chain.frequency(l).powi(2)).collect();
    let off = (0..n).map(|l| -chain.coupling(l)).collect();
    Ok(SymTridiagonal { diag, off })
}

/// Extended matrix of the independent-oscillator picture:
/// [[Ω², −cᵀ], [−c, diag(ω²)]].
pub fn io_extended_matrix(io: &IoModel) -> DMatrix<f64> {
    let n = io.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a[(0, 0)] = io.system_frequency().powi(2);
    for k in 0..n {
        a[(k + 1, k + 1)] = io.omega()[k].powi(2);
        a[(0, k + 1)] = -io.couplings()[k];
        a[(k + 1, 0)] = -io.couplings()[k];
    }
    a
}

/// Sampled system and chain coordinates. Coordinate 0 is the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    /// System position x(t).
    pub fn x(&self) -> &[f64] {
        &self.positions[0]
    }

    pub fn xdot(&self) -> &[f64] {
        &self.velocities[0]
    }

    /// Number of chain coordinates carried, n.
    pub fn modes(&self) -> usize {
        self.positions.len() - 1
    }

    /// Coordinate `i` of the extended vector (0 = system, i ≥ 1 = X_i).
    pub fn coordinate(&self, i: usize) -> Option<&[f64]> {
        self.positions.get(i).map(Vec::as_slice)
    }

    pub fn velocity(&self, i: usize) -> Option<&[f64]> {
        self.velocities.get(i).map(Vec::as_slice)
    }

    /// All positions and velocities at sample `m`.
    pub fn state_at(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.positions.iter().map(|p| p[m]).collect(),
            self.velocities.iter().map(|v| v[m]).collect(),
        )
    }
}

/// Spectral propagator of ÿ = −A·y for a symmetric positive definite A.
#[derive(Debug, Clone)]
pub struct Propagator {
    vectors: DMatrix<f64>,
    freqs: Vec<f64>,
}

impl Propagator {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                what: format!("matrix must be square, got {}x{}", a.nrows(), a.ncols()),
            });
        }
        let eig = SymmetricEigen::new(a.clone());
        let mut freqs = Vec::with_capacity(a.nrows());
        for &l in eig.eigenvalues.iter() {
            if !(l > 0.0) {
                return Err(Error::UnstableMode { eigenvalue: l });
            }
            freqs.push(l.sqrt());
        }
        Ok(Propagator {
            vectors: eig.eigenvectors,
            freqs,
        })
    }

    pub fn dim(&self) -> usize {
        self.freqs.len()
    }

    /// Normal-mode frequencies √λ_i.
    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// Evolves (y0, ẏ0) to every grid time.
    pub fn evolve(&self, y0: &[f64], v0: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
        let n = self.dim();
        if y0.len() != n || v0.len() != n {
            return Err(Error::DimensionMismatch {
                what: format!("state has {} entries, matrix dimension is {n}", y0.len()),
            });
        }
        let vt = self.vectors.transpose();
        let z0 = &vt * DVector::from_column_slice(y0);
        let zd0 = &vt * DVector::from_column_slice(v0);
        let m = grid.len();
        let mut positions = vec![vec![0.0; m]; n];
        let mut velocities = vec![vec![0.0; m]; n];
        let mut z = DVector::zeros(n);
        let mut zd = DVector::zeros(n);
        for (s, &t) in grid.times().iter().enumerate() {
            if t == 0.0 {
                for i in 0..n {
                    positions[i][s] = y0[i];
                    velocities[i][s] = v0[i];
                }
                continue;
            }
            for i in 0..n {
                let w = self.freqs[i];
                let (sn, cs) = (w * t).sin_cos();
                z[i] = z0[i] * cs + zd0[i] * sn / w;
                zd[i] = -z0[i] * w * sn + zd0[i] * cs;
            }
            let y = &self.vectors * &z;
            let yd = &self.vectors * &zd;
            for i in 0..n {
                positions[i][s] = y[i];
                velocities[i][s] = yd[i];
            }
        }
        Ok(Trajectory {
            grid: grid.clone(),
            positions,
            velocities,
        })
    }

    /// Row vectors e_0ᵀ cos(√A t) and e_0ᵀ sin(√A t)/√A.
    fn first_rows(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut pos = vec![0.0; n];
        let mut vel = vec![0.0; n];
        for i in 0..n {
            let w = self.freqs[i];
            let (sn, cs) = (w * t).sin_cos();
            let e0 = self.vectors[(0, i)];
            for j in 0..n {
                pos[j] += e0 * cs * self.vectors[(j, i)];
                vel[j] += e0 * sn / w * self.vectors[(j, i)];
            }
        }
        (pos, vel)
    }
}

/// Exact trajectory of ÿ = −A·y.
pub fn evolve_exact(
    a: &DMatrix<f64>,
    y0: &[f64],
    v0: &[f64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    Propagator::new(a)?.evolve(y0, v0, grid)
}

/// Trajectory of the system with the chain cut after site `n` (D_n = 0).
pub fn evolve_truncated(
    chain: &ChainModel,
    n: usize,
    init: &InitialState,
    map: &OrthogonalMap,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let a = assemble_extended_matrix(chain, n)?;
    let (y0, v0) = init.chain_vectors(map)?;
    evolve_exact(&a.to_dense(), &y0[..=n], &v0[..=n], grid)
}

/// Trajectory of the full chain, identical to `evolve_truncated` with n = N.
pub fn evolve_full(
    chain: &ChainModel,
    init: &InitialState,
    map: &OrthogonalMap,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    evolve_truncated(chain, chain.len(), init, map, grid)
}

/// Trajectory of the independent-oscillator picture, coordinates (x, q_1..q_N).
pub fn evolve_io(io: &IoModel, init: &InitialState, grid: &TimeGrid) -> Result<Trajectory> {
    init.check_len(io.len())?;
    let (y0, v0) = init.bath_vectors();
    evolve_exact(&io_extended_matrix(io), &y0, &v0, grid)
}

/// f_i(t) = X_i(0) cos(Ω_i t) + Ẋ_i(0) sin(Ω_i t)/Ω_i.
pub fn free_mode_evolution(omega: f64, x0: f64, v0: f64, t: f64) -> f64 {
    let (sn, cs) = (omega * t).sin_cos();
    x0 * cs + v0 * sn / omega
}

/// Total energy ½|ẏ|² + ½ yᵀA y.
pub fn energy(a: &SymTridiagonal, y: &[f64], v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>() + 0.5 * a.quadratic_form(y)
}

/// Largest t·√ρ(A) for which the series route is used.
const SERIES_LIMIT: f64 = 1.0;
const MAX_SERIES_TERMS: usize = 80;

/// Linear response of the truncation error x(t) − x_(n)(t) to the initial data.
///
/// For small t the difference of the two cos(√A t) / sin(√A t)/√A series is
/// summed directly; its first n+1 terms vanish identically, so no cancellation
/// between two O(1) trajectories occurs. Larger t fall back to differencing the
/// two spectral propagators.
#[derive(Debug, Clone)]
pub struct TruncationResponse {
    n: usize,
    dim: usize,
    // d_k = e_0ᵀ(A^k − A_n^k) for k = n+1, n+2, …
    diffs: Vec<Vec<f64>>,
    spectral_radius: f64,
    full: Propagator,
    truncated: Propagator,
}

impl TruncationResponse {
    pub fn new(chain: &ChainModel, n: usize) -> Result<Self> {
        let big = chain.len();
        let a = assemble_extended_matrix(chain, big)?;
        if n > big {
            return Err(Error::IndexOutOfRange { index: n, max: big });
        }
        let mut a_n = a.clone();
        if n < big {
            a_n.off[n] = 0.0;
        }
        let dim = big + 1;
        // r_k = e_0ᵀ A_n^k and d_k = e_0ᵀ A^k − r_k, with d_{k+1} = d_k A + r_k (A − A_n)
        let mut r = vec![0.0; dim];
        r[0] = 1.0;
        let mut d = vec![0.0; dim];
        let mut diffs = Vec::new();
        for k in 0..n + MAX_SERIES_TERMS {
            let mut next_d = a.left_mul(&d);
            if n < big {
                next_d[n + 1] += r[n] * a.off[n];
            }
            r = a_n.left_mul(&r);
            d = next_d;
            if k + 1 > n {
                diffs.push(d.clone());
            }
        }
        let full = Propagator::new(&a.to_dense())?;
        let truncated = Propagator::new(&a_n.to_dense())?;
        let spectral_radius = full
            .frequencies()
            .iter()
            .fold(0.0, |m: f64, w| m.max(w * w));
        Ok(TruncationResponse {
            n,
            dim,
            diffs,
            spectral_radius,
            full,
            truncated,
        })
    }

    /// Row vectors g, h with x(t) − x_(n)(t) = g·y0 + h·ẏ0 in chain coordinates.
    pub fn rows(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        if t * self.spectral_radius.sqrt() <= SERIES_LIMIT {
            self.series_rows(t)
        } else {
            let (pf, vf) = self.full.first_rows(t);
            let (pt, vt) = self.truncated.first_rows(t);
            let g = pf.iter().zip(&pt).map(|(a, b)| a - b).collect();
            let h = vf.iter().zip(&vt).map(|(a, b)| a - b).collect();
            (g, h)
        }
    }

    fn series_rows(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let k0 = self.n + 1;
        // cos weights (−1)^k t^{2k}/(2k)!, sin weights (−1)^k t^{2k+1}/(2k+1)!
        let mut wc = 1.0;
        for p in 1..=2 * k0 {
            wc *= t / p as f64;
        }
        if k0 % 2 == 1 {
            wc = -wc;
        }
        let mut ws = wc * t / (2 * k0 + 1) as f64;
        let mut g = vec![0.0; self.dim];
        let mut h = vec![0.0; self.dim];
        // size of the next term relative to the first, with |d_k| ≲ ρ^k
        let mut rel = 1.0;
        for (j, d) in self.diffs.iter().enumerate() {
            for i in 0..self.dim {
                g[i] += wc * d[i];
                h[i] += ws * d[i];
            }
            let k = (k0 + j) as f64;
            let step = t * t / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
            wc *= -step;
            ws *= -t * t / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            rel *= step * self.spectral_radius;
            if rel < 1e-18 {
                break;
            }
        }
        (g, h)
    }

    /// x(t) − x_(n)(t) for chain-coordinate initial vectors.
    pub fn epsilon(&self, t: f64, y0: &[f64], v0: &[f64]) -> f64 {
        let (g, h) = self.rows(t);
        g.iter().zip(y0).map(|(a, b)| a * b).sum::<f64>()
            + h.iter().zip(v0).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Response rows with respect to the bath data (q, q̇); the system data are excluded.
    pub fn bath_rows(&self, t: f64, map: &OrthogonalMap) -> (Vec<f64>, Vec<f64>) {
        let (g, h) = self.rows(t);
        (map.to_bath(&g[1..]), map.to_bath(&h[1..]))
    }
}
