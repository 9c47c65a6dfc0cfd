//! Independent-oscillator baths and their nearest-neighbour chain representation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative size below which a Lanczos coupling is treated as a breakdown.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-12;

/// Tolerance used by [`verify_equivalence`] to flag a report as passing.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

/// Bath of independent oscillators coupled linearly to a system of frequency Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct IoModel {
    omega: Vec<f64>,
    c: Vec<f64>,
    omega0: f64,
}

impl IoModel {
    /// Validates and stores the bath frequencies `omega`, couplings `c` and system frequency.
    pub fn new(omega: Vec<f64>, c: Vec<f64>, omega0: f64) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::EmptyModel);
        }
        if c.len() != omega.len() {
            return Err(Error::LengthMismatch {
                what: "couplings",
                expected: omega.len(),
                found: c.len(),
            });
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                what: "bath frequencies",
            });
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "couplings" });
        }
        if !omega0.is_finite() {
            return Err(Error::NonFinite {
                what: "system frequency",
            });
        }
        if let Some(&w) = omega.iter().find(|&&w| w <= 0.0) {
            return Err(Error::NonpositiveParameter {
                what: "bath frequency",
                value: w,
            });
        }
        for k in 1..omega.len() {
            if omega[k] <= omega[k - 1] {
                return Err(Error::NonincreasingSpectrum {
                    index: k,
                    value: omega[k],
                });
            }
        }
        if let Some(&x) = c.iter().find(|&&x| x <= 0.0) {
            return Err(Error::NonpositiveParameter {
                what: "coupling",
                value: x,
            });
        }
        if omega0 <= 0.0 {
            return Err(Error::NonpositiveParameter {
                what: "system frequency",
                value: omega0,
            });
        }
        Ok(IoModel { omega, c, omega0 })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn couplings(&self) -> &[f64] {
        &self.c
    }

    pub fn system_frequency(&self) -> f64 {
        self.omega0
    }

    /// Number of bath oscillators N.
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Euclidean norm of the coupling vector.
    pub fn coupling_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest frequency in the model, max(Ω, ω_N).
    pub fn max_frequency(&self) -> f64 {
        self.omega0.max(self.omega[self.omega.len() - 1])
    }

    /// Σ c_k²/ω_k², the frequency shift the bath induces on the system.
    pub fn renormalization(&self) -> f64 {
        self.omega
            .iter()
            .zip(&self.c)
            .map(|(w, c)| c * c / (w * w))
            .sum()
    }

    /// True when the coupled system is oscillatory: Ω² > Σ c_k²/ω_k².
    pub fn is_stable(&self) -> bool {
        self.omega0 * self.omega0 > self.renormalization()
    }
}

/// Validating constructor, the free-function spelling of [`IoModel::new`].
pub fn build_io_model(omega: &[f64], c: &[f64], omega0: f64) -> Result<IoModel> {
    IoModel::new(omega.to_vec(), c.to_vec(), omega0)
}

/// Nearest-neighbour chain: frequencies Ω_1..Ω_N, couplings D_1..D_{N-1}, system coupling D.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    omega: Vec<f64>,
    d: Vec<f64>,
    d0: f64,
    omega0: f64,
}

impl ChainModel {
    /// Builds a chain directly from its coefficients.
    pub fn new(omega0: f64, d0: f64, omega: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::EmptyModel);
        }
        if d.len() + 1 != omega.len() {
            return Err(Error::LengthMismatch {
                what: "chain couplings",
                expected: omega.len() - 1,
                found: d.len(),
            });
        }
        if omega
            .iter()
            .chain(&d)
            .chain([&d0, &omega0])
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite {
                what: "chain coefficients",
            });
        }
        if let Some(&v) = omega.iter().find(|&&v| v <= 0.0) {
            return Err(Error::NonpositiveParameter {
                what: "chain frequency",
                value: v,
            });
        }
        if let Some(&v) = d.iter().find(|&&v| v <= 0.0) {
            return Err(Error::NonpositiveParameter {
                what: "chain coupling",
                value: v,
            });
        }
        if d0 <= 0.0 {
            return Err(Error::NonpositiveParameter {
                what: "system coupling",
                value: d0,
            });
        }
        if omega0 <= 0.0 {
            return Err(Error::NonpositiveParameter {
                what: "system frequency",
                value: omega0,
            });
        }
        Ok(ChainModel {
            omega,
            d,
            d0,
            omega0,
        })
    }

    /// Chain length N.
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Ω_1..Ω_N.
    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    /// D_1..D_{N-1}.
    pub fn couplings(&self) -> &[f64] {
        &self.d
    }

    pub fn system_coupling(&self) -> f64 {
        self.d0
    }

    pub fn system_frequency(&self) -> f64 {
        self.omega0
    }

    /// Ω_l with Ω_0 = Ω the system frequency.
    pub fn frequency(&self, l: usize) -> f64 {
        if l == 0 {
            self.omega0
        } else {
            self.omega[l - 1]
        }
    }

    /// D_l with D_0 = D the system coupling and D_N = 0.
    pub fn coupling(&self, l: usize) -> f64 {
        match l {
            0 => self.d0,
            l if l < self.omega.len() => self.d[l - 1],
            _ => 0.0,
        }
    }

    /// The chain's tridiagonal matrix T with diagonal Ω_j² and off-diagonal −D_j.
    pub fn tridiagonal(&self) -> DMatrix<f64> {
        let n = self.omega.len();
        let mut t = DMatrix::zeros(n, n);
        for j in 0..n {
            t[(j, j)] = self.omega[j] * self.omega[j];
            if j + 1 < n {
                t[(j, j + 1)] = -self.d[j];
                t[(j + 1, j)] = -self.d[j];
            }
        }
        t
    }

    /// Characteristic polynomial P_j(λ) of the leading j×j minor of T.
    pub fn char_poly(&self, j: usize, lam: f64) -> Result<f64> {
        if j > self.omega.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                max: self.omega.len(),
            });
        }
        let (mut prev, mut cur) = (0.0, 1.0);
        for m in 0..j {
            let dm = if m == 0 { 0.0 } else { self.d[m - 1] };
            let next = (self.omega[m] * self.omega[m] - lam) * cur - dm * dm * prev;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }
}

/// Free-function spelling of [`ChainModel::char_poly`].
pub fn char_poly_eval(chain: &ChainModel, j: usize, lam: f64) -> Result<f64> {
    chain.char_poly(j, lam)
}

/// Orthogonal map between bath and chain coordinates: X_j = Σ_k O_{jk} q_k.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    o: DMatrix<f64>,
}

impl OrthogonalMap {
    pub fn new(o: DMatrix<f64>) -> Result<Self> {
        if o.nrows() != o.ncols() {
            return Err(Error::DimensionMismatch {
                what: format!("map must be square, got {}x{}", o.nrows(), o.ncols()),
            });
        }
        Ok(OrthogonalMap { o })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.o
    }

    pub fn len(&self) -> usize {
        self.o.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.o.nrows() == 0
    }

    /// Chain coordinates X = O·q.
    pub fn to_chain(&self, q: &[f64]) -> Vec<f64> {
        (&self.o * DVector::from_column_slice(q))
            .as_slice()
            .to_vec()
    }

    /// Bath coordinates q = Oᵀ·X.
    pub fn to_bath(&self, x: &[f64]) -> Vec<f64> {
        (self.o.transpose() * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }
}

/// Solves the inverse eigenvalue problem by Lanczos on diag(ω²) seeded with c/‖c‖.
pub fn chain_from_io(io: &IoModel) -> Result<(ChainModel, OrthogonalMap)> {
    let n = io.len();
    let w2: Vec<f64> = io.omega().iter().map(|w| w * w).collect();
    let scale = w2[n - 1];
    let threshold = BREAKDOWN_THRESHOLD * scale;
    let norm = io.coupling_norm();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n.saturating_sub(1));
    let mut v: Vec<f64> = io.couplings().iter().map(|c| c / norm).collect();
    for j in 0..n {
        let mut w: Vec<f64> = v.iter().zip(&w2).map(|(a, b)| a * b).collect();
        let a = dot(&v, &w);
        alpha.push(a);
        if j + 1 == n {
            basis.push(v);
            break;
        }
        axpy(-a, &v, &mut w);
        if let Some(prev) = basis.last() {
            axpy(-beta[j - 1], prev, &mut w);
        }
        basis.push(v);
        // two passes of classical Gram–Schmidt keep the basis orthogonal to round-off
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b, &w);
                axpy(-proj, b, &mut w);
            }
        }
        let b = dot(&w, &w).sqrt();
        if b < threshold {
            return Err(Error::Breakdown {
                step: j + 1,
                coupling: b,
                threshold,
            });
        }
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }

    let mut o = DMatrix::zeros(n, n);
    for (j, row) in basis.iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..n {
            o[(j, k)] = sign * row[k];
        }
    }
    let omega = alpha.iter().map(|a| a.sqrt()).collect();
    let chain = ChainModel::new(io.system_frequency(), norm, omega, beta)?;
    Ok((chain, OrthogonalMap { o }))
}

/// Residuals of the chain/bath equivalence check.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// max |O·Oᵀ − I|.
    pub orthogonality: f64,
    /// max |T − O·diag(ω²)·Oᵀ|.
    pub tridiagonal_residual: f64,
    /// max_k |λ_k(T) − ω_k²| / ω_k².
    pub eigenvalue_mismatch: f64,
    /// max |O_{1k} − c_k/‖c‖|.
    pub first_row_residual: f64,
    pub passed: bool,
}

/// Checks T = O·diag(ω²)·Oᵀ, orthogonality of O and the spectrum of T.
pub fn verify_equivalence(
    io: &IoModel,
    chain: &ChainModel,
    map: &OrthogonalMap,
) -> Result<EquivalenceReport> {
    let n = io.len();
    if chain.len() != n || map.len() != n {
        return Err(Error::DimensionMismatch {
            what: format!(
                "bath has {n} modes, chain has {}, map is {}x{}",
                chain.len(),
                map.len(),
                map.len()
            ),
        });
    }
    let o = map.matrix();
    let w2 = DVector::from_iterator(n, io.omega().iter().map(|w| w * w));
    let orthogonality = max_abs(&(o * o.transpose() - DMatrix::identity(n, n)));
    let t = chain.tridiagonal();
    let tridiagonal_residual = max_abs(&(&t - o * DMatrix::from_diagonal(&w2) * o.transpose()));

    let mut eig = SymmetricEigen::new(t).eigenvalues.as_slice().to_vec();
    eig.sort_by(f64::total_cmp);
    let eigenvalue_mismatch = eig
        .iter()
        .zip(w2.iter())
        .map(|(l, w)| (l - w).abs() / w)
        .fold(0.0, f64::max);

    let norm = io.coupling_norm();
    let first_row_residual = (0..n)
        .map(|k| (o[(0, k)] - io.couplings()[k] / norm).abs())
        .fold(0.0, f64::max);

    let scale = w2.max();
    let passed = orthogonality <= EQUIVALENCE_TOLERANCE
        && tridiagonal_residual <= EQUIVALENCE_TOLERANCE * scale
        && eigenvalue_mismatch <= EQUIVALENCE_TOLERANCE
        && first_row_residual <= EQUIVALENCE_TOLERANCE
        && (chain.system_coupling() - norm).abs() <= EQUIVALENCE_TOLERANCE * norm;
    Ok(EquivalenceReport {
        orthogonality,
        tridiagonal_residual,
        eigenvalue_mismatch,
        first_row_residual,
        passed,
    })
}

/// Row j (1-based) of the map from the polynomial identity
/// O_{jk} = (c_k/‖c‖)·P_{j−1}(ω_k²) / ∏_{l=1}^{j−1} D_l.
pub fn map_row_from_recurrence(io: &IoModel, chain: &ChainModel, j: usize) -> Result<Vec<f64>> {
    if j == 0 || j > chain.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            max: chain.len(),
        });
    }
    let norm = io.coupling_norm();
    let denom: f64 = chain.couplings()[..j - 1].iter().product();
    io.omega()
        .iter()
        .zip(io.couplings())
        .map(|(w, c)| Ok(c / norm * chain.char_poly(j - 1, w * w)? / denom))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
