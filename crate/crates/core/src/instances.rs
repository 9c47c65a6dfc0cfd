//! Canonical bath families: deterministic spectra and a seeded random family.

use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral::IoModel;

/// Coupling as a function of the bath frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingLaw {
    /// c_k = value.
    Constant(f64),
    /// c_k = scale · ω_k^exponent.
    Power { scale: f64, exponent: f64 },
}

impl CouplingLaw {
    pub fn coupling(&self, omega: f64) -> f64 {
        match *self {
            CouplingLaw::Constant(c) => c,
            CouplingLaw::Power { scale, exponent } => scale * omega.powf(exponent),
        }
    }
}

/// ω_k = ω_min + (k−1)Δω for k = 1..=n.
pub fn linear_spectrum(n: usize, omega_min: f64, step: f64) -> Vec<f64> {
    (0..n).map(|k| omega_min + k as f64 * step).collect()
}

/// ω_k = ω_min · r^{k−1} for k = 1..=n.
pub fn geometric_spectrum(n: usize, omega_min: f64, ratio: f64) -> Vec<f64> {
    (0..n).map(|k| omega_min * ratio.powi(k as i32)).collect()
}

/// Bath with the given spectrum and coupling law.
pub fn model_from_law(omega: Vec<f64>, law: CouplingLaw, omega0: f64) -> Result<IoModel> {
    let c = omega.iter().map(|&w| law.coupling(w)).collect();
    IoModel::new(omega, c, omega0)
}

/// Uniform ranges of the random bath family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFamily {
    pub omega: (f64, f64),
    pub coupling: (f64, f64),
    pub system: (f64, f64),
    /// Draws are kept only if Ω² > margin · Σ c_k²/ω_k².
    pub stability_margin: f64,
}

impl Default for RandomFamily {
    fn default() -> Self {
        RandomFamily {
            omega: (0.5, 5.0),
            coupling: (0.1, 1.0),
            system: (0.5, 5.0),
            stability_margin: 1.05,
        }
    }
}

const MAX_REJECTIONS: usize = 10_000;

impl RandomFamily {
    /// Draws a bath of `n` modes: sorted uniform frequencies, uniform couplings
    /// and system frequency, redrawn until the model is strictly increasing and stable.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<IoModel> {
        for (what, (lo, hi)) in [
            ("bath frequency range", self.omega),
            ("coupling range", self.coupling),
            ("system frequency range", self.system),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::NonpositiveParameter { what, value: lo });
            }
        }
        if n == 0 {
            return Err(Error::EmptyModel);
        }
        let uniform = |rng: &mut R, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        for _ in 0..MAX_REJECTIONS {
            let mut omega: Vec<f64> = (0..n).map(|_| uniform(rng, self.omega)).collect();
            omega.sort_by(f64::total_cmp);
            let c: Vec<f64> = (0..n).map(|_| uniform(rng, self.coupling)).collect();
            let omega0 = uniform(rng, self.system);
            let Ok(io) = IoModel::new(omega, c, omega0) else {
                continue;
            };
            if omega0 * omega0 > self.stability_margin * io.renormalization() {
                return Ok(io);
            }
        }
        Err(Error::NonpositiveParameter {
            what: "stability margin (no stable draw found)",
            value: self.stability_margin,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spectra() {
        assert_eq!(linear_spectrum(3, 1.0, 0.5), vec![1.0, 1.5, 2.0]);
        assert_eq!(geometric_spectrum(3, 1.0, 2.0), vec![1.0, 2.0, 4.0]);
        let io = model_from_law(
            linear_spectrum(4, 1.0, 1.0),
            CouplingLaw::Power {
                scale: 0.5,
                exponent: 1.0,
            },
            2.0,
        )
        .unwrap();
        assert_eq!(io.couplings(), &[0.5, 1.0, 1.5, 2.0]);
        assert!(model_from_law(vec![1.0], CouplingLaw::Constant(-1.0), 1.0).is_err());
    }

    #[test]
    fn random_family_is_stable_and_seeded() {
        let fam = RandomFamily::default();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 4, 16] {
            let x = fam.sample(n, &mut a).unwrap();
            assert_eq!(x, fam.sample(n, &mut b).unwrap());
            assert!(x.is_stable());
            assert!(x.omega().iter().all(|w| (0.5..=5.0).contains(w)));
        }
        assert!(fam.sample(0, &mut a).is_err());
    }
}
