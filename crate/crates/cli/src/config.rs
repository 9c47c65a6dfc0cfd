//! JSON run configuration and its resolution into core types.

use std::path::{Path, PathBuf};

use chaintrunc_core::{
    geometric_spectrum, linear_spectrum, model_from_law, sample_thermal_stream, CouplingLaw,
    InitialState, IoModel, RandomFamily, ThermalState, TimeGrid,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Stream of the seed used for thermal initial data; stream 0 draws random models.
pub const INITIAL_STATE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    Constant { value: f64 },
    Power { scale: f64, exponent: f64 },
}

impl From<&CouplingSpec> for CouplingLaw {
    fn from(spec: &CouplingSpec) -> Self {
        match *spec {
            CouplingSpec::Constant { value } => CouplingLaw::Constant(value),
            CouplingSpec::Power { scale, exponent } => CouplingLaw::Power { scale, exponent },
        }
    }
}

/// Bath specification: explicit lists, a parametric spectrum or a random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Explicit {
        omega: Vec<f64>,
        couplings: Vec<f64>,
    },
    Linear {
        modes: usize,
        omega_min: f64,
        step: f64,
        coupling: CouplingSpec,
    },
    Geometric {
        modes: usize,
        omega_min: f64,
        ratio: f64,
        coupling: CouplingSpec,
    },
    /// Uniform draws from [`RandomFamily::default`]; the system frequency is drawn too.
    Random { modes: usize },
}

impl ModelSpec {
    pub fn modes(&self) -> usize {
        match self {
            ModelSpec::Explicit { omega, .. } => omega.len(),
            ModelSpec::Linear { modes, .. }
            | ModelSpec::Geometric { modes, .. }
            | ModelSpec::Random { modes } => *modes,
        }
    }

    /// Same family with a different number of modes.
    pub fn with_modes(&self, n: usize) -> Result<ModelSpec, CliError> {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::Explicit { .. } => {
                return Err(CliError::Validation(
                    "an explicit model cannot be resized along a sweep axis".into(),
                ))
            }
            ModelSpec::Linear { modes, .. }
            | ModelSpec::Geometric { modes, .. }
            | ModelSpec::Random { modes } => *modes = n,
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: f64,
    pub samples: usize,
}

/// Bath initial data: a thermal draw from the seed or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Thermal,
    Explicit {
        q0: Vec<f64>,
        qdot0: Vec<f64>,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        xdot0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub modes: Vec<usize>,
    pub truncations: Vec<usize>,
    pub temperatures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Required unless the model is random.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_frequency: Option<f64>,
    #[serde(default = "default_truncations")]
    pub truncations: Vec<usize>,
    pub grid: GridSpec,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_initial")]
    pub initial: InitialSpec,
    /// Tolerance axis of min-modes.
    #[serde(default = "default_tolerances")]
    pub tolerances: Vec<f64>,
    /// Largest kernel order tabulated by `kernels`; defaults to every chain site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_kernel_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_truncations() -> Vec<usize> {
    vec![1]
}

fn default_temperature() -> f64 {
    1.0
}

fn default_initial() -> InitialSpec {
    InitialSpec::Thermal
}

fn default_tolerances() -> Vec<f64> {
    (0..10).map(|k| 10f64.powi(-1 - k)).collect()
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub samples: Option<usize>,
    pub t_max: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(samples) = o.samples {
            self.grid.samples = samples;
        }
        if let Some(t_max) = o.t_max {
            self.grid.t_max = t_max;
        }
    }

    /// Checks everything that does not need the model itself.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if !(self.grid.t_max > 0.0 && self.grid.t_max.is_finite()) {
            return fail(format!(
                "grid.t_max must be positive, got {}",
                self.grid.t_max
            ));
        }
        if self.grid.samples < 2 {
            return fail(format!(
                "grid.samples must be at least 2, got {}",
                self.grid.samples
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return fail(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.tolerances.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return fail("tolerances must be positive".into());
        }
        match (&self.model, self.system_frequency) {
            (ModelSpec::Random { .. }, Some(_)) => {
                return fail(
                    "system_frequency is drawn for random models and must not be given".into(),
                )
            }
            (ModelSpec::Random { .. }, None) => {}
            (_, None) => return fail("system_frequency is required".into()),
            (_, Some(_)) => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.modes.is_empty()
                || sweep.truncations.is_empty()
                || sweep.temperatures.is_empty()
            {
                return fail("sweep axes must be non-empty".into());
            }
        }
        Ok(())
    }

    pub fn out_path(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| {
            CliError::Validation("no output path (set \"out\" or pass --out)".into())
        })
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::uniform(self.grid.t_max, self.grid.samples)?)
    }

    pub fn thermal(&self) -> Result<ThermalState, CliError> {
        Ok(ThermalState::new(self.temperature)?)
    }

    pub fn build_model(&self) -> Result<IoModel, CliError> {
        build_model(&self.model, self.system_frequency, self.seed)
    }

    /// Initial data for `io`: a thermal draw (system at rest) or the explicit values.
    pub fn initial_state(&self, io: &IoModel, th: &ThermalState) -> Result<InitialState, CliError> {
        match &self.initial {
            InitialSpec::Thermal => Ok(sample_thermal_stream(
                io,
                th,
                self.seed,
                INITIAL_STATE_STREAM,
            )),
            InitialSpec::Explicit {
                q0,
                qdot0,
                x0,
                xdot0,
            } => {
                if q0.len() != io.len() {
                    return Err(CliError::Validation(format!(
                        "initial.q0 has {} entries, model has {} modes",
                        q0.len(),
                        io.len()
                    )));
                }
                Ok(InitialState::new(q0.clone(), qdot0.clone(), *x0, *xdot0)?)
            }
        }
    }
}

/// Builds the bath of `spec`; random models draw from stream 0 of `seed`.
pub fn build_model(
    spec: &ModelSpec,
    system_frequency: Option<f64>,
    seed: u64,
) -> Result<IoModel, CliError> {
    let omega0 = || {
        system_frequency.ok_or_else(|| CliError::Validation("system_frequency is required".into()))
    };
    let io = match spec {
        ModelSpec::Explicit { omega, couplings } => {
            IoModel::new(omega.clone(), couplings.clone(), omega0()?)?
        }
        ModelSpec::Linear {
            modes,
            omega_min,
            step,
            coupling,
        } => model_from_law(
            linear_spectrum(*modes, *omega_min, *step),
            coupling.into(),
            omega0()?,
        )?,
        ModelSpec::Geometric {
            modes,
            omega_min,
            ratio,
            coupling,
        } => model_from_law(
            geometric_spectrum(*modes, *omega_min, *ratio),
            coupling.into(),
            omega0()?,
        )?,
        ModelSpec::Random { modes } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            RandomFamily::default().sample(*modes, &mut rng)?
        }
    };
    Ok(io)
}
