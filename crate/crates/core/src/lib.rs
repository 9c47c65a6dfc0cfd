//! Maps an independent-oscillator bath onto an equivalent nearest-neighbour
//! chain, evolves the coupled system exactly, rebuilds the system trajectory
//! from nested memory kernels and a Volterra equation, and bounds the error of
//! truncating the chain.
//!
//! ```
//! use chaintrunc_core::{build_io_model, chain_from_io, verify_equivalence};
//!
//! let io = build_io_model(&[1.0, 2.0], &[1.0, 1.0], 1.0).unwrap();
//! let (chain, map) = chain_from_io(&io).unwrap();
//! assert!((chain.couplings()[0] - 1.5).abs() < 1e-12);
//! assert!(verify_equivalence(&io, &chain, &map).unwrap().passed);
//! ```

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod convolution;
mod ddouble;
pub mod dynamics;
pub mod error;
pub mod instances;
pub mod interp;
pub mod kernels;
pub mod quadrature;
pub mod solution;
pub mod spectral;

pub use bounds::{
    bound_deterministic, bound_deterministic_weighted, bound_thermal, bound_time_factor,
    epsilon_empirical, error_report, loglog_slope, min_modes, sample_thermal,
    sample_thermal_stream, thermal_average, ErrorReport, MinModes, ThermalAverage, ThermalState,
    DOMINANCE_SLACK, SAMPLES_PER_TASK,
};
pub use convolution::SineSeries;
pub use dynamics::{
    assemble_extended_matrix, energy, evolve_exact, evolve_full, evolve_io, evolve_truncated,
    free_mode_evolution, io_extended_matrix, InitialState, Propagator, SymTridiagonal, Trajectory,
    TruncationResponse,
};
pub use error::{Error, Result};
pub use instances::{
    geometric_spectrum, linear_spectrum, model_from_law, CouplingLaw, RandomFamily,
};
pub use interp::TimeGrid;
pub use kernels::{
    kernel_closed_form, kernel_deriv_zero, kernel_eval, kernel_quadrature, kernel_taylor,
    KernelRep, NestedQuadrature, TaylorValue,
};
pub use solution::{
    epsilon1, epsilon2, mu_delta, nested_identity_rhs, reconstruct_system, solve_volterra_closed,
    solve_volterra_numeric, source_term, Reconstruction, VolterraParams,
};
pub use spectral::{
    build_io_model, chain_from_io, char_poly_eval, map_row_from_recurrence, verify_equivalence,
    ChainModel, EquivalenceReport, IoModel, OrthogonalMap,
};
