//! Finite-β integrators.

mod linalg;
mod log_diffusion;
mod ma_flow;
mod viscosity;

pub use log_diffusion::{advance_log_diffusion_2d, step_log_diffusion_2d, LogDensity, LogDiffusionConfig};
pub use ma_flow::{
    advance_nonnormalized, advance_normalized, nonnormalized_time, normalization_shift, normalized_time, trace_bound_constant,
    step_nonnormalized, step_normalized, to_normalized, FlowConfig, FlowState, Scheme,
};
pub use viscosity::{step_linear_viscosity, viscosity_dt_limit, Chart, Hamiltonian, ViscosityStep};
