//! Envelopes: the largest admissible function below an obstacle.
//!
//! Two realizations share [`EnvelopeResult`]: the convex envelope on the
//! torus (exact, via Legendre transforms) and the ω₀-subharmonic envelope
//! on the 2-torus (iterative).

mod convex;
mod obstacle;

pub use convex::{curve_laws, envelope_curve, project_convex, project_obstacle, CurveLaws};
pub use obstacle::{
    complementarity_residual, heleshaw_obstacle, log_barrier, project_psh_2d, project_psh_2d_with,
    smoothed_point_mass, ObstacleProblem2D, PsorConfig, MASS_TOL,
};

use crate::torus::ScalarField;

/// Contact tolerance deciding the coincidence set.
pub const TOL_CONTACT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    /// The envelope (periodic part in the convex realization).
    pub projected: ScalarField,
    /// `true` where the envelope touches the obstacle.
    pub coincidence: Vec<bool>,
    /// Solver residual (complementarity, or MA mass left on Ω).
    pub residual: f64,
    pub iterations: usize,
}

impl EnvelopeResult {
    /// Number of nodes off the coincidence set.
    pub fn free_count(&self) -> usize {
        self.coincidence.iter().filter(|&&c| !c).count()
    }
}
