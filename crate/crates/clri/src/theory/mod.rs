//! Deterministic CLRI error dynamics: the difference equations, their
//! decomposition, and fixed-point analysis.

mod dynamics;
mod step;
mod types;

pub use dynamics::{
    coupled_step, coupled_trajectory, error_surface, fixed_point, vector_field, ErrorSurface,
    VectorField, DEFAULT_MAX_ITERATIONS, DEFAULT_RESOLUTION, DEFAULT_TOLERANCE,
};
pub use step::{
    decompose, expected_change_prob, expected_volatility, step_general, step_line, step_matching,
    step_simplified, Line,
};
pub use types::{
    AgentSpec, CouplingModel, ErrorState, FixedPointKind, FixedPointResult, ImpactMatrix,
    LearningParams, SystemSpec, Trajectory,
};
