//! Grid functions and generalized Hölder seminorms and norms.

mod grid;
mod norms;

pub use grid::{sign_sin_pi, Exterior, GridFunction, SNAP};
pub use norms::{
    fd_derivative, interpolation_check, norm_interior, norm_nondim, norm_plain,
    rescale_isometry_check, seminorm, InterpolationReport, IsometryReport, SeminormReport,
    MIN_STEPS,
};
