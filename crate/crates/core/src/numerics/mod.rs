//! Grids, centred finite differences and convergence measurement.
//!
//! Every identity check in the crate is measured with these tools. Stencils
//! are centred only; points whose stencil would leave the grid or touch a
//! masked sample are masked out instead of being filled one-sidedly, so each
//! residual is of uniform order across the interior.

mod convergence;
mod diff;
mod grid;

pub use convergence::{
    convergence_order, convergence_study, nested_convergence_study, study_base, ConvergenceReport,
};
pub use diff::{partial_x, partial_y, wirtinger, StencilOrder};
pub use grid::{
    erode, ComplexGridField, FieldValue, GridField, GridSpec, InteriorRegion, Norms, RealGridField,
    MIN_POINTS,
};
