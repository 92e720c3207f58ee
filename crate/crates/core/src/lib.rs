//! Explicit uniformization of rigid variable elliptic structures.
//!
//! A structure `R[X]/(X² + βX + α)` varying over the plane is described by
//! its spectral parameter `λ = (−β + i√(4α − β²))/2`. When `λ` solves the
//! inviscid Burgers equation `λ_x + λλ_y = 0` the structure is rigid, and
//! `ξ = y − λx` is a canonical coordinate obtained by arithmetic alone. The
//! modules follow that pipeline:
//!
//! - [`numerics`]: grids, masked fields, centred differences, convergence orders
//! - [`seedlang`]: expressions for seeds and coefficients, with dual-number derivatives
//! - [`algebra`]: fiber arithmetic, structures, the CR operator and its obstruction
//! - [`spectral`]: `λ`, the transport map and the rigidity defect
//! - [`poincare`]: the Cayley transform and the self-dilatation equation
//! - [`canonical`]: `ξ`, `Φ`, the Jacobian, inversion and injectivity scanning
//! - [`burgers`]: rigid `λ` from holomorphic seeds via `λ = h(y − λx)`
//! - [`vekua`]: reduction of rigid Vekua equations to standard form
//! - [`verify`]: the identity suite
//! - [`io`]: CSV fields and JSON reports

// `!(a > b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod burgers;
pub mod canonical;
pub mod error;
pub mod io;
pub mod numerics;
pub mod poincare;
pub mod seedlang;
pub mod spectral;
pub mod vekua;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{ComplexGridField, GridSpec, RealGridField, StencilOrder};
