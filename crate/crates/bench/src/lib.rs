//! Shared workloads for the benchmarks, sized like the default `verify` grid.

use ves_core::algebra::EllipticStructure;
use ves_core::burgers::{BurgersOptions, ExprSeed};
use ves_core::canonical::{build_chart, CanonicalChart};
use ves_core::seedlang::Params;
use ves_core::spectral::{lambda_from_structure, SpectralField};
use ves_core::vekua::{sample_expression, VekuaProblem};
use ves_core::{GridSpec, StencilOrder};

pub const ORDER: StencilOrder = StencilOrder::Second;

/// `n × n` points on the default domain.
pub fn grid(n: usize) -> GridSpec {
    GridSpec::new(-0.5, 2.0, -1.0, 1.0, n, n).expect("valid grid")
}

pub fn delta_lambda(delta: f64, grid: &GridSpec) -> SpectralField {
    let st = EllipticStructure::delta_family(delta).expect("δ > 0");
    lambda_from_structure(&st.sample(grid).expect("samples")).expect("elliptic")
}

pub fn exp_seed() -> ExprSeed {
    ExprSeed::new("1i*exp(w)", &Params::new()).expect("valid seed")
}

pub fn burgers_options() -> BurgersOptions {
    BurgersOptions::default()
}

pub fn delta_chart(delta: f64, grid: &GridSpec) -> CanonicalChart {
    build_chart(&delta_lambda(delta, grid), ORDER).expect("chart")
}

pub fn vekua_problem(delta: f64, grid: &GridSpec) -> VekuaProblem {
    let none = Params::new();
    VekuaProblem::new(
        delta_lambda(delta, grid),
        sample_expression("x*y + 1i", &none, grid).expect("A"),
        sample_expression("exp(x - y)", &none, grid).expect("B"),
        sample_expression("x^2", &none, grid).expect("F"),
    )
    .expect("problem")
}
