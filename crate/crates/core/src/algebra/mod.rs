//! The fiber algebra `R[X]/(X² + βX + α)`: pointwise arithmetic, elliptic
//! structures, algebra-valued sections and their Cauchy–Riemann operator.

mod fiber;
mod section;
mod structure;

pub use fiber::{alg_conj, alg_inv, alg_mul, alg_norm, AlgebraElement, Fiber};
pub use section::{
    cr_apply, homogeneity_check, leibniz_residual, leibniz_residual_field, AlgebraSection, CrDecomposition,
    HomogeneityReport,
};
pub use structure::{
    CoefficientJet, EllipticStructure, ObstructionField, SampledFiles, SampledStructure, StructurePartials,
    StructureSource, StructureSpec,
};

/// The obstruction field of a sampled structure.
pub fn obstruction_field(
    structure: &SampledStructure,
    order: crate::numerics::StencilOrder,
) -> crate::error::Result<ObstructionField> {
    structure.obstruction_field(order)
}
