//! The disk picture: the Cayley transform `μ = (λ − i)/(λ + i)`, the
//! CR-to-Beltrami identity, the self-dilatation equation and the disk form
//! of the canonical coordinate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{partial_x, partial_y, wirtinger, ComplexGridField, Norms, RealGridField, StencilOrder};
use crate::spectral::{Provenance, SpectralField, RESIDUAL_MARGIN};

/// `|μ|` at or above this is treated as the degenerate boundary circle.
pub const UNIT_DISK_LIMIT: f64 = 1.0 - 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `μ = (λ − i)/(λ + i)`.
pub fn cayley_point(lambda: Complex64) -> Result<Complex64> {
    if !(lambda.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(lambda));
    }
    let mu = (lambda - I) / (lambda + I);
    if !(mu.norm() < UNIT_DISK_LIMIT) {
        return Err(Error::OutsideUnitDisk(mu));
    }
    Ok(mu)
}

/// `λ = i(1 + μ)/(1 − μ)`.
pub fn cayley_inv_point(mu: Complex64) -> Result<Complex64> {
    if !(mu.norm() < UNIT_DISK_LIMIT) {
        return Err(Error::OutsideUnitDisk(mu));
    }
    Ok(I * (1.0 + mu) / (1.0 - mu))
}

/// A Beltrami coefficient with `|μ| < 1` on every valid point.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiField {
    mu: ComplexGridField,
}

impl BeltramiField {
    pub fn new(mu: ComplexGridField) -> Result<Self> {
        for (&m, &valid) in mu.values().iter().zip(mu.mask()) {
            if valid && !(m.norm() < UNIT_DISK_LIMIT) {
                return Err(Error::OutsideUnitDisk(m));
            }
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> &ComplexGridField {
        &self.mu
    }
}

pub fn cayley(lambda: &SpectralField) -> Result<BeltramiField> {
    let l = lambda.lambda();
    let mut values = Vec::with_capacity(l.values().len());
    for (&z, &m) in l.values().iter().zip(l.mask()) {
        values.push(if m { cayley_point(z)? } else { Complex64::default() });
    }
    Ok(BeltramiField {
        mu: ComplexGridField::new(*l.spec(), values, l.mask().to_vec())?,
    })
}

pub fn cayley_inv(mu: &BeltramiField) -> Result<SpectralField> {
    let m = mu.mu();
    let mut values = Vec::with_capacity(m.values().len());
    for (&z, &valid) in m.values().iter().zip(m.mask()) {
        values.push(if valid { cayley_inv_point(z)? } else { Complex64::default() });
    }
    SpectralField::new(
        ComplexGridField::new(*m.spec(), values, m.mask().to_vec())?,
        Provenance::UserSupplied,
    )
}

/// Max of `|(f_x + λf_y) − (1 − iλ)(f_z̄ − μf_z)|`, all derivatives by
/// differences of the same order.
pub fn cr_beltrami_residual(f: &ComplexGridField, lambda: &SpectralField, order: StencilOrder) -> Result<Norms> {
    let l = lambda.lambda();
    f.check_same_grid(l.spec())?;
    let mu = cayley(lambda)?;
    let lhs = l.zip3_map(&partial_x(f, order)?, &partial_y(f, order)?, |l, fx, fy| fx + l * fy)?;
    let (dz, dzbar) = wirtinger(f, order)?;
    let bracket = mu.mu().zip3_map(&dz, &dzbar, |m, dz, dzb| dzb - m * dz)?;
    let rhs = l.zip_map(&bracket, |l, b| (1.0 - I * l) * b)?;
    lhs.zip_map(&rhs, |a, b| a - b)?.norms(0)
}

/// Pointwise `|μ_z̄ − μμ_z|` by Wirtinger differences, with its norms over
/// the interior.
pub fn self_dilatation_residual(mu: &BeltramiField, order: StencilOrder) -> Result<(RealGridField, Norms)> {
    let (dz, dzbar) = wirtinger(mu.mu(), order)?;
    let r = mu.mu().zip3_map(&dz, &dzbar, |m, dz, dzb| (dzb - m * dz).norm())?;
    let norms = r.norms(RESIDUAL_MARGIN)?;
    Ok((r, norms))
}

/// `ξ = −i(z + μz̄)/(1 − μ)`: pointwise arithmetic only.
pub fn xi_disk_form(mu: &BeltramiField) -> Result<ComplexGridField> {
    let mut err = None;
    let xi = mu.mu().map_with_coords(|x, y, m| {
        if !(m.norm() < UNIT_DISK_LIMIT) {
            err.get_or_insert(Error::OutsideUnitDisk(m));
        }
        let z = Complex64::new(x, y);
        -I * (z + m * z.conj()) / (1.0 - m)
    });
    match err {
        Some(e) => Err(e),
        None => Ok(xi),
    }
}
