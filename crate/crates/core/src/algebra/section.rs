use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::fiber::AlgebraElement;
use super::structure::SampledStructure;
use crate::error::{Error, Result};
use crate::numerics::{partial_x, partial_y, Norms, RealGridField, StencilOrder};
use crate::spectral::{lambda_from_structure, rigidity_tolerance};

/// An algebra-valued field `W = U + V·i` over a sampled structure.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraSection {
    u: RealGridField,
    v: RealGridField,
    structure: Arc<SampledStructure>,
}

impl AlgebraSection {
    /// The section is valid where `u`, `v` and the structure all are.
    pub fn new(u: RealGridField, v: RealGridField, structure: Arc<SampledStructure>) -> Result<Self> {
        u.check_same_grid(structure.spec())?;
        v.check_same_grid(structure.spec())?;
        let mask: Vec<bool> = (0..u.values().len())
            .map(|k| u.mask()[k] && v.mask()[k] && structure.mask()[k])
            .collect();
        Ok(Self {
            u: u.restrict(&mask)?,
            v: v.restrict(&mask)?,
            structure,
        })
    }

    pub fn from_fn(structure: Arc<SampledStructure>, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let spec = *structure.spec();
        let u = RealGridField::from_fn(spec, |x, y| f(x, y).0);
        let v = RealGridField::from_fn(spec, |x, y| f(x, y).1);
        Self::new(u, v, structure)
    }

    pub fn u(&self) -> &RealGridField {
        &self.u
    }

    pub fn v(&self) -> &RealGridField {
        &self.v
    }

    pub fn structure(&self) -> &Arc<SampledStructure> {
        &self.structure
    }

    pub fn element(&self, k: usize) -> AlgebraElement {
        AlgebraElement::new(self.u.values()[k], self.v.values()[k])
    }

    fn check_structure(&self, other: &AlgebraSection) -> Result<()> {
        if Arc::ptr_eq(&self.structure, &other.structure) || self.structure == other.structure {
            Ok(())
        } else {
            Err(Error::StructureMismatch("sections live over different structures".into()))
        }
    }

    /// Pointwise product in the fibers.
    pub fn mul(&self, other: &AlgebraSection) -> Result<AlgebraSection> {
        self.check_structure(other)?;
        self.combine(&self.u, &self.v, &other.u, &other.v)
    }

    fn combine(&self, u1: &RealGridField, v1: &RealGridField, u2: &RealGridField, v2: &RealGridField) -> Result<Self> {
        let spec = *self.structure.spec();
        let mut u = Vec::with_capacity(spec.len());
        let mut v = Vec::with_capacity(spec.len());
        let mut mask = Vec::with_capacity(spec.len());
        for k in 0..spec.len() {
            let fiber = self.structure.fiber(k);
            let valid = fiber.is_some() && u1.mask()[k] && v1.mask()[k] && u2.mask()[k] && v2.mask()[k];
            mask.push(valid);
            if !valid {
                u.push(0.0);
                v.push(0.0);
                continue;
            }
            let p = fiber.expect("valid").mul(
                AlgebraElement::new(u1.values()[k], v1.values()[k]),
                AlgebraElement::new(u2.values()[k], v2.values()[k]),
            );
            u.push(p.u);
            v.push(p.v);
        }
        Ok(Self {
            u: RealGridField::new(spec, u, mask.clone())?,
            v: RealGridField::new(spec, v, mask)?,
            structure: Arc::clone(&self.structure),
        })
    }
}

/// The two real components of `2∂_z̄W`, split into the principal part and
/// the zeroth-order `V·G` part.
#[derive(Debug, Clone, PartialEq)]
pub struct CrDecomposition {
    /// `U_x − αV_y`
    pub principal_u: RealGridField,
    /// `V_x + U_y − βV_y`
    pub principal_v: RealGridField,
    /// `V·G₀`
    pub vg_u: RealGridField,
    /// `V·G₁`
    pub vg_v: RealGridField,
}

impl CrDecomposition {
    /// Components `(P, Q)` of `2∂_z̄W = P + Q·i`.
    pub fn total(&self) -> Result<(RealGridField, RealGridField)> {
        Ok((
            self.principal_u.zip_map(&self.vg_u, |a, b| a + b)?,
            self.principal_v.zip_map(&self.vg_v, |a, b| a + b)?,
        ))
    }

    pub fn as_section(&self, structure: Arc<SampledStructure>) -> Result<AlgebraSection> {
        let (p, q) = self.total()?;
        AlgebraSection::new(p, q, structure)
    }
}

/// `2∂_z̄W = (∂x + i∂y)W` including the derivatives of the moving generator.
pub fn cr_apply(w: &AlgebraSection, order: StencilOrder) -> Result<CrDecomposition> {
    let s = w.structure();
    let g = s.obstruction_field(order)?;
    let (ux, uy) = (partial_x(w.u(), order)?, partial_y(w.u(), order)?);
    let (vx, vy) = (partial_x(w.v(), order)?, partial_y(w.v(), order)?);
    let alpha_vy = s.alpha().zip_map(&vy, |a, d| a * d)?;
    let beta_vy = s.beta().zip_map(&vy, |b, d| b * d)?;
    Ok(CrDecomposition {
        principal_u: ux.zip_map(&alpha_vy, |a, b| a - b)?,
        principal_v: vx.zip_map(&uy, |a, b| a + b)?.zip_map(&beta_vy, |a, b| a - b)?,
        vg_u: w.v().zip_map(&g.g0, |v, g| v * g)?,
        vg_v: w.v().zip_map(&g.g1, |v, g| v * g)?,
    })
}

/// Max and RMS over the interior of [`leibniz_residual_field`].
pub fn leibniz_residual(w: &AlgebraSection, t: &AlgebraSection, order: StencilOrder) -> Result<Norms> {
    leibniz_residual_field(w, t, order)?.norms(0)
}

/// `√N` of `∂_z̄(WT) − (∂_z̄W)T − W(∂_z̄T)` at each interior point.
pub fn leibniz_residual_field(w: &AlgebraSection, t: &AlgebraSection, order: StencilOrder) -> Result<RealGridField> {
    w.check_structure(t)?;
    let s = Arc::clone(w.structure());
    let lhs = cr_apply(&w.mul(t)?, order)?.as_section(Arc::clone(&s))?;
    let dw_t = cr_apply(w, order)?.as_section(Arc::clone(&s))?.mul(t)?;
    let w_dt = w.mul(&cr_apply(t, order)?.as_section(Arc::clone(&s))?)?;
    let spec = *s.spec();
    let mut out = Vec::with_capacity(spec.len());
    let mut mask = Vec::with_capacity(spec.len());
    for k in 0..spec.len() {
        let valid = lhs.u.mask()[k] && dw_t.u.mask()[k] && w_dt.u.mask()[k];
        mask.push(valid);
        if !valid {
            out.push(0.0);
            continue;
        }
        let d = AlgebraElement::new(
            lhs.u.values()[k] - dw_t.u.values()[k] - w_dt.u.values()[k],
            lhs.v.values()[k] - dw_t.v.values()[k] - w_dt.v.values()[k],
        );
        out.push(s.fiber(k).expect("valid").norm(d).max(0.0).sqrt());
    }
    RealGridField::new(spec, out, mask)
}

/// Whether the zeroth-order part of the CR operator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    /// max of `√(G₀² + G₁²)`
    pub max_g: f64,
    /// max of `|G₀ + G₁λ|`
    pub max_g_lambda: f64,
    /// max of `|G₀ + G₁λ| / (Im λ)²`, comparable with the transport defect
    pub max_normalized: f64,
    pub tolerance: f64,
    pub rigid: bool,
}

pub fn homogeneity_check(structure: &SampledStructure, order: StencilOrder) -> Result<HomogeneityReport> {
    let g = structure.obstruction_field(order)?;
    let lam = lambda_from_structure(structure)?;
    let spec = *structure.spec();
    let (mut max_g, mut max_gl, mut max_n) = (0.0f64, 0.0f64, 0.0f64);
    let region = crate::numerics::erode(g.g0.mask(), &spec, 0);
    let mut any = false;
    for (k, &m) in region.iter().enumerate() {
        if !m || !lam.lambda().mask()[k] {
            continue;
        }
        any = true;
        let (g0, g1) = (g.g0.values()[k], g.g1.values()[k]);
        let l = lam.lambda().values()[k];
        let gl = (l * g1 + g0).norm();
        max_g = max_g.max(g0.hypot(g1));
        max_gl = max_gl.max(gl);
        max_n = max_n.max(gl / (l.im * l.im));
    }
    if !any {
        return Err(Error::EmptyRegion("no interior point for the obstruction".into()));
    }
    let tolerance = rigidity_tolerance(&spec);
    Ok(HomogeneityReport {
        max_g,
        max_g_lambda: max_gl,
        max_normalized: max_n,
        tolerance,
        rigid: max_n < tolerance,
    })
}
