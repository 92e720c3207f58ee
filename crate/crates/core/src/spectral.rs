//! The transport picture: the spectral parameter `λ`, the transport map
//! `U + Vi ↦ U + Vλ`, and the rigidity defect `λ_x + λλ_y`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{cr_apply, AlgebraSection, SampledStructure, StructurePartials};
use crate::error::{Error, Result};
use crate::numerics::{partial_x, partial_y, ComplexGridField, GridSpec, Norms, RealGridField, StencilOrder};

/// Boundary cells excluded from residual norms.
pub const RESIDUAL_MARGIN: usize = 2;

/// `λ` and its first partials at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LambdaJet {
    pub value: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
}

/// Anything that can evaluate `λ` with partials at arbitrary points.
pub trait LambdaProvider {
    fn lambda_jet(&self, x: f64, y: f64) -> Result<LambdaJet>;
}

/// A constant spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLambda(pub Complex64);

impl LambdaProvider for ConstantLambda {
    fn lambda_jet(&self, x: f64, y: f64) -> Result<LambdaJet> {
        if !(self.0.im > 0.0) {
            return Err(Error::EllipticityViolated { x, y, im: self.0.im });
        }
        Ok(LambdaJet {
            value: self.0,
            ..Default::default()
        })
    }
}

/// Where a sampled `λ` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FromStructure,
    FromBurgers,
    UserSupplied,
}

/// A sampled spectral parameter with `Im λ > 0` on every valid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lambda: ComplexGridField,
    provenance: Provenance,
    partials: Option<(ComplexGridField, ComplexGridField)>,
}

fn check_upper(lambda: &ComplexGridField) -> Result<()> {
    for (k, (&l, &m)) in lambda.values().iter().zip(lambda.mask()).enumerate() {
        if m && !(l.im > 0.0) {
            let (x, y) = lambda.spec().point(k);
            return Err(Error::EllipticityViolated { x, y, im: l.im });
        }
    }
    Ok(())
}

impl SpectralField {
    pub fn new(lambda: ComplexGridField, provenance: Provenance) -> Result<Self> {
        check_upper(&lambda)?;
        Ok(Self {
            lambda,
            provenance,
            partials: None,
        })
    }

    /// Attaches analytic partials `(λ_x, λ_y)`; the value mask becomes the
    /// intersection of all three masks.
    pub fn with_partials(
        lambda: ComplexGridField,
        provenance: Provenance,
        lambda_x: ComplexGridField,
        lambda_y: ComplexGridField,
    ) -> Result<Self> {
        lambda_x.check_same_grid(lambda.spec())?;
        lambda_y.check_same_grid(lambda.spec())?;
        let mask: Vec<bool> = (0..lambda.values().len())
            .map(|k| lambda.mask()[k] && lambda_x.mask()[k] && lambda_y.mask()[k])
            .collect();
        let lambda = lambda.restrict(&mask)?;
        check_upper(&lambda)?;
        Ok(Self {
            lambda,
            provenance,
            partials: Some((lambda_x.restrict(&mask)?, lambda_y.restrict(&mask)?)),
        })
    }

    /// Samples a provider, keeping its analytic partials. Failing points
    /// are errors.
    pub fn from_provider(provider: &dyn LambdaProvider, grid: &GridSpec, provenance: Provenance) -> Result<Self> {
        let mut jets = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (x, y) = grid.point(k);
            jets.push(provider.lambda_jet(x, y)?);
        }
        let field = |f: fn(&LambdaJet) -> Complex64| {
            ComplexGridField::new(*grid, jets.iter().map(f).collect(), vec![true; grid.len()])
        };
        Self::with_partials(field(|j| j.value)?, provenance, field(|j| j.dx)?, field(|j| j.dy)?)
    }

    pub fn lambda(&self) -> &ComplexGridField {
        &self.lambda
    }

    pub fn spec(&self) -> &GridSpec {
        self.lambda.spec()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn analytic_partials(&self) -> Option<&(ComplexGridField, ComplexGridField)> {
        self.partials.as_ref()
    }

    /// Drops analytic partials so every derivative is taken by differences.
    pub fn without_partials(&self) -> Self {
        Self {
            lambda: self.lambda.clone(),
            provenance: self.provenance,
            partials: None,
        }
    }

    /// `(λ_x, λ_y)`: analytic when attached, centred differences otherwise.
    pub fn partials(&self, order: StencilOrder) -> Result<(ComplexGridField, ComplexGridField)> {
        match &self.partials {
            Some(p) => Ok(p.clone()),
            None => Ok((partial_x(&self.lambda, order)?, partial_y(&self.lambda, order)?)),
        }
    }
}

/// `λ = (−β + i√Δ)/2`, with partials when the structure carries them.
pub fn lambda_from_structure(structure: &SampledStructure) -> Result<SpectralField> {
    let spec = *structure.spec();
    let mut values = Vec::with_capacity(spec.len());
    for k in 0..spec.len() {
        values.push(structure.fiber(k).map(|f| f.lambda()).unwrap_or_default());
    }
    let lambda = ComplexGridField::new(spec, values, structure.mask().to_vec())?;
    let Some(p) = structure.analytic_partials() else {
        return SpectralField::new(lambda, Provenance::FromStructure);
    };
    let mut lx = Vec::with_capacity(spec.len());
    let mut ly = Vec::with_capacity(spec.len());
    let mut mask = Vec::with_capacity(spec.len());
    for k in 0..spec.len() {
        let valid = structure.mask()[k]
            && p.alpha_x.mask()[k]
            && p.alpha_y.mask()[k]
            && p.beta_x.mask()[k]
            && p.beta_y.mask()[k];
        mask.push(valid);
        if !valid {
            lx.push(Complex64::default());
            ly.push(Complex64::default());
            continue;
        }
        let fiber = structure.fiber(k).expect("valid");
        let jet = crate::algebra::CoefficientJet {
            alpha: fiber.alpha(),
            beta: fiber.beta(),
            alpha_x: p.alpha_x.values()[k],
            alpha_y: p.alpha_y.values()[k],
            beta_x: p.beta_x.values()[k],
            beta_y: p.beta_y.values()[k],
        }
        .lambda_jet(&fiber);
        lx.push(jet.dx);
        ly.push(jet.dy);
    }
    SpectralField::with_partials(
        lambda,
        Provenance::FromStructure,
        ComplexGridField::new(spec, lx, mask.clone())?,
        ComplexGridField::new(spec, ly, mask)?,
    )
}

/// `β = −2 Re λ`, `α = |λ|²` (sum and product of the two roots).
pub fn structure_from_lambda(field: &SpectralField) -> Result<SampledStructure> {
    let l = field.lambda();
    let alpha = l.map(|z| z.norm_sqr());
    let beta = l.map(|z| -2.0 * z.re);
    let description = format!("from_lambda({:?})", field.provenance());
    match field.analytic_partials() {
        None => SampledStructure::new(alpha, beta, description),
        Some((lx, ly)) => {
            let ax = l.zip_map(lx, |z, d| 2.0 * (z.conj() * d).re)?;
            let ay = l.zip_map(ly, |z, d| 2.0 * (z.conj() * d).re)?;
            SampledStructure::with_partials(
                alpha,
                beta,
                StructurePartials {
                    alpha_x: ax,
                    alpha_y: ay,
                    beta_x: lx.map(|d| -2.0 * d.re),
                    beta_y: ly.map(|d| -2.0 * d.re),
                },
                description,
            )
        }
    }
}

/// `W_λ = U + Vλ`. Fails if `lambda` is not the spectral parameter of the
/// section's structure.
pub fn transport(w: &AlgebraSection, lambda: &SpectralField) -> Result<ComplexGridField> {
    let s = w.structure();
    lambda.lambda().check_same_grid(s.spec())?;
    let spec = *s.spec();
    let mut out = Vec::with_capacity(spec.len());
    let mut mask = Vec::with_capacity(spec.len());
    for k in 0..spec.len() {
        let valid = w.u().mask()[k] && lambda.lambda().mask()[k];
        mask.push(valid);
        if !valid {
            out.push(Complex64::default());
            continue;
        }
        let fiber = s.fiber(k).expect("section points carry a fiber");
        let l = lambda.lambda().values()[k];
        if (l - fiber.lambda()).norm() > 1e-12 * (1.0 + l.norm()) {
            let (x, y) = spec.point(k);
            return Err(Error::StructureMismatch(format!(
                "λ = {l} at ({x}, {y}) is not the root {} of the section's structure",
                fiber.lambda()
            )));
        }
        out.push(Complex64::new(w.u().values()[k], 0.0) + l * w.v().values()[k]);
    }
    ComplexGridField::new(spec, out, mask)
}

/// The transport defect `T = λ_x + λλ_y` and its normalization
/// `ρ_T = |T|/(Im λ)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportDiagnostics {
    pub t: ComplexGridField,
    pub rho_t: RealGridField,
    pub max_rho_t: f64,
    pub rms_rho_t: f64,
    pub tolerance: f64,
    pub rigid: bool,
}

/// Summary suitable for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigiditySummary {
    pub max_rho_t: f64,
    pub rms_rho_t: f64,
    pub rigid_verdict: bool,
    pub tolerance: f64,
}

impl TransportDiagnostics {
    pub fn summary(&self) -> RigiditySummary {
        RigiditySummary {
            max_rho_t: self.max_rho_t,
            rms_rho_t: self.rms_rho_t,
            rigid_verdict: self.rigid,
            tolerance: self.tolerance,
        }
    }
}

/// `max(10h², 1e-8)` with `h = max(hx, hy)`.
pub fn rigidity_tolerance(grid: &GridSpec) -> f64 {
    let h = grid.h();
    (10.0 * h * h).max(1e-8)
}

pub fn transport_residual(lambda: &SpectralField, order: StencilOrder) -> Result<TransportDiagnostics> {
    let (lx, ly) = lambda.partials(order)?;
    let l = lambda.lambda();
    let t = l.zip3_map(&lx, &ly, |l, lx, ly| lx + l * ly)?;
    let rho_t = t.zip_map(l, |t, l| t.norm() / (l.im * l.im))?;
    let norms = rho_t.norms(RESIDUAL_MARGIN)?;
    let tolerance = rigidity_tolerance(l.spec());
    Ok(TransportDiagnostics {
        t,
        rho_t,
        max_rho_t: norms.max,
        rms_rho_t: norms.rms,
        tolerance,
        rigid: norms.max < tolerance,
    })
}

/// Norms of [`intertwining_residual_field`].
pub fn intertwining_residual(w: &AlgebraSection, order: StencilOrder) -> Result<Norms> {
    intertwining_residual_field(w, order)?.norms(0)
}

/// `2(∂_z̄W)_λ − [(W_λ)_x + λ(W_λ)_y]`, both sides by differences of the same
/// order.
pub fn intertwining_residual_field(w: &AlgebraSection, order: StencilOrder) -> Result<ComplexGridField> {
    let lambda = lambda_from_structure(w.structure())?;
    let l = lambda.lambda();
    let (p, q) = cr_apply(w, order)?.total()?;
    let lhs = l.zip3_map(&p, &q, |l, p, q| l * q + p)?;
    let wl = transport(w, &lambda)?;
    let (wx, wy) = (partial_x(&wl, order)?, partial_y(&wl, order)?);
    let rhs = l.zip3_map(&wx, &wy, |l, a, b| a + l * b)?;
    lhs.zip_map(&rhs, |a, b| a - b)
}

/// `[f_x + (λf)_y] − [f_x + λf_y + λ_y f]`, all derivatives by differences.
pub fn divergence_form_residual(
    f: &ComplexGridField,
    lambda: &SpectralField,
    order: StencilOrder,
) -> Result<ComplexGridField> {
    let l = lambda.lambda();
    f.check_same_grid(l.spec())?;
    let lf = f.zip_map(l, |a, b| a * b)?;
    let (fx, fy) = (partial_x(f, order)?, partial_y(f, order)?);
    let ly = partial_y(l, order)?;
    let advective = l.zip3_map(&fx, &fy, |l, fx, fy| fx + l * fy)?.zip3_map(&ly, f, |a, ly, f| a + ly * f)?;
    let divergence = fx.zip_map(&partial_y(&lf, order)?, |a, b| a + b)?;
    divergence.zip_map(&advective, |a, b| a - b)
}
