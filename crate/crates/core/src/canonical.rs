//! The canonical coordinate `ξ = y − λx`, the characteristic Jacobian
//! `Φ = ξ̄_x + λξ̄_y`, the real Jacobian of `(p, q) = (Re ξ, Im ξ)`, Newton
//! inversion of `ξ`, and empirical injectivity scanning.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::{partial_x, partial_y, ComplexGridField, GridSpec, RealGridField, StencilOrder};
use crate::spectral::{transport_residual, LambdaJet, LambdaProvider, SpectralField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Threshold below which `Φ` counts as zero: `1e-10·(1 + |λ|)`.
pub fn phi_zero_threshold(lambda: Complex64) -> f64 {
    1e-10 * (1.0 + lambda.norm())
}

/// Pointwise chart quantities from one `λ` jet at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub xi: Complex64,
    pub xi_x: Complex64,
    pub xi_y: Complex64,
    /// `(λ − λ̄) − x(λ̄_x + λλ̄_y)`
    pub phi: Complex64,
    /// `−(i/2)(1 − xλ_y)Φ` before taking the real part.
    pub det_complex: Complex64,
}

impl ChartPoint {
    pub fn new(x: f64, y: f64, jet: &LambdaJet) -> Self {
        let (l, lx, ly) = (jet.value, jet.dx, jet.dy);
        let xi = Complex64::new(y, 0.0) - l * x;
        let xi_x = -l - lx * x;
        let xi_y = Complex64::new(1.0, 0.0) - ly * x;
        let phi = (l - l.conj()) - (lx.conj() + l * ly.conj()) * x;
        let det_complex = -0.5 * I * (1.0 - ly * x) * phi;
        Self {
            xi,
            xi_x,
            xi_y,
            phi,
            det_complex,
        }
    }
}

/// `ξ` with its real coordinates, `Φ` and the real Jacobian on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalChart {
    pub lambda: SpectralField,
    pub xi: ComplexGridField,
    pub p: RealGridField,
    pub q: RealGridField,
    pub xi_x: ComplexGridField,
    pub xi_y: ComplexGridField,
    /// `Φ` from its definition.
    pub phi: ComplexGridField,
    /// `Re[−(i/2)(1 − xλ_y)Φ]`
    pub jac_det: RealGridField,
    /// Max of `|Im[−(i/2)(1 − xλ_y)Φ]| / max(|det|, 1)`; rounding level on
    /// rigid structures.
    pub max_det_imag: f64,
}

impl CanonicalChart {
    pub fn spec(&self) -> &GridSpec {
        self.xi.spec()
    }
}

/// Builds the chart with analytic `λ` partials when available and centred
/// differences otherwise.
pub fn build_chart(lambda: &SpectralField, order: StencilOrder) -> Result<CanonicalChart> {
    let (lx, ly) = lambda.partials(order)?;
    let l = lambda.lambda();
    let spec = *l.spec();
    let mut pts = Vec::with_capacity(spec.len());
    let mut mask = Vec::with_capacity(spec.len());
    let mut max_det_imag = 0.0f64;
    for k in 0..spec.len() {
        let valid = l.mask()[k] && lx.mask()[k] && ly.mask()[k];
        mask.push(valid);
        if !valid {
            pts.push(None);
            continue;
        }
        let (x, y) = spec.point(k);
        let c = ChartPoint::new(
            x,
            y,
            &LambdaJet {
                value: l.values()[k],
                dx: lx.values()[k],
                dy: ly.values()[k],
            },
        );
        max_det_imag = max_det_imag.max(c.det_complex.im.abs() / c.det_complex.re.abs().max(1.0));
        pts.push(Some(c));
    }
    let complex = |f: fn(&ChartPoint) -> Complex64| {
        ComplexGridField::new(spec, pts.iter().map(|p| p.as_ref().map(f).unwrap_or_default()).collect(), mask.clone())
    };
    let real = |f: fn(&ChartPoint) -> f64| {
        RealGridField::new(spec, pts.iter().map(|p| p.as_ref().map(f).unwrap_or_default()).collect(), mask.clone())
    };
    Ok(CanonicalChart {
        lambda: lambda.clone(),
        xi: complex(|c| c.xi)?,
        p: real(|c| c.xi.re)?,
        q: real(|c| c.xi.im)?,
        xi_x: complex(|c| c.xi_x)?,
        xi_y: complex(|c| c.xi_y)?,
        phi: complex(|c| c.phi)?,
        jac_det: real(|c| c.det_complex.re)?,
        max_det_imag,
    })
}

/// `Φ = ξ̄_x + λξ̄_y` with both partials of `ξ̄` taken by differences.
pub fn phi_definition_fd(chart: &CanonicalChart, order: StencilOrder) -> Result<ComplexGridField> {
    let xibar = chart.xi.conj();
    chart
        .lambda
        .lambda()
        .zip3_map(&partial_x(&xibar, order)?, &partial_y(&xibar, order)?, |l, a, b| a + l * b)
}

/// `Φ = 2i Im λ (1 − xλ̄_y)`, valid under rigidity.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFactored {
    pub phi: ComplexGridField,
    pub max_rho_t: f64,
    /// Set when the structure failed the rigidity test; the values are then
    /// not expected to agree with the definition.
    pub warning: Option<String>,
}

pub fn phi_factored(lambda: &SpectralField, order: StencilOrder) -> Result<PhiFactored> {
    let (_, ly) = lambda.partials(order)?;
    let l = lambda.lambda();
    l.check_same_grid(ly.spec())?;
    let spec = *l.spec();
    let values = (0..spec.len())
        .map(|k| {
            let (x, _) = spec.point(k);
            2.0 * I * l.values()[k].im * (1.0 - ly.values()[k].conj() * x)
        })
        .collect();
    let mask = l.mask().iter().zip(ly.mask()).map(|(&a, &b)| a && b).collect();
    let phi = ComplexGridField::new(spec, values, mask)?;
    let diag = transport_residual(lambda, order)?;
    let warning = (!diag.rigid).then(|| {
        format!(
            "structure is not rigid (max rho_T = {:e} > {:e}); the factored form does not apply",
            diag.max_rho_t, diag.tolerance
        )
    });
    Ok(PhiFactored {
        phi,
        max_rho_t: diag.max_rho_t,
        warning,
    })
}

/// `Φ = 2i Im λ / J̄` on a Burgers field.
pub fn phi_burgers(lambda: &ComplexGridField, j: &ComplexGridField) -> Result<ComplexGridField> {
    lambda.zip_map(j, |l, j| 2.0 * I * l.im / j.conj())
}

/// `p_x q_y − p_y q_x` by differences.
pub fn fd_jacobian(chart: &CanonicalChart, order: StencilOrder) -> Result<RealGridField> {
    let (px, py) = (partial_x(&chart.p, order)?, partial_y(&chart.p, order)?);
    let (qx, qy) = (partial_x(&chart.q, order)?, partial_y(&chart.q, order)?);
    let a = px.zip_map(&qy, |a, b| a * b)?;
    let b = py.zip_map(&qx, |a, b| a * b)?;
    a.zip_map(&b, |a, b| a - b)
}

/// Comparison of the three routes to the real Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    /// max |FD det − Re[−(i/2)(1 − xλ_y)Φ]|
    pub max_fd_vs_formula: f64,
    /// max |Re[−(i/2)(1 − xλ_y)Φ] − Im λ/|J|²| on Burgers fields
    pub max_formula_vs_burgers: Option<f64>,
    /// max |FD det − Im λ/|J|²| on Burgers fields
    pub max_fd_vs_burgers: Option<f64>,
    pub min_det: f64,
    pub max_det_imag: f64,
    /// max |det − Im λ| on the `x = 0` column, if present
    pub axis_max_vs_im_lambda: Option<f64>,
    /// points where `|det| < ε` and `|Φ| < 2ε/|1 − xλ_y|` disagree
    pub zero_set_mismatches: usize,
    pub zero_set_epsilon: f64,
}

/// Residual fields behind a [`JacobianReport`], for convergence studies.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianCheck {
    pub report: JacobianReport,
    pub fd_minus_formula: RealGridField,
    pub fd_minus_burgers: Option<RealGridField>,
}

pub fn jacobian_check(
    chart: &CanonicalChart,
    order: StencilOrder,
    burgers_j: Option<&ComplexGridField>,
) -> Result<JacobianCheck> {
    let spec = *chart.spec();
    let fd = fd_jacobian(chart, order)?;
    let fd_minus_formula = fd.zip_map(&chart.jac_det, |a, b| a - b)?;
    let l = chart.lambda.lambda();
    let (_, ly) = chart.lambda.partials(order)?;
    let (mut max_fvb, mut max_dvb, mut fd_minus_burgers) = (None, None, None);
    if let Some(j) = burgers_j {
        let predicted = l.zip_map(j, |l, j| l.im / j.norm_sqr())?;
        max_fvb = Some(chart.jac_det.zip_map(&predicted, |a, b| a - b)?.norms(0)?.max);
        let r = fd.zip_map(&predicted, |a, b| a - b)?;
        max_dvb = Some(r.norms(0)?.max);
        fd_minus_burgers = Some(r);
    }
    let min_det = chart
        .jac_det
        .values()
        .iter()
        .zip(chart.jac_det.mask())
        .filter(|(_, &m)| m)
        .map(|(&d, _)| d)
        .fold(f64::INFINITY, f64::min);
    let axis_max_vs_im_lambda = spec.exact_column(0.0).map(|i| {
        (0..spec.ny())
            .filter(|&j| chart.jac_det.is_valid(i, j))
            .map(|j| (chart.jac_det.at(i, j) - l.at(i, j).im).abs())
            .fold(0.0, f64::max)
    });
    let eps = 1e-10;
    let mut mismatches = 0;
    for k in 0..spec.len() {
        if !(chart.phi.mask()[k] && ly.mask()[k]) {
            continue;
        }
        let (x, _) = spec.point(k);
        let factor = (1.0 - ly.values()[k] * x).norm();
        let det_zero = chart.jac_det.values()[k].abs() < eps;
        let phi_zero = chart.phi.values()[k].norm() * factor < 2.0 * eps;
        if det_zero != phi_zero {
            mismatches += 1;
        }
    }
    Ok(JacobianCheck {
        report: JacobianReport {
            max_fd_vs_formula: fd_minus_formula.norms(0)?.max,
            max_formula_vs_burgers: max_fvb,
            max_fd_vs_burgers: max_dvb,
            min_det,
            max_det_imag: chart.max_det_imag,
            axis_max_vs_im_lambda,
            zero_set_mismatches: mismatches,
            zero_set_epsilon: eps,
        },
        fd_minus_formula,
        fd_minus_burgers,
    })
}

/// Settings for the damped Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Maximum number of step halvings per Newton iteration.
pub const MAX_HALVINGS: usize = 20;

/// Singular-chart threshold on the real Jacobian during inversion.
pub const MIN_INVERSION_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub x: f64,
    pub y: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `ξ(x, y) = target` by damped Newton on `(p, q)`, using the
/// analytic partials `ξ_x = −λ − xλ_x`, `ξ_y = 1 − xλ_y`.
pub fn invert_xi(
    provider: &dyn LambdaProvider,
    target: Complex64,
    guess: (f64, f64),
    options: NewtonOptions,
) -> Result<Inversion> {
    let eval = |x: f64, y: f64| -> Result<ChartPoint> { Ok(ChartPoint::new(x, y, &provider.lambda_jet(x, y)?)) };
    let (mut x, mut y) = guess;
    let mut c = eval(x, y)?;
    let mut f = c.xi - target;
    let mut iterations = 0;
    loop {
        if f.norm() <= options.tol {
            break;
        }
        if iterations == options.max_iter {
            return Err(Error::InversionFailed(format!(
                "no convergence after {} iterations (residual {:e})",
                options.max_iter,
                f.norm()
            )));
        }
        iterations += 1;
        let (step_x, step_y) = newton_step(&c, f, x, y)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let (nx, ny) = (x + t * step_x, y + t * step_y);
            if let Ok(nc) = eval(nx, ny) {
                let nf = nc.xi - target;
                if nf.norm() < f.norm() {
                    (x, y, c, f) = (nx, ny, nc, nf);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::InversionFailed(format!(
                "damping could not reduce the residual {:e} at ({x}, {y})",
                f.norm()
            )));
        }
    }
    // Polish: one more full step, kept only if it helps.
    if f.norm() > 0.0 {
        if let Ok((sx, sy)) = newton_step(&c, f, x, y) {
            if let Ok(nc) = eval(x + sx, y + sy) {
                let nf = nc.xi - target;
                if nf.norm() < f.norm() {
                    (x, y, f) = (x + sx, y + sy, nf);
                }
            }
        }
    }
    Ok(Inversion {
        x,
        y,
        iterations,
        residual: f.norm(),
    })
}

fn newton_step(c: &ChartPoint, f: Complex64, x: f64, y: f64) -> Result<(f64, f64)> {
    let (a, b) = (c.xi_x.re, c.xi_y.re);
    let (d, e) = (c.xi_x.im, c.xi_y.im);
    let det = a * e - b * d;
    if !(det.abs() >= MIN_INVERSION_DET) {
        return Err(Error::NearSingularChart { x, y, det: det.abs() });
    }
    Ok(((-f.re * e + b * f.im) / det, (-a * f.im + d * f.re) / det))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectivityVerdict {
    InjectiveOnSample,
    CollisionsFound,
}

/// Result of an injectivity scan. A clean scan is a statement about the
/// sample, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub bucket_tol: f64,
    pub total_collisions: usize,
    /// The first [`MAX_REPORTED_COLLISIONS`] pairs in scan order.
    pub collisions: Vec<Collision>,
    pub verdict: InjectivityVerdict,
}

pub const MAX_REPORTED_COLLISIONS: usize = 1000;

/// Pairs more than two cells apart (in either index) whose `ξ` values are
/// closer than `bucket_tol`, found by spatial hashing.
pub fn injectivity_scan(xi: &ComplexGridField, bucket_tol: f64) -> Result<InjectivityReport> {
    if !(bucket_tol > 0.0) || !bucket_tol.is_finite() {
        return Err(Error::InvalidArgument(format!("bucket tolerance must be positive, got {bucket_tol}")));
    }
    let spec = *xi.spec();
    let key = |z: Complex64| ((z.re / bucket_tol).floor() as i64, (z.im / bucket_tol).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut collisions = Vec::new();
    let mut total = 0;
    for k in 0..spec.len() {
        if !xi.mask()[k] {
            continue;
        }
        let z = xi.values()[k];
        let (bx, by) = key(z);
        let (i, j) = spec.coords(k);
        let mut hits = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(bx + dx, by + dy)) {
                    for &other in list {
                        let (oi, oj) = spec.coords(other);
                        if i.abs_diff(oi).max(j.abs_diff(oj)) <= 2 {
                            continue;
                        }
                        let distance = (xi.values()[other] - z).norm();
                        if distance < bucket_tol {
                            hits.push((other, distance));
                        }
                    }
                }
            }
        }
        hits.sort_by_key(|h| h.0);
        for (other, distance) in hits {
            total += 1;
            if collisions.len() < MAX_REPORTED_COLLISIONS {
                collisions.push(Collision {
                    first: spec.point(other),
                    second: spec.point(k),
                    distance,
                });
            }
        }
        buckets.entry((bx, by)).or_default().push(k);
    }
    Ok(InjectivityReport {
        bucket_tol,
        total_collisions: total,
        collisions,
        verdict: if total == 0 {
            InjectivityVerdict::InjectiveOnSample
        } else {
            InjectivityVerdict::CollisionsFound
        },
    })
}

/// `0.5·min(hx, hy)·σ₅`, where `σ₅` is the 5th percentile over the chart of
/// the smallest singular value of `∂(p, q)/∂(x, y)`. Points three cells apart
/// are then separated in `ξ` by several bucket widths wherever the map is
/// locally injective.
pub fn default_bucket_tol(chart: &CanonicalChart) -> Result<f64> {
    let mut sigma: Vec<f64> = Vec::new();
    for k in 0..chart.spec().len() {
        if !(chart.xi_x.mask()[k] && chart.xi_y.mask()[k]) {
            continue;
        }
        let (a, b) = (chart.xi_x.values()[k], chart.xi_y.values()[k]);
        // Real 2×2 matrix [[Re a, Re b], [Im a, Im b]].
        let m = [[a.re, b.re], [a.im, b.im]];
        let fro2 = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        sigma.push(((fro2 - disc) / 2.0).max(0.0).sqrt());
    }
    if sigma.is_empty() {
        return Err(Error::EmptyRegion("chart has no valid point".into()));
    }
    sigma.sort_by(f64::total_cmp);
    let s5 = sigma[(sigma.len() - 1) * 5 / 100];
    let spec = chart.spec();
    let tol = 0.5 * spec.hx().min(spec.hy()) * s5;
    Ok(if tol > 0.0 { tol } else { 1e-12 * (1.0 + spec.h()) })
}

/// Scans a chart, with the default bucket tolerance unless one is given.
pub fn scan_chart(chart: &CanonicalChart, bucket_tol: Option<f64>) -> Result<InjectivityReport> {
    let tol = match bucket_tol {
        Some(t) => t,
        None => default_bucket_tol(chart)?,
    };
    injectivity_scan(&chart.xi, tol)
}
