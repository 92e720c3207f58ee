//! Reduction of rigid Vekua equations `f_x + λf_y + 2A_λf + 2B_λf̄ = 2F_λ`
//! to the standard form `f_ξ̄ + A′f + B′f̄ = F′` in the canonical chart,
//! with `A′ = 2A_λ/Φ` and likewise for `B′`, `F′`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::burgers::Seed;
use crate::canonical::{phi_zero_threshold, CanonicalChart};
use crate::error::{Error, Result};
use crate::numerics::{partial_x, partial_y, ComplexGridField, GridSpec, InteriorRegion, Norms, StencilOrder};
use crate::seedlang::{Expression, Params};
use crate::spectral::{transport_residual, RigiditySummary, SpectralField};

/// Threshold on `|ξ_x ξ̄_y − ξ_y ξ̄_x|` below which the chart is singular.
pub const CHART_SINGULAR_DET: f64 = 1e-12;

/// A Vekua equation in the transport picture.
#[derive(Debug, Clone, PartialEq)]
pub struct VekuaProblem {
    pub lambda: SpectralField,
    pub a: ComplexGridField,
    pub b: ComplexGridField,
    pub f: ComplexGridField,
}

impl VekuaProblem {
    pub fn new(lambda: SpectralField, a: ComplexGridField, b: ComplexGridField, f: ComplexGridField) -> Result<Self> {
        for c in [&a, &b, &f] {
            c.check_same_grid(lambda.spec())?;
        }
        Ok(Self { lambda, a, b, f })
    }

    /// `A_λ = B_λ = F_λ = 0`.
    pub fn homogeneous(lambda: SpectralField) -> Self {
        let zero = ComplexGridField::constant(*lambda.spec(), Complex64::default());
        Self {
            lambda,
            a: zero.clone(),
            b: zero.clone(),
            f: zero,
        }
    }
}

/// Samples an expression in `x` and `y` on a grid. Points where the
/// expression is singular are masked.
pub fn sample_expression(text: &str, params: &Params, grid: &GridSpec) -> Result<ComplexGridField> {
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    let expr = Expression::field(text, &names)?.bind(params)?;
    Ok(ComplexGridField::from_fn_masked(*grid, |x, y| {
        expr.eval(&[Complex64::new(x, 0.0), Complex64::new(y, 0.0)]).ok()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedMaskReason {
    /// `|Φ| < 1e-10(1 + |λ|)`.
    PhiZero,
    /// An input coefficient or the chart is undefined here.
    InputMasked,
}

/// The reduced coefficients, indexed by the `(x, y)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedVekua {
    pub a_prime: ComplexGridField,
    pub b_prime: ComplexGridField,
    pub f_prime: ComplexGridField,
    pub chart: CanonicalChart,
    pub problem: VekuaProblem,
    pub reasons: Vec<Option<ReducedMaskReason>>,
    pub rigidity: RigiditySummary,
}

impl ReducedVekua {
    pub fn reason_counts(&self) -> BTreeMap<ReducedMaskReason, usize> {
        let mut out = BTreeMap::new();
        for r in self.reasons.iter().flatten() {
            *out.entry(*r).or_insert(0) += 1;
        }
        out
    }

    /// `max |A′Φ − 2A_λ| / max(|2A_λ|, 1)` and likewise for `B′`, `F′`.
    pub fn division_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        let phi = &self.chart.phi;
        for (reduced, original) in [
            (&self.a_prime, &self.problem.a),
            (&self.b_prime, &self.problem.b),
            (&self.f_prime, &self.problem.f),
        ] {
            for k in (0..phi.spec().len()).filter(|&k| reduced.mask()[k]) {
                let two = 2.0 * original.values()[k];
                worst = worst.max((reduced.values()[k] * phi.values()[k] - two).norm() / two.norm().max(1.0));
            }
        }
        worst
    }
}

/// Divides by `Φ` after certifying rigidity. A non-rigid structure is
/// refused with its transport diagnostics.
pub fn reduce(problem: &VekuaProblem, chart: &CanonicalChart, order: StencilOrder) -> Result<ReducedVekua> {
    chart.xi.check_same_grid(problem.lambda.spec())?;
    let diag = transport_residual(&problem.lambda, order)?;
    if !diag.rigid {
        return Err(Error::NotRigid {
            max_rho_t: diag.max_rho_t,
            rms_rho_t: diag.rms_rho_t,
            tolerance: diag.tolerance,
        });
    }
    let spec = *chart.spec();
    let l = problem.lambda.lambda();
    let mut reasons = vec![None; spec.len()];
    let mut mask = vec![false; spec.len()];
    for k in 0..spec.len() {
        let inputs = chart.phi.mask()[k] && problem.a.mask()[k] && problem.b.mask()[k] && problem.f.mask()[k];
        if !inputs {
            reasons[k] = Some(ReducedMaskReason::InputMasked);
        } else if chart.phi.values()[k].norm() < phi_zero_threshold(l.values()[k]) {
            reasons[k] = Some(ReducedMaskReason::PhiZero);
        } else {
            mask[k] = true;
        }
    }
    let divide = |c: &ComplexGridField| -> Result<ComplexGridField> {
        let values = (0..spec.len())
            .map(|k| {
                if mask[k] {
                    2.0 * c.values()[k] / chart.phi.values()[k]
                } else {
                    Complex64::default()
                }
            })
            .collect();
        ComplexGridField::new(spec, values, mask.clone())
    };
    Ok(ReducedVekua {
        a_prime: divide(&problem.a)?,
        b_prime: divide(&problem.b)?,
        f_prime: divide(&problem.f)?,
        chart: chart.clone(),
        problem: problem.clone(),
        reasons,
        rigidity: diag.summary(),
    })
}

/// `(f_ξ, f_ξ̄)` from given `(f_x, f_y)` by solving
/// `f_x = f_ξ ξ_x + f_ξ̄ ξ̄_x`, `f_y = f_ξ ξ_y + f_ξ̄ ξ̄_y` pointwise.
pub fn wirtinger_in_xi_from_partials(
    fx: &ComplexGridField,
    fy: &ComplexGridField,
    chart: &CanonicalChart,
) -> Result<(ComplexGridField, ComplexGridField)> {
    let spec = *chart.spec();
    fx.check_same_grid(&spec)?;
    fy.check_same_grid(&spec)?;
    let n = spec.len();
    let (mut a, mut b, mut mask) = (vec![Complex64::default(); n], vec![Complex64::default(); n], vec![false; n]);
    for k in 0..n {
        if !(fx.mask()[k] && fy.mask()[k] && chart.xi_x.mask()[k] && chart.phi.mask()[k]) {
            continue;
        }
        let (xx, xy) = (chart.xi_x.values()[k], chart.xi_y.values()[k]);
        let det = xx * xy.conj() - xy * xx.conj();
        if det.norm() < CHART_SINGULAR_DET {
            continue;
        }
        let (p, q) = (fx.values()[k], fy.values()[k]);
        a[k] = (p * xy.conj() - q * xx.conj()) / det;
        b[k] = (xx * q - xy * p) / det;
        mask[k] = true;
    }
    Ok((ComplexGridField::new(spec, a, mask.clone())?, ComplexGridField::new(spec, b, mask)?))
}

/// `(f_ξ, f_ξ̄)` with `f_x`, `f_y` by centred differences.
pub fn wirtinger_in_xi(
    f: &ComplexGridField,
    chart: &CanonicalChart,
    order: StencilOrder,
) -> Result<(ComplexGridField, ComplexGridField)> {
    wirtinger_in_xi_from_partials(&partial_x(f, order)?, &partial_y(f, order)?, chart)
}

/// `|(f_x + λf_y) − f_ξ̄Φ|` and `|f_ξ ξ_x + f_ξ̄ ξ̄_x − f_x|` with `f_ξ`,
/// `f_ξ̄` solved from the chart system.
pub fn chain_rule_residual(
    f: &ComplexGridField,
    chart: &CanonicalChart,
    order: StencilOrder,
) -> Result<(ComplexGridField, ComplexGridField)> {
    let (fx, fy) = (partial_x(f, order)?, partial_y(f, order)?);
    let (a, b) = wirtinger_in_xi_from_partials(&fx, &fy, chart)?;
    let transport = chart.lambda.lambda().zip3_map(&fx, &fy, |l, fx, fy| fx + l * fy)?;
    let closure = transport.zip3_map(&b, &chart.phi, |t, b, phi| t - b * phi)?;
    let lhs = a.zip3_map(&b, &chart.xi_x, |a, b, xx| a * xx + b * xx.conj())?;
    let reproduce = lhs.zip_map(&fx, |l, fx| l - fx)?;
    Ok((closure, reproduce))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassengerKind {
    /// `f = g(ξ)`
    Holomorphic,
    /// `f = conj(g(ξ))`
    Antiholomorphic,
}

/// A test function on the chart, optionally generated by `g` composed with
/// `ξ`, in which case its partials are known analytically.
#[derive(Debug, Clone)]
pub struct PassengerField {
    pub f: ComplexGridField,
    pub partials: Option<(ComplexGridField, ComplexGridField)>,
    pub generator: Option<(Arc<dyn Seed>, PassengerKind)>,
}

impl PassengerField {
    /// `g(ξ)` or `conj(g(ξ))` with `f_x = g′(ξ)ξ_x`, `f_y = g′(ξ)ξ_y` (conjugated
    /// in the second case).
    pub fn from_generator(g: Arc<dyn Seed>, kind: PassengerKind, chart: &CanonicalChart) -> Result<Self> {
        let spec = *chart.spec();
        let n = spec.len();
        let (mut f, mut fx, mut fy, mut mask) = (
            vec![Complex64::default(); n],
            vec![Complex64::default(); n],
            vec![Complex64::default(); n],
            vec![false; n],
        );
        for k in 0..n {
            if !(chart.xi.mask()[k] && chart.xi_x.mask()[k]) {
                continue;
            }
            let Ok((h, hp)) = g.eval(chart.xi.values()[k]) else {
                continue;
            };
            let (dx, dy) = (hp * chart.xi_x.values()[k], hp * chart.xi_y.values()[k]);
            (f[k], fx[k], fy[k]) = match kind {
                PassengerKind::Holomorphic => (h, dx, dy),
                PassengerKind::Antiholomorphic => (h.conj(), dx.conj(), dy.conj()),
            };
            mask[k] = true;
        }
        Ok(Self {
            f: ComplexGridField::new(spec, f, mask.clone())?,
            partials: Some((
                ComplexGridField::new(spec, fx, mask.clone())?,
                ComplexGridField::new(spec, fy, mask)?,
            )),
            generator: Some((g, kind)),
        })
    }

    /// Samples only; partials by differences when needed.
    pub fn sampled(f: ComplexGridField) -> Self {
        Self {
            f,
            partials: None,
            generator: None,
        }
    }

    pub fn partials(&self, order: StencilOrder) -> Result<(ComplexGridField, ComplexGridField)> {
        match &self.partials {
            Some(p) => Ok(p.clone()),
            None => Ok((partial_x(&self.f, order)?, partial_y(&self.f, order)?)),
        }
    }
}

/// A problem with `f` as its exact solution:
/// `F_λ = (f_x + λf_y)/2 + A_λf + B_λf̄`.
pub fn manufacture(
    lambda: &SpectralField,
    a: &ComplexGridField,
    b: &ComplexGridField,
    passenger: &PassengerField,
    order: StencilOrder,
) -> Result<VekuaProblem> {
    let (fx, fy) = passenger.partials(order)?;
    let transport = lambda.lambda().zip3_map(&fx, &fy, |l, fx, fy| (fx + l * fy) * 0.5)?;
    let potential = a.zip3_map(b, &passenger.f, |a, b, f| a * f + b * f.conj())?;
    let forcing = transport.zip_map(&potential, |t, p| t + p)?;
    VekuaProblem::new(lambda.clone(), a.clone(), b.clone(), forcing)
}

/// Pointwise `f_ξ̄ + A′f + B′f̄ − F′` with `f_ξ̄` from differences of the
/// samples of `f`.
pub fn reduced_residual_field(f: &ComplexGridField, reduced: &ReducedVekua, order: StencilOrder) -> Result<ComplexGridField> {
    let (_, fxibar) = wirtinger_in_xi(f, &reduced.chart, order)?;
    let lhs = fxibar.zip3_map(&reduced.a_prime, f, |d, a, f| d + a * f)?;
    let lhs = lhs.zip3_map(&reduced.b_prime, f, |l, b, f| l + b * f.conj())?;
    lhs.zip_map(&reduced.f_prime, |l, r| l - r)
}

pub fn reduced_residual(f: &ComplexGridField, reduced: &ReducedVekua, order: StencilOrder) -> Result<Norms> {
    let r = reduced_residual_field(f, reduced, order)?;
    if r.valid_count() == 0 {
        return Err(Error::EmptyRegion("no point where both the residual and Φ are defined".into()));
    }
    r.norms(0)
}

/// Axis data for [`passenger_axis_identity`].
#[derive(Debug, Clone, Copy)]
pub enum AxisData<'a> {
    Generator(&'a dyn Seed),
    /// `g(y_j)` for every row `j`.
    Samples(&'a [Complex64]),
}

/// `max_j |g(y_j) − f(0, y_j)|` over the valid axis points.
pub fn passenger_axis_identity(f: &ComplexGridField, g: AxisData<'_>) -> Result<f64> {
    let spec = f.spec();
    let i0 = spec.exact_column(0.0).ok_or(Error::AxisAbsent)?;
    if let AxisData::Samples(s) = g {
        if s.len() != spec.ny() {
            return Err(Error::ShapeMismatch(format!("{} axis samples for {} rows", s.len(), spec.ny())));
        }
    }
    let mut worst = 0.0f64;
    for j in (0..spec.ny()).filter(|&j| f.is_valid(i0, j)) {
        let gy = match g {
            AxisData::Generator(s) => s.eval(Complex64::new(spec.y(j), 0.0))?.0,
            AxisData::Samples(s) => s[j],
        };
        worst = worst.max((gy - f.at(i0, j)).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// `C/(2c₁)` with `C = max |J|`, `c₁ = min Im λ`.
    Jacobian,
    /// `1/min |Φ|` directly.
    MinPhi,
}

/// A priori bound on `‖A′‖/‖2A_λ‖` against its measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBoundReport {
    pub method: BoundMethod,
    pub c1: f64,
    pub big_c: Option<f64>,
    pub min_phi: f64,
    pub bound_factor: f64,
    pub measured_max_ratio: f64,
    pub measured_rms_ratio: f64,
    pub points: usize,
    pub holds: bool,
}

/// Measures `‖A′‖/‖2A_λ‖` in max and RMS norms over the reduced domain
/// eroded by `margin` cells. With a Burgers `J` the bound is `C/(2c₁)`,
/// since `|Φ| = 2 Im λ/|J| ≥ 2c₁/C`; otherwise it is `1/min |Φ|`.
pub fn coefficient_bound_report(
    reduced: &ReducedVekua,
    margin: usize,
    burgers_j: Option<&ComplexGridField>,
) -> Result<CoefficientBoundReport> {
    let spec = *reduced.chart.spec();
    let region = if margin == 0 {
        reduced.a_prime.mask().to_vec()
    } else {
        InteriorRegion::new(margin)?.apply(reduced.a_prime.mask(), &spec)?
    };
    let l = reduced.problem.lambda.lambda();
    let (mut c1, mut big_c, mut min_phi) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    let (mut num_max, mut den_max, mut num_sq, mut den_sq, mut points) = (0.0f64, 0.0f64, 0.0, 0.0, 0usize);
    for k in (0..spec.len()).filter(|&k| region[k]) {
        c1 = c1.min(l.values()[k].im);
        min_phi = min_phi.min(reduced.chart.phi.values()[k].norm());
        if let Some(j) = burgers_j {
            if !j.mask()[k] {
                return Err(Error::ShapeMismatch("J is masked inside the reduced domain".into()));
            }
            big_c = big_c.max(j.values()[k].norm());
        }
        let (ap, a2) = (reduced.a_prime.values()[k].norm(), 2.0 * reduced.problem.a.values()[k].norm());
        num_max = num_max.max(ap);
        den_max = den_max.max(a2);
        num_sq += ap * ap;
        den_sq += a2 * a2;
        points += 1;
    }
    if points == 0 {
        return Err(Error::EmptyRegion("no reduced point inside the compact margin".into()));
    }
    if den_max == 0.0 {
        return Err(Error::InvalidArgument("A_λ vanishes on the region; the ratio is undefined".into()));
    }
    let (method, bound_factor, big_c) = match burgers_j {
        Some(_) => (BoundMethod::Jacobian, big_c / (2.0 * c1), Some(big_c)),
        None => (BoundMethod::MinPhi, 1.0 / min_phi, None),
    };
    let measured_max_ratio = num_max / den_max;
    let measured_rms_ratio = (num_sq / den_sq).sqrt();
    let slack = 1.0 + 1e-12;
    Ok(CoefficientBoundReport {
        method,
        c1,
        big_c,
        min_phi,
        bound_factor,
        measured_max_ratio,
        measured_rms_ratio,
        points,
        holds: measured_max_ratio <= bound_factor * slack && measured_rms_ratio <= bound_factor * slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::EllipticStructure;
    use crate::burgers::{burgers_field, BuiltinSeed, BurgersOptions, ExprSeed};
    use crate::canonical::build_chart;
    use crate::numerics::{nested_convergence_study, wirtinger};
    use crate::spectral::{lambda_from_structure, Provenance};

    const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(-0.5, 2.0, -1.0, 1.0, n, n).unwrap()
    }

    fn delta_lambda(delta: f64, g: &GridSpec) -> SpectralField {
        lambda_from_structure(&EllipticStructure::delta_family(delta).unwrap().sample(g).unwrap()).unwrap()
    }

    fn standard(g: &GridSpec) -> SpectralField {
        SpectralField::from_provider(&crate::spectral::ConstantLambda(I), g, Provenance::UserSupplied).unwrap()
    }

    fn seed(text: &str) -> Arc<dyn Seed> {
        Arc::new(ExprSeed::new(text, &Params::new()).unwrap())
    }

    #[test]
    fn homogeneous_reduces_to_zero() {
        let g = grid(31);
        let l = delta_lambda(0.1, &g);
        let chart = build_chart(&l, StencilOrder::Second).unwrap();
        let r = reduce(&VekuaProblem::homogeneous(l), &chart, StencilOrder::Second).unwrap();
        for c in [&r.a_prime, &r.b_prime, &r.f_prime] {
            assert_eq!(c.valid_count(), g.len());
            assert!(c.values().iter().all(|v| *v == Complex64::default()));
        }
    }

    #[test]
    fn delta_family_coefficient() {
        let g = grid(31);
        let delta = 0.1;
        let l = delta_lambda(delta, &g);
        let chart = build_chart(&l, StencilOrder::Second).unwrap();
        let one = ComplexGridField::constant(g, Complex64::new(1.0, 0.0));
        let p = VekuaProblem::new(l, one.clone(), one.clone(), one).unwrap();
        let r = reduce(&p, &chart, StencilOrder::Second).unwrap();
        // A′ = 2/Φ with Φ = 2iδ/(1+x)².
        for k in 0..g.len() {
            let (x, _) = g.point(k);
            let exact = -I * (1.0 + x).powi(2) / delta;
            assert!((r.a_prime.values()[k] - exact).norm() <= 1e-10 * exact.norm());
        }
        assert!(r.division_residual() < 1e-13);
        // Constant chart: A′ = −iA.
        let s = standard(&g);
        let chart = build_chart(&s, StencilOrder::Second).unwrap();
        let a = sample_expression("x + 2*i*y", &Params::new(), &g).unwrap();
        let zero = ComplexGridField::constant(g, Complex64::default());
        let r = reduce(&VekuaProblem::new(s, a.clone(), zero.clone(), zero).unwrap(), &chart, StencilOrder::Second).unwrap();
        let d = r.a_prime.zip_map(&a, |ap, a| (ap + I * a).norm()).unwrap();
        assert!(d.norms(0).unwrap().max < 1e-15);
    }

    #[test]
    fn refuses_non_rigid() {
        let g = grid(31);
        let shear = EllipticStructure::custom_lambda("x + i", &Params::new()).unwrap();
        let l = SpectralField::from_provider(&shear, &g, Provenance::UserSupplied).unwrap();
        let chart = build_chart(&l, StencilOrder::Second).unwrap();
        let e = reduce(&VekuaProblem::homogeneous(l), &chart, StencilOrder::Second).unwrap_err();
        match e {
            Error::NotRigid { max_rho_t, tolerance, .. } => assert!(max_rho_t > tolerance),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn phi_zero_points_are_masked() {
        let g = grid(11);
        let tiny = SpectralField::new(ComplexGridField::constant(g, Complex64::new(0.0, 1e-12)), Provenance::UserSupplied)
            .unwrap();
        let chart = build_chart(&tiny, StencilOrder::Second).unwrap();
        let r = reduce(&VekuaProblem::homogeneous(tiny), &chart, StencilOrder::Second).unwrap();
        assert_eq!(r.a_prime.valid_count(), 0);
        assert!(r.reason_counts()[&ReducedMaskReason::PhiZero] > 0);
    }

    #[test]
    fn wirtinger_examples() {
        let g = grid(31);
        let s = standard(&g);
        let chart = build_chart(&s, StencilOrder::Second).unwrap();
        let (a, b) = wirtinger_in_xi(&chart.xi, &chart, StencilOrder::Second).unwrap();
        assert!(a.norms(0).unwrap().max - 1.0 < 1e-13);
        assert!(a.map(|v| (v - 1.0).norm()).norms(0).unwrap().max < 1e-13);
        assert!(b.norms(0).unwrap().max < 1e-13);
        let (a, b) = wirtinger_in_xi(&chart.xi.conj(), &chart, StencilOrder::Second).unwrap();
        assert!(a.norms(0).unwrap().max < 1e-13);
        assert!(b.map(|v| (v - 1.0).norm()).norms(0).unwrap().max < 1e-13);
        // δ-family, f = ξ²: f_ξ = 2ξ, f_ξ̄ = 0 at second order.
        let r = nested_convergence_study(&grid(26), 3, |g| {
            let chart = build_chart(&delta_lambda(0.5, g), StencilOrder::Second)?;
            let f = chart.xi.map(|z| z * z);
            let (a, b) = wirtinger_in_xi(&f, &chart, StencilOrder::Second)?;
            a.zip3_map(&b, &chart.xi, |a, b, z| (a - 2.0 * z).norm() + b.norm())
        })
        .unwrap();
        assert!(r.order_within(2.0, 0.2), "{r:?}");
    }

    #[test]
    fn chain_rule_closes() {
        // With analytic ξ partials, ξ_x + λξ_y vanishes to rounding, so the
        // solved system reproduces the transport derivative exactly.
        let g = grid(41);
        let chart = build_chart(&delta_lambda(0.1, &g), StencilOrder::Second).unwrap();
        let f = chart.xi.map_with_coords(|x, y, z| z.conj() * z + Complex64::new(x * y, x));
        let (closure, reproduce) = chain_rule_residual(&f, &chart, StencilOrder::Second).unwrap();
        assert!(closure.valid_count() > 0);
        assert!(closure.norms(0).unwrap().max < 1e-11);
        assert!(reproduce.norms(0).unwrap().max < 1e-11);
    }

    #[test]
    fn manufactured_conjugate_xi() {
        let g = grid(41);
        let l = delta_lambda(0.1, &g);
        let chart = build_chart(&l, StencilOrder::Second).unwrap();
        let f = PassengerField::from_generator(seed("w"), PassengerKind::Antiholomorphic, &chart).unwrap();
        let zero = ComplexGridField::constant(g, Complex64::default());
        let p = manufacture(&l, &zero, &zero, &f, StencilOrder::Second).unwrap();
        // F_λ = Φ/2.
        let d = p.f.zip_map(&chart.phi, |a, phi| (a - phi / 2.0).norm() / phi.norm()).unwrap();
        assert!(d.norms(0).unwrap().max < 1e-12);
        let r = reduce(&p, &chart, StencilOrder::Second).unwrap();
        assert!(r.f_prime.map(|v| (v - 1.0).norm()).norms(0).unwrap().max < 1e-12);
        // With coefficients: F′ = 1 + A′ξ̄ + B′ξ.
        let a = sample_expression("1 + x*y", &Params::new(), &g).unwrap();
        let b = sample_expression("i*exp(y)", &Params::new(), &g).unwrap();
        let p = manufacture(&l, &a, &b, &f, StencilOrder::Second).unwrap();
        let r = reduce(&p, &chart, StencilOrder::Second).unwrap();
        for k in 0..g.len() {
            let xi = chart.xi.values()[k];
            let expect = 1.0 + r.a_prime.values()[k] * xi.conj() + r.b_prime.values()[k] * xi;
            assert!((r.f_prime.values()[k] - expect).norm() <= 1e-10 * expect.norm());
        }
    }

    #[test]
    fn manufactured_residuals_converge() {
        let coefficient_sets = [("0", "0"), ("1 + x*y", "i*exp(y)"), ("cos(x) - i", "x*x + y")];
        for (kind, g_text) in [(PassengerKind::Holomorphic, "w*w + exp(w/2)"), (PassengerKind::Antiholomorphic, "w")] {
            for (a_text, b_text) in coefficient_sets {
                let r = nested_convergence_study(&grid(26), 3, |g| {
                    let l = delta_lambda(0.5, g);
                    let chart = build_chart(&l, StencilOrder::Second)?;
                    let f = PassengerField::from_generator(seed(g_text), kind, &chart)?;
                    let a = sample_expression(a_text, &Params::new(), g)?;
                    let b = sample_expression(b_text, &Params::new(), g)?;
                    let reduced = reduce(&manufacture(&l, &a, &b, &f, StencilOrder::Second)?, &chart, StencilOrder::Second)?;
                    reduced_residual_field(&f.f, &reduced, StencilOrder::Second)
                })
                .unwrap();
                assert!(r.order_within(2.0, 0.2), "{kind:?} {a_text}/{b_text}: {r:?}");
            }
        }
    }

    #[test]
    fn classical_oracle_for_constant_structure() {
        let g = grid(41);
        let s = standard(&g);
        let chart = build_chart(&s, StencilOrder::Second).unwrap();
        let f = ComplexGridField::from_fn(g, |x, y| Complex64::new(x * x - y, x * y.sin()));
        let a = sample_expression("1 + x", &Params::new(), &g).unwrap();
        let b = sample_expression("i*y", &Params::new(), &g).unwrap();
        let forcing = sample_expression("x*y", &Params::new(), &g).unwrap();
        let p = VekuaProblem::new(s, a.clone(), b.clone(), forcing.clone()).unwrap();
        let reduced = reduce(&p, &chart, StencilOrder::Second).unwrap();
        let r = reduced_residual_field(&f, &reduced, StencilOrder::Second).unwrap();
        // In z = x + iy: ξ = −iz, so f_ξ̄ = −i f_z̄ and the reduced residual is
        // −i(f_z̄ + Af + Bf̄ − F).
        let (_, fzbar) = wirtinger(&f, StencilOrder::Second).unwrap();
        let classical = fzbar
            .zip3_map(&a, &f, |d, a, f| d + a * f)
            .unwrap()
            .zip3_map(&b, &f, |l, b, f| l + b * f.conj())
            .unwrap()
            .zip_map(&forcing, |l, r| -I * (l - r))
            .unwrap();
        let d = r.zip_map(&classical, |a, b| (a - b).norm()).unwrap();
        assert!(d.norms(0).unwrap().max < 1e-12);
    }

    #[test]
    fn holomorphic_passenger_solves_homogeneous() {
        let r = nested_convergence_study(&grid(26), 3, |g| {
            let l = delta_lambda(0.1, g);
            let chart = build_chart(&l, StencilOrder::Second)?;
            let f = PassengerField::from_generator(seed("w*w"), PassengerKind::Holomorphic, &chart)?;
            let reduced = reduce(&VekuaProblem::homogeneous(l), &chart, StencilOrder::Second)?;
            reduced_residual_field(&f.f, &reduced, StencilOrder::Second)
        })
        .unwrap();
        assert!(r.order_within(2.0, 0.2), "{r:?}");
    }

    #[test]
    fn axis_identity() {
        let g = grid(41);
        let chart = build_chart(&delta_lambda(0.1, &g), StencilOrder::Second).unwrap();
        let sq = seed("w*w");
        let f = PassengerField::from_generator(sq.clone(), PassengerKind::Holomorphic, &chart).unwrap();
        assert!(passenger_axis_identity(&f.f, AxisData::Generator(sq.as_ref())).unwrap() <= 1e-13);
        let mut samples: Vec<Complex64> = (0..g.ny()).map(|j| Complex64::new(g.y(j).powi(2), 0.0)).collect();
        assert!(passenger_axis_identity(&f.f, AxisData::Samples(&samples)).unwrap() <= 1e-13);
        samples[7] += 1e-3;
        assert!(passenger_axis_identity(&f.f, AxisData::Samples(&samples)).unwrap() >= 1e-3 - 1e-15);
        let off = GridSpec::new(0.1, 1.0, -1.0, 1.0, 11, 11).unwrap();
        let z = ComplexGridField::constant(off, Complex64::default());
        assert!(matches!(
            passenger_axis_identity(&z, AxisData::Samples(&[])),
            Err(Error::AxisAbsent)
        ));
    }

    #[test]
    fn coefficient_bounds() {
        let delta = 0.1;
        let g = GridSpec::new(0.0, 1.0, -1.0, 1.0, 41, 41).unwrap();
        let one = ComplexGridField::constant(g, Complex64::new(1.0, 0.0));
        let zero = ComplexGridField::constant(g, Complex64::default());
        let l = delta_lambda(delta, &g);
        let chart = build_chart(&l, StencilOrder::Second).unwrap();
        let reduced = reduce(&VekuaProblem::new(l, one.clone(), zero.clone(), zero.clone()).unwrap(), &chart, StencilOrder::Second)
            .unwrap();
        let rep = coefficient_bound_report(&reduced, 0, None).unwrap();
        // min |Φ| = 2δ/(1+1)² at x = 1.
        assert!((rep.min_phi - delta / 2.0).abs() < 1e-12);
        assert!((rep.bound_factor - 2.0 / delta).abs() < 1e-9);
        assert!(rep.holds);
        let sol = burgers_field(&BuiltinSeed::Delta { delta }, &g, &BurgersOptions::default()).unwrap();
        let rep = coefficient_bound_report(&reduced, 0, Some(&sol.j)).unwrap();
        assert_eq!(rep.method, BoundMethod::Jacobian);
        assert!((rep.bound_factor - 2.0 / delta).abs() < 1e-9);
        assert!(rep.holds);
        // λ = i: |Φ| = 2.
        let s = standard(&g);
        let chart = build_chart(&s, StencilOrder::Second).unwrap();
        let reduced = reduce(&VekuaProblem::new(s, one, zero.clone(), zero).unwrap(), &chart, StencilOrder::Second).unwrap();
        let rep = coefficient_bound_report(&reduced, 2, None).unwrap();
        assert_eq!(rep.bound_factor, 0.5);
        assert_eq!(rep.measured_max_ratio, 0.5);
        assert!(rep.holds);
    }

    #[test]
    fn coefficient_bound_for_exp_seed() {
        let g = GridSpec::new(-0.5, 0.5, -0.5, 0.5, 41, 41).unwrap();
        let s = ExprSeed::new("i*exp(w)", &Params::new()).unwrap();
        let sol = burgers_field(&s, &g, &BurgersOptions::default()).unwrap();
        let l = sol.spectral().unwrap();
        let chart = build_chart(&l, StencilOrder::Second).unwrap();
        let a = sample_expression("1 + x*x + i*y", &Params::new(), &g).unwrap();
        let zero = ComplexGridField::constant(g, Complex64::default());
        let reduced = reduce(&VekuaProblem::new(l, a, zero.clone(), zero).unwrap(), &chart, StencilOrder::Second).unwrap();
        let rep = coefficient_bound_report(&reduced, 2, Some(&sol.j)).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.measured_max_ratio > 0.0);
    }
}
