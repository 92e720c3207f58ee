//! The Burgers transform: `λ = h(y − λx)` solved by Newton continuation
//! outward from the axis, with characteristic Jacobian `J = 1 + h′(w₀)x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{ComplexGridField, GridSpec, RealGridField};
use crate::seedlang::{BoundExpr, Expression, Params};
use crate::spectral::{LambdaJet, LambdaProvider, Provenance, SpectralField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A holomorphic seed `h` with derivative `h′`.
pub trait Seed: Send + Sync + fmt::Debug {
    fn eval(&self, w: Complex64) -> Result<(Complex64, Complex64)>;
    fn describe(&self) -> String;
}

/// Named seeds: `delta` is `w + iδ`, `affine` is `a·w + b`, `exp` is
/// `i·exp(c·w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinSeed {
    Delta { delta: f64 },
    Affine { a: Complex64, b: Complex64 },
    Exp { c: Complex64 },
}

impl BuiltinSeed {
    pub const NAMES: [&'static str; 3] = ["delta", "affine", "exp"];

    /// Looks up a named seed. Missing parameters take the defaults
    /// `delta = 0.1`, `a = 1`, `b = i`, `c = 1`.
    pub fn from_name(name: &str, params: &Params) -> Result<Option<Self>> {
        let get = |k: &str, d: Complex64| params.get(k).copied().unwrap_or(d);
        Ok(Some(match name {
            "delta" => {
                let d = get("delta", Complex64::new(0.1, 0.0));
                if d.im != 0.0 || !(d.re > 0.0) {
                    return Err(Error::InvalidArgument(format!("delta must be real and positive, got {d}")));
                }
                BuiltinSeed::Delta { delta: d.re }
            }
            "affine" => BuiltinSeed::Affine {
                a: get("a", Complex64::new(1.0, 0.0)),
                b: get("b", I),
            },
            "exp" => BuiltinSeed::Exp {
                c: get("c", Complex64::new(1.0, 0.0)),
            },
            _ => return Ok(None),
        }))
    }
}

impl Seed for BuiltinSeed {
    fn eval(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        Ok(match *self {
            BuiltinSeed::Delta { delta } => (w + I * delta, Complex64::new(1.0, 0.0)),
            BuiltinSeed::Affine { a, b } => (a * w + b, a),
            BuiltinSeed::Exp { c } => {
                let e = I * (c * w).exp();
                (e, c * e)
            }
        })
    }

    fn describe(&self) -> String {
        match self {
            BuiltinSeed::Delta { delta } => format!("delta(delta={delta})"),
            BuiltinSeed::Affine { a, b } => format!("affine(a={a}, b={b})"),
            BuiltinSeed::Exp { c } => format!("exp(c={c})"),
        }
    }
}

/// A seed parsed from an expression in `w`; `h′` comes from dual numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprSeed {
    text: String,
    expr: BoundExpr,
}

impl ExprSeed {
    pub fn new(text: &str, params: &Params) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let expr = Expression::seed(text, &names)?.bind(params)?;
        Ok(Self {
            text: text.to_string(),
            expr,
        })
    }
}

impl Seed for ExprSeed {
    fn eval(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        Ok(self.expr.value_and_derivative(w)?)
    }

    fn describe(&self) -> String {
        format!("expr({})", self.text)
    }
}

/// A built-in seed when `text` names one, otherwise a parsed expression.
pub fn resolve_seed(text: &str, params: &Params) -> Result<Box<dyn Seed>> {
    match BuiltinSeed::from_name(text.trim(), params)? {
        Some(s) => Ok(Box::new(s)),
        None => Ok(Box::new(ExprSeed::new(text, params)?)),
    }
}

/// Newton settings for the implicit equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Points with `|J|` below this are outside the Burgers domain.
    pub j_min: f64,
    /// Column to start from when the grid has no `x = 0` column.
    pub start_x: Option<f64>,
}

impl Default for BurgersOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            j_min: 1e-8,
            start_x: None,
        }
    }
}

const MAX_HALVINGS: usize = 20;

/// A converged point of the implicit equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersPoint {
    pub lambda: Complex64,
    pub j: Complex64,
    pub w0: Complex64,
    pub h_prime: Complex64,
    pub iterations: usize,
}

/// Newton on `F(λ) = λ − h(y − λx)` with `F′(λ) = J = 1 + xh′(y − λx)`.
pub fn burgers_solve_point(
    seed: &dyn Seed,
    x: f64,
    y: f64,
    initial: Complex64,
    options: &BurgersOptions,
) -> Result<BurgersPoint> {
    let residual = |l: Complex64| -> Result<(Complex64, Complex64, Complex64)> {
        let w = Complex64::new(y, 0.0) - l * x;
        let (h, hp) = seed.eval(w)?;
        Ok((l - h, 1.0 + hp * x, hp))
    };
    let mut l = initial;
    let (mut f, mut j, mut hp) = residual(l)?;
    let mut iterations = 0;
    while !(f.norm() <= options.tol) {
        if iterations == options.max_iter {
            return Err(Error::NoConvergence {
                x,
                y,
                iters: iterations,
                residual: f.norm(),
            });
        }
        if !(j.norm() >= options.j_min) {
            return Err(Error::NearShock { x, y, j: j.norm() });
        }
        iterations += 1;
        let step = f / j;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate = l - step * t;
            if let Ok((nf, nj, nhp)) = residual(candidate) {
                if nf.norm() < f.norm() {
                    (l, f, j, hp) = (candidate, nf, nj, nhp);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                x,
                y,
                iters: iterations,
                residual: f.norm(),
            });
        }
    }
    if !(j.norm() >= options.j_min) {
        return Err(Error::NearShock { x, y, j: j.norm() });
    }
    if !(l.im > 0.0) {
        return Err(Error::EllipticityLost { x, y, im: l.im });
    }
    Ok(BurgersPoint {
        lambda: l,
        j,
        w0: Complex64::new(y, 0.0) - l * x,
        h_prime: hp,
        iterations,
    })
}

/// Why a grid point lies outside the computed Burgers domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskReason {
    NearShock,
    NoConvergence,
    EllipticityLost,
    SeedError,
    /// An inward neighbour in the same row already failed.
    BeyondFailure,
}

impl MaskReason {
    fn from_error(e: &Error) -> Self {
        match e {
            Error::NearShock { .. } => MaskReason::NearShock,
            Error::NoConvergence { .. } => MaskReason::NoConvergence,
            Error::EllipticityLost { .. } => MaskReason::EllipticityLost,
            _ => MaskReason::SeedError,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MaskReason::NearShock => "near_shock",
            MaskReason::NoConvergence => "no_convergence",
            MaskReason::EllipticityLost => "ellipticity_lost",
            MaskReason::SeedError => "seed_error",
            MaskReason::BeyondFailure => "beyond_failure",
        }
    }
}

/// `λ`, `J`, `w₀` and `h′(w₀)` on the computed Burgers domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersSolution {
    pub lambda: ComplexGridField,
    pub j: ComplexGridField,
    pub w0: ComplexGridField,
    pub h_prime: ComplexGridField,
    /// Newton iterations per point (0 where masked).
    pub iterations: Vec<usize>,
    pub reasons: Vec<Option<MaskReason>>,
    pub seed: String,
    pub options: BurgersOptions,
}

/// Solves on every grid point, continuing column by column from the axis
/// (or `options.start_x`), first towards `+x` and then towards `−x`. Each
/// Newton solve starts from the inward neighbour's `λ`; once a point fails,
/// the rest of its row on that side is masked.
pub fn burgers_field(seed: &dyn Seed, grid: &GridSpec, options: &BurgersOptions) -> Result<BurgersSolution> {
    let i0 = match options.start_x {
        Some(x0) => grid
            .exact_column(x0)
            .ok_or_else(|| Error::NoInitialColumn(format!("x = {x0} is not a grid column")))?,
        None => grid
            .exact_column(0.0)
            .ok_or_else(|| Error::NoInitialColumn("the axis x = 0 is not a grid column".into()))?,
    };
    let n = grid.len();
    let mut points: Vec<Option<BurgersPoint>> = vec![None; n];
    let mut reasons: Vec<Option<MaskReason>> = vec![None; n];
    for j in 0..grid.ny() {
        let y = grid.y(j);
        let start = grid.index(i0, j);
        let guess = seed.eval(Complex64::new(y, 0.0)).map(|(h, _)| h);
        match guess.and_then(|g| burgers_solve_point(seed, grid.x(i0), y, g, options)) {
            Ok(p) => points[start] = Some(p),
            Err(e) => reasons[start] = Some(MaskReason::from_error(&e)),
        }
        let outward: [Box<dyn Iterator<Item = usize>>; 2] = [Box::new(i0 + 1..grid.nx()), Box::new((0..i0).rev())];
        for side in outward {
            let mut prev = start;
            for i in side {
                let k = grid.index(i, j);
                match points[prev] {
                    Some(p) => match burgers_solve_point(seed, grid.x(i), y, p.lambda, options) {
                        Ok(p) => points[k] = Some(p),
                        Err(e) => reasons[k] = Some(MaskReason::from_error(&e)),
                    },
                    None => reasons[k] = Some(MaskReason::BeyondFailure),
                }
                prev = k;
            }
        }
    }
    let mask: Vec<bool> = points.iter().map(Option::is_some).collect();
    let field = |f: fn(&BurgersPoint) -> Complex64| {
        ComplexGridField::new(
            *grid,
            points.iter().map(|p| p.as_ref().map(f).unwrap_or_default()).collect(),
            mask.clone(),
        )
    };
    Ok(BurgersSolution {
        lambda: field(|p| p.lambda)?,
        j: field(|p| p.j)?,
        w0: field(|p| p.w0)?,
        h_prime: field(|p| p.h_prime)?,
        iterations: points.iter().map(|p| p.map_or(0, |p| p.iterations)).collect(),
        reasons,
        seed: seed.describe(),
        options: *options,
    })
}

impl BurgersSolution {
    pub fn spec(&self) -> &GridSpec {
        self.lambda.spec()
    }

    /// `λ` with analytic partials `λ_y = h′(w₀)/J` and `λ_x = −λλ_y`.
    pub fn spectral(&self) -> Result<SpectralField> {
        let ly = self.h_prime.zip_map(&self.j, |hp, j| hp / j)?;
        let lx = self.lambda.zip_map(&ly, |l, ly| -l * ly)?;
        SpectralField::with_partials(self.lambda.clone(), Provenance::FromBurgers, lx, ly)
    }

    /// `max |λ − h(y − λx)|` over the unmasked points, re-evaluating the seed.
    pub fn self_certification(&self, seed: &dyn Seed) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in (0..self.spec().len()).filter(|&k| self.lambda.mask()[k]) {
            let (x, y) = self.spec().point(k);
            let l = self.lambda.values()[k];
            let (h, _) = seed.eval(Complex64::new(y, 0.0) - l * x)?;
            worst = worst.max((l - h).norm());
        }
        Ok(worst)
    }

    /// `max |J − (1 + h′(w₀)x)| / |J|`, re-evaluating the seed.
    pub fn j_consistency(&self, seed: &dyn Seed) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in (0..self.spec().len()).filter(|&k| self.j.mask()[k]) {
            let (x, _) = self.spec().point(k);
            let (_, hp) = seed.eval(self.w0.values()[k])?;
            let j = self.j.values()[k];
            worst = worst.max((j - (1.0 + hp * x)).norm() / j.norm());
        }
        Ok(worst)
    }

    /// Counts of masked points per reason.
    pub fn reason_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for r in self.reasons.iter().flatten() {
            *out.entry(r.as_str()).or_insert(0) += 1;
        }
        out
    }

    pub fn iterations_field(&self) -> Result<RealGridField> {
        RealGridField::new(
            *self.spec(),
            self.iterations.iter().map(|&n| n as f64).collect(),
            self.lambda.mask().to_vec(),
        )
    }

    /// For each row, the smallest unmasked `x` (None for empty rows).
    pub fn left_boundary(&self) -> Vec<Option<f64>> {
        let g = self.spec();
        (0..g.ny())
            .map(|j| (0..g.nx()).find(|&i| self.lambda.is_valid(i, j)).map(|i| g.x(i)))
            .collect()
    }
}

/// Evaluates the Burgers `λ` at arbitrary points by continuing along the
/// segment from `(x_axis, y)` in steps of at most `max_step`.
#[derive(Debug)]
pub struct BurgersProvider<'a> {
    pub seed: &'a dyn Seed,
    pub options: BurgersOptions,
    pub max_step: f64,
}

impl<'a> BurgersProvider<'a> {
    pub fn new(seed: &'a dyn Seed, options: BurgersOptions) -> Self {
        Self {
            seed,
            options,
            max_step: 0.05,
        }
    }

    pub fn point(&self, x: f64, y: f64) -> Result<BurgersPoint> {
        let x0 = self.options.start_x.unwrap_or(0.0);
        let (mut guess, _) = self.seed.eval(Complex64::new(y, 0.0))?;
        let steps = ((x - x0).abs() / self.max_step).ceil().max(1.0) as usize;
        let mut last = None;
        for s in 0..=steps {
            let xs = x0 + (x - x0) * s as f64 / steps as f64;
            let p = burgers_solve_point(self.seed, xs, y, guess, &self.options)?;
            guess = p.lambda;
            last = Some(p);
        }
        Ok(last.expect("at least one step"))
    }
}

impl LambdaProvider for BurgersProvider<'_> {
    fn lambda_jet(&self, x: f64, y: f64) -> Result<LambdaJet> {
        let p = self.point(x, y)?;
        let dy = p.h_prime / p.j;
        Ok(LambdaJet {
            value: p.lambda,
            dx: -p.lambda * dy,
            dy,
        })
    }
}
