use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::fiber::{AlgebraElement, Fiber};
use crate::error::{Error, Result};
use crate::numerics::{partial_x, partial_y, GridSpec, RealGridField, StencilOrder};
use crate::seedlang::{parse_constant, BoundExpr, Expression, Params};
use crate::spectral::{LambdaJet, LambdaProvider};

/// A named elliptic structure with closed-form coefficients and partials.
#[derive(Debug, Clone, PartialEq)]
pub enum EllipticStructure {
    /// Constant `(α, β)`.
    Constant { alpha: f64, beta: f64 },
    /// `α = (y² + δ²)/(1+x)²`, `β = −2y/(1+x)` on `x > −1`, whose spectral
    /// parameter is `λ = (y + iδ)/(1+x)`.
    DeltaFamily { delta: f64 },
    /// Structure given through its spectral parameter `λ(x, y)`.
    CustomLambda { text: String, expr: BoundExpr },
}

impl EllipticStructure {
    pub fn constant(alpha: f64, beta: f64) -> Result<Self> {
        Fiber::new(alpha, beta)?;
        Ok(EllipticStructure::Constant { alpha, beta })
    }

    pub fn delta_family(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        Ok(EllipticStructure::DeltaFamily { delta })
    }

    /// `text` is an expression in `x` and `y`, e.g. `"x + i"`.
    pub fn custom_lambda(text: &str, params: &Params) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let expr = Expression::field(text, &names)?.bind(params)?;
        Ok(EllipticStructure::CustomLambda {
            text: text.to_string(),
            expr,
        })
    }

    pub fn description(&self) -> String {
        match self {
            EllipticStructure::Constant { alpha, beta } => format!("constant(alpha={alpha}, beta={beta})"),
            EllipticStructure::DeltaFamily { delta } => format!("delta_family(delta={delta})"),
            EllipticStructure::CustomLambda { text, .. } => format!("custom_lambda({text})"),
        }
    }

    /// `(α, β)` and their four partials at a point.
    pub fn coefficients_at(&self, x: f64, y: f64) -> Result<CoefficientJet> {
        match self {
            EllipticStructure::Constant { alpha, beta } => Ok(CoefficientJet {
                alpha: *alpha,
                beta: *beta,
                ..Default::default()
            }),
            EllipticStructure::DeltaFamily { delta } => {
                let s = 1.0 + x;
                if !(s > 0.0) {
                    return Err(Error::OutsideDomain {
                        x,
                        y,
                        reason: "the delta family lives on x > -1".into(),
                    });
                }
                let r = y * y + delta * delta;
                Ok(CoefficientJet {
                    alpha: r / (s * s),
                    beta: -2.0 * y / s,
                    alpha_x: -2.0 * r / (s * s * s),
                    alpha_y: 2.0 * y / (s * s),
                    beta_x: 2.0 * y / (s * s),
                    beta_y: -2.0 / s,
                })
            }
            EllipticStructure::CustomLambda { .. } => {
                let jet = self.lambda_jet(x, y)?;
                let (l, lx, ly) = (jet.value, jet.dx, jet.dy);
                Ok(CoefficientJet {
                    alpha: l.norm_sqr(),
                    beta: -2.0 * l.re,
                    alpha_x: 2.0 * (l.conj() * lx).re,
                    alpha_y: 2.0 * (l.conj() * ly).re,
                    beta_x: -2.0 * lx.re,
                    beta_y: -2.0 * ly.re,
                })
            }
        }
    }

    /// Samples the structure; any point where it is undefined or degenerate
    /// is an error.
    pub fn sample(&self, grid: &GridSpec) -> Result<SampledStructure> {
        let mut jets = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (x, y) = grid.point(k);
            let c = self.coefficients_at(x, y)?;
            Fiber::at(c.alpha, c.beta, x, y)?;
            jets.push(c);
        }
        let field = |f: fn(&CoefficientJet) -> f64| {
            RealGridField::new(*grid, jets.iter().map(f).collect(), vec![true; grid.len()])
        };
        SampledStructure::with_partials(
            field(|c| c.alpha)?,
            field(|c| c.beta)?,
            StructurePartials {
                alpha_x: field(|c| c.alpha_x)?,
                alpha_y: field(|c| c.alpha_y)?,
                beta_x: field(|c| c.beta_x)?,
                beta_y: field(|c| c.beta_y)?,
            },
            self.description(),
        )
    }
}

impl LambdaProvider for EllipticStructure {
    fn lambda_jet(&self, x: f64, y: f64) -> Result<LambdaJet> {
        match self {
            EllipticStructure::CustomLambda { expr, .. } => {
                let (value, dx, dy) = expr.value_and_partials(x, y)?;
                if !(value.im > 0.0) {
                    return Err(Error::EllipticityViolated { x, y, im: value.im });
                }
                Ok(LambdaJet { value, dx, dy })
            }
            _ => {
                let c = self.coefficients_at(x, y)?;
                let fiber = Fiber::at(c.alpha, c.beta, x, y)?;
                Ok(c.lambda_jet(&fiber))
            }
        }
    }
}

/// Pointwise values of `α`, `β` and their first partials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoefficientJet {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub beta_x: f64,
    pub beta_y: f64,
}

impl CoefficientJet {
    /// `λ` with partials from differentiating `λ² + βλ + α = 0`:
    /// `λ_x = −(α_x + β_x λ)/(2λ + β)`.
    pub fn lambda_jet(&self, fiber: &Fiber) -> LambdaJet {
        let l = fiber.lambda();
        let d = l * 2.0 + self.beta;
        LambdaJet {
            value: l,
            dx: -(l * self.beta_x + self.alpha_x) / d,
            dy: -(l * self.beta_y + self.alpha_y) / d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructurePartials {
    pub alpha_x: RealGridField,
    pub alpha_y: RealGridField,
    pub beta_x: RealGridField,
    pub beta_y: RealGridField,
}

/// `(α, β)` sampled on a grid, checked elliptic at every valid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStructure {
    alpha: RealGridField,
    beta: RealGridField,
    partials: Option<StructurePartials>,
    description: String,
}

impl SampledStructure {
    pub fn new(alpha: RealGridField, beta: RealGridField, description: impl Into<String>) -> Result<Self> {
        alpha.check_same_grid(beta.spec())?;
        if alpha.mask() != beta.mask() {
            return Err(Error::ShapeMismatch("alpha and beta masks differ".into()));
        }
        let spec = *alpha.spec();
        for k in 0..spec.len() {
            if alpha.mask()[k] {
                let (x, y) = spec.point(k);
                Fiber::at(alpha.values()[k], beta.values()[k], x, y)?;
            }
        }
        Ok(Self {
            alpha,
            beta,
            partials: None,
            description: description.into(),
        })
    }

    pub fn with_partials(
        alpha: RealGridField,
        beta: RealGridField,
        partials: StructurePartials,
        description: impl Into<String>,
    ) -> Result<Self> {
        let mut s = Self::new(alpha, beta, description)?;
        for f in [&partials.alpha_x, &partials.alpha_y, &partials.beta_x, &partials.beta_y] {
            f.check_same_grid(s.spec())?;
        }
        s.partials = Some(partials);
        Ok(s)
    }

    pub fn spec(&self) -> &GridSpec {
        self.alpha.spec()
    }

    pub fn alpha(&self) -> &RealGridField {
        &self.alpha
    }

    pub fn beta(&self) -> &RealGridField {
        &self.beta
    }

    pub fn mask(&self) -> &[bool] {
        self.alpha.mask()
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn analytic_partials(&self) -> Option<&StructurePartials> {
        self.partials.as_ref()
    }

    /// The fiber at flat index `k`; `None` at masked points.
    pub fn fiber(&self, k: usize) -> Option<Fiber> {
        if !self.mask()[k] {
            return None;
        }
        Some(Fiber::new(self.alpha.values()[k], self.beta.values()[k]).expect("validated at construction"))
    }

    /// Analytic partials when attached, centred differences otherwise.
    pub fn partials(&self, order: StencilOrder) -> Result<StructurePartials> {
        if let Some(p) = &self.partials {
            return Ok(p.clone());
        }
        Ok(StructurePartials {
            alpha_x: partial_x(&self.alpha, order)?,
            alpha_y: partial_y(&self.alpha, order)?,
            beta_x: partial_x(&self.beta, order)?,
            beta_y: partial_y(&self.beta, order)?,
        })
    }

    /// The obstruction `G = i_x + i·i_y`, obtained by differentiating the
    /// structure relation and dividing by `β + 2i`, whose norm is `Δ`.
    pub fn obstruction_field(&self, order: StencilOrder) -> Result<ObstructionField> {
        let p = self.partials(order)?;
        let spec = *self.spec();
        let mut g0 = Vec::with_capacity(spec.len());
        let mut g1 = Vec::with_capacity(spec.len());
        let mut mask = Vec::with_capacity(spec.len());
        for k in 0..spec.len() {
            let valid = self.mask()[k]
                && p.alpha_x.mask()[k]
                && p.alpha_y.mask()[k]
                && p.beta_x.mask()[k]
                && p.beta_y.mask()[k];
            mask.push(valid);
            if !valid {
                g0.push(0.0);
                g1.push(0.0);
                continue;
            }
            let fiber = self.fiber(k).expect("valid point");
            let (a, b) = (fiber.alpha(), fiber.beta());
            let (ax, ay) = (p.alpha_x.values()[k], p.alpha_y.values()[k]);
            let (bx, by) = (p.beta_x.values()[k], p.beta_y.values()[k]);
            let numerator = AlgebraElement::new(-ax + by * a, -bx + by * b - ay);
            let g = fiber.mul(numerator, fiber.inv(AlgebraElement::new(b, 2.0))?);
            g0.push(g.u);
            g1.push(g.v);
        }
        Ok(ObstructionField {
            g0: RealGridField::new(spec, g0, mask.clone())?,
            g1: RealGridField::new(spec, g1, mask)?,
        })
    }
}

/// Components of `G = G₀ + G₁ i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionField {
    pub g0: RealGridField,
    pub g1: RealGridField,
}

/// Serialized description of a structure source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StructureSpec {
    Named {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, serde_json::Value>,
    },
    Sampled {
        files: SampledFiles,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFiles {
    pub alpha: PathBuf,
    pub beta: PathBuf,
}

/// A structure ready for sampling: either a closed form or files on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureSource {
    Named(EllipticStructure),
    Sampled(Box<SampledStructure>),
}

impl StructureSource {
    /// Samples a named structure on `grid`; sampled structures must already
    /// live on `grid`.
    pub fn sample(&self, grid: &GridSpec) -> Result<SampledStructure> {
        match self {
            StructureSource::Named(s) => s.sample(grid),
            StructureSource::Sampled(s) => {
                s.alpha().check_same_grid(grid)?;
                Ok((**s).clone())
            }
        }
    }

    pub fn description(&self) -> String {
        match self {
            StructureSource::Named(s) => s.description(),
            StructureSource::Sampled(s) => s.description().to_string(),
        }
    }

    pub fn named(&self) -> Option<&EllipticStructure> {
        match self {
            StructureSource::Named(s) => Some(s),
            StructureSource::Sampled(_) => None,
        }
    }
}

fn param_value(params: &BTreeMap<String, serde_json::Value>, key: &str) -> Result<Option<Complex64>> {
    match params.get(key) {
        None => Ok(None),
        Some(serde_json::Value::Number(n)) => Ok(Some(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0))),
        Some(serde_json::Value::String(s)) => Ok(Some(parse_constant(s)?)),
        Some(other) => Err(Error::InvalidArgument(format!("parameter `{key}` has unsupported value {other}"))),
    }
}

fn real_param(params: &BTreeMap<String, serde_json::Value>, key: &str, default: Option<f64>) -> Result<f64> {
    match param_value(params, key)? {
        Some(c) if c.im == 0.0 => Ok(c.re),
        Some(c) => Err(Error::InvalidArgument(format!("parameter `{key}` must be real, got {c}"))),
        None => default.ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`"))),
    }
}

impl StructureSpec {
    /// Resolves the spec; relative file paths are taken from `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<StructureSource> {
        match self {
            StructureSpec::Named { name, params } => {
                let s = match name.as_str() {
                    "constant" => EllipticStructure::constant(
                        real_param(params, "alpha", Some(1.0))?,
                        real_param(params, "beta", Some(0.0))?,
                    )?,
                    "delta_family" | "delta" => EllipticStructure::delta_family(real_param(params, "delta", None)?)?,
                    "custom_lambda" | "custom" => {
                        let text = match params.get("lambda") {
                            Some(serde_json::Value::String(s)) => s.clone(),
                            _ => {
                                return Err(Error::InvalidArgument(
                                    "custom_lambda needs a string parameter `lambda`".into(),
                                ))
                            }
                        };
                        let mut bound = Params::new();
                        for key in params.keys().filter(|k| k.as_str() != "lambda") {
                            bound.insert(key.clone(), param_value(params, key)?.expect("key present"));
                        }
                        EllipticStructure::custom_lambda(&text, &bound)?
                    }
                    other => return Err(Error::InvalidArgument(format!("unknown structure `{other}`"))),
                };
                Ok(StructureSource::Named(s))
            }
            StructureSpec::Sampled { files } => {
                let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                let alpha = crate::io::read_real_csv(&resolve(&files.alpha))?;
                let beta = crate::io::read_real_csv(&resolve(&files.beta))?;
                Ok(StructureSource::Sampled(Box::new(SampledStructure::new(
                    alpha,
                    beta,
                    format!("sampled({}, {})", files.alpha.display(), files.beta.display()),
                )?)))
            }
        }
    }
}
