//! A small expression language for holomorphic seeds and coefficient fields.
//!
//! Grammar, loosest binding first:
//!
//! | level | syntax                     | associativity |
//! |-------|----------------------------|---------------|
//! | 1     | `a + b`, `a - b`           | left          |
//! | 2     | `a * b`, `a / b`           | left          |
//! | 3     | `a ^ n` (integer literal)  | left          |
//! | 4     | `-a`                       | prefix        |
//! | 5     | literals, names, `f(a)`, `(a)` |           |
//!
//! Unary minus binds tighter than `^`, so `-w^2` is `(-w)^2`. Literals are
//! real (`2`, `0.5`, `1e-3`) or imaginary (`2i`, `0.5i`, bare `i`); `a+bi`
//! is the sum of two literals. Functions are `exp`, `log`, `sin`, `cos` and
//! `sqrt`; `log` and `sqrt` use principal branches with the cut on the
//! negative real axis. Division by zero and `log`/`sqrt` at zero raise
//! [`SeedError::Singular`] at evaluation time.

mod eval;
mod parser;

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub use eval::{DualComplex, Scalar};

/// Parameter bindings. Values may be complex.
pub type Params = BTreeMap<String, Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeedError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{function}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),

    #[error("singular evaluation ({op}) at {at}")]
    Singular { op: String, at: String },

    #[error("non-finite result at {0}")]
    NonFinite(String),

    #[error("bad parameter binding `{0}` (expected name=value)")]
    BadBinding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Expression tree. Variables are indices into the owning
/// [`Expression`]'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Complex64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// A parsed expression together with its variable and parameter names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Expr,
    variables: Vec<String>,
    parameters: Vec<String>,
}

/// A seed `h(w)`.
pub type SeedExpr = Expression;

impl Expression {
    pub fn parse(text: &str, variables: &[&str], parameters: &[&str]) -> Result<Self, SeedError> {
        let variables: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let mut parameters: Vec<String> = parameters.iter().map(|s| s.to_string()).collect();
        parameters.sort();
        parameters.dedup();
        let root = parser::Parser::new(text, &variables, &parameters)?.parse()?;
        Ok(Self {
            root,
            variables,
            parameters,
        })
    }

    /// An expression in the single variable `w`.
    pub fn seed(text: &str, parameters: &[&str]) -> Result<Self, SeedError> {
        Self::parse(text, &["w"], parameters)
    }

    /// An expression in the real coordinates `x` and `y`.
    pub fn field(text: &str, parameters: &[&str]) -> Result<Self, SeedError> {
        Self::parse(text, &["x", "y"], parameters)
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    /// Substitutes parameter values. Every declared parameter must be bound.
    pub fn bind(&self, params: &Params) -> Result<BoundExpr, SeedError> {
        for p in &self.parameters {
            if !params.contains_key(p) {
                return Err(SeedError::UnboundParameter(p.clone()));
            }
        }
        Ok(BoundExpr {
            root: substitute(&self.root, params),
            variables: self.variables.clone(),
        })
    }

    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atomic = |e: &Expr| matches!(e, Expr::Var(_) | Expr::Param(_) | Expr::Call(..))
            || matches!(e, Expr::Lit(c) if c.re == 0.0 || c.im == 0.0);
        match e {
            Expr::Lit(c) => write_literal(*c, f),
            Expr::Var(k) => write!(f, "{}", self.variables[*k]),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                self.write_wrapped(a, atomic(a), f)
            }
            Expr::Pow(a, n) => {
                self.write_wrapped(a, atomic(a), f)?;
                write!(f, "^{n}")
            }
            Expr::Add(a, b) => self.write_binary(a, "+", b, f),
            Expr::Sub(a, b) => self.write_binary(a, "-", b, f),
            Expr::Mul(a, b) => self.write_binary(a, "*", b, f),
            Expr::Div(a, b) => self.write_binary(a, "/", b, f),
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write(a, f)?;
                write!(f, ")")
            }
        }
    }

    fn write_wrapped(&self, e: &Expr, bare: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if bare {
            self.write(e, f)
        } else {
            write!(f, "(")?;
            self.write(e, f)?;
            write!(f, ")")
        }
    }

    fn write_binary(&self, a: &Expr, op: &str, b: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        self.write(a, f)?;
        write!(f, " {op} ")?;
        self.write(b, f)?;
        write!(f, ")")
    }
}

fn write_literal(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{:?}", c.re)
    } else if c.re == 0.0 {
        write!(f, "{:?}i", c.im)
    } else {
        // Never produced by the parser; prints as a sum.
        write!(f, "({:?} + {:?}i)", c.re, c.im)
    }
}

/// Fully parenthesised; reparsing yields an identical tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(&self.root, f)
    }
}

fn substitute(e: &Expr, params: &Params) -> Expr {
    let sub = |a: &Expr| Box::new(substitute(a, params));
    match e {
        Expr::Param(p) => Expr::Lit(params[p]),
        Expr::Lit(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(a) => Expr::Neg(sub(a)),
        Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
        Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
        Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
        Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
        Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
        Expr::Call(func, a) => Expr::Call(*func, sub(a)),
    }
}

/// An expression with all parameters substituted, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    root: Expr,
    variables: Vec<String>,
}

impl BoundExpr {
    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn eval(&self, vars: &[Complex64]) -> Result<Complex64, SeedError> {
        self.eval_generic(vars)
    }

    pub fn eval_dual(&self, vars: &[DualComplex]) -> Result<DualComplex, SeedError> {
        self.eval_generic(vars)
    }

    fn eval_generic<S: Scalar>(&self, vars: &[S]) -> Result<S, SeedError> {
        assert_eq!(vars.len(), self.variables.len(), "variable count");
        let v = eval::eval(&self.root, vars)?;
        if !v.is_finite() {
            let at: Vec<String> = vars.iter().map(|s| format!("{}", s.value())).collect();
            return Err(SeedError::NonFinite(at.join(", ")));
        }
        Ok(v)
    }

    /// `h(w)` and `h′(w)` for a one-variable expression.
    pub fn value_and_derivative(&self, w: Complex64) -> Result<(Complex64, Complex64), SeedError> {
        let d = self.eval_dual(&[DualComplex::variable(w)])?;
        Ok((d.value, d.deriv))
    }

    /// Value and real partials `(f, f_x, f_y)` of a two-variable expression
    /// at the real point `(x, y)`.
    pub fn value_and_partials(&self, x: f64, y: f64) -> Result<(Complex64, Complex64, Complex64), SeedError> {
        let (cx, cy) = (Complex64::new(x, 0.0), Complex64::new(y, 0.0));
        let dx = self.eval_dual(&[DualComplex::variable(cx), DualComplex::constant(cy)])?;
        let dy = self.eval_dual(&[DualComplex::constant(cx), DualComplex::variable(cy)])?;
        Ok((dx.value, dx.deriv, dy.deriv))
    }
}

pub fn parse_seed(text: &str, parameters: &[&str]) -> Result<SeedExpr, SeedError> {
    Expression::seed(text, parameters)
}

pub fn eval_seed(expr: &SeedExpr, w: Complex64, params: &Params) -> Result<Complex64, SeedError> {
    expr.bind(params)?.eval(&[w])
}

pub fn eval_seed_dual(expr: &SeedExpr, w: Complex64, params: &Params) -> Result<DualComplex, SeedError> {
    expr.bind(params)?.eval_dual(&[DualComplex::variable(w)])
}

/// Parses a constant such as `0.1`, `2i` or `1-0.5i`.
pub fn parse_constant(text: &str) -> Result<Complex64, SeedError> {
    Expression::parse(text, &[], &[])?.bind(&Params::new())?.eval(&[])
}

/// Parses `name=value` bindings separated by commas, e.g. `delta=0.1,b=1i`.
pub fn parse_params(text: &str) -> Result<Params, SeedError> {
    let mut out = Params::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| SeedError::BadBinding(item.to_string()))?;
        let name = name.trim();
        let valid_name = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid_name {
            return Err(SeedError::BadBinding(item.to_string()));
        }
        out.insert(name.to_string(), parse_constant(value.trim())?);
    }
    Ok(out)
}
