use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use super::{Expr, Func, SeedError};

/// A complex value paired with its derivative along one direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualComplex {
    pub value: Complex64,
    pub deriv: Complex64,
}

impl DualComplex {
    pub fn new(value: Complex64, deriv: Complex64) -> Self {
        Self { value, deriv }
    }

    pub fn constant(value: Complex64) -> Self {
        Self {
            value,
            deriv: Complex64::new(0.0, 0.0),
        }
    }

    pub fn variable(value: Complex64) -> Self {
        Self {
            value,
            deriv: Complex64::new(1.0, 0.0),
        }
    }
}

impl Add for DualComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for DualComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for DualComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
        )
    }
}

impl Neg for DualComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

/// Number types the evaluator runs over. The value part of every operation
/// must be computed exactly as the plain complex operation would.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn constant(c: Complex64) -> Self;
    fn value(self) -> Complex64;
    /// Caller guarantees `rhs.value() != 0`.
    fn div(self, rhs: Self) -> Self;
    fn exp(self) -> Self;
    /// Caller guarantees `self.value() != 0`.
    fn ln(self) -> Self;
    /// Caller guarantees `self.value() != 0`.
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for Complex64 {
    fn constant(c: Complex64) -> Self {
        c
    }
    fn value(self) -> Complex64 {
        self
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Scalar for DualComplex {
    fn constant(c: Complex64) -> Self {
        DualComplex::constant(c)
    }
    fn value(self) -> Complex64 {
        self.value
    }
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Self::new(q, (self.deriv - q * rhs.deriv) / rhs.value)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        Self::new(e, self.deriv * e)
    }
    fn ln(self) -> Self {
        Self::new(self.value.ln(), self.deriv / self.value)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Self::new(s, self.deriv / (s * 2.0))
    }
    fn sin(self) -> Self {
        Self::new(self.value.sin(), self.deriv * self.value.cos())
    }
    fn cos(self) -> Self {
        Self::new(self.value.cos(), -(self.deriv * self.value.sin()))
    }
    fn is_finite(self) -> bool {
        Scalar::is_finite(self.value) && Scalar::is_finite(self.deriv)
    }
}

fn describe_point<S: Scalar>(vars: &[S]) -> String {
    let parts: Vec<String> = vars.iter().map(|v| format!("{}", v.value())).collect();
    parts.join(", ")
}

pub(super) fn eval<S: Scalar>(e: &Expr, vars: &[S]) -> Result<S, SeedError> {
    let singular = |op: &str| SeedError::Singular {
        op: op.to_string(),
        at: describe_point(vars),
    };
    Ok(match e {
        Expr::Lit(c) => S::constant(*c),
        Expr::Var(k) => vars[*k],
        Expr::Param(name) => return Err(SeedError::UnboundParameter(name.clone())),
        Expr::Neg(a) => -eval(a, vars)?,
        Expr::Add(a, b) => eval(a, vars)? + eval(b, vars)?,
        Expr::Sub(a, b) => eval(a, vars)? - eval(b, vars)?,
        Expr::Mul(a, b) => eval(a, vars)? * eval(b, vars)?,
        Expr::Div(a, b) => {
            let num = eval(a, vars)?;
            let den = eval(b, vars)?;
            if den.value() == Complex64::new(0.0, 0.0) {
                return Err(singular("division by zero"));
            }
            num.div(den)
        }
        Expr::Pow(a, n) => {
            let base = eval(a, vars)?;
            let mut acc = S::constant(Complex64::new(1.0, 0.0));
            let mut sq = base;
            let mut k = n.unsigned_abs();
            while k > 0 {
                if k & 1 == 1 {
                    acc = acc * sq;
                }
                k >>= 1;
                if k > 0 {
                    sq = sq * sq;
                }
            }
            if *n < 0 {
                if acc.value() == Complex64::new(0.0, 0.0) {
                    return Err(singular("negative power of zero"));
                }
                S::constant(Complex64::new(1.0, 0.0)).div(acc)
            } else {
                acc
            }
        }
        Expr::Call(f, a) => {
            let arg = eval(a, vars)?;
            match f {
                Func::Exp => arg.exp(),
                Func::Sin => arg.sin(),
                Func::Cos => arg.cos(),
                Func::Log | Func::Sqrt => {
                    if arg.value() == Complex64::new(0.0, 0.0) {
                        return Err(singular(f.name()));
                    }
                    if f == &Func::Log {
                        arg.ln()
                    } else {
                        arg.sqrt()
                    }
                }
            }
        }
    })
}
