//! Pointwise arithmetic in the fiber algebra `R[X]/(X² + βX + α)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element `U + V·i` of a fiber algebra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub u: f64,
    pub v: f64,
}

impl AlgebraElement {
    pub const ONE: AlgebraElement = AlgebraElement { u: 1.0, v: 0.0 };
    pub const GENERATOR: AlgebraElement = AlgebraElement { u: 0.0, v: 1.0 };

    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_zero(&self) -> bool {
        self.u == 0.0 && self.v == 0.0
    }
}

/// The coefficients `(α, β)` of one fiber, checked to be elliptic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    alpha: f64,
    beta: f64,
}

impl Fiber {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::at(alpha, beta, f64::NAN, f64::NAN)
    }

    /// Like [`Fiber::new`] but reports the point on failure.
    pub fn at(alpha: f64, beta: f64, x: f64, y: f64) -> Result<Self> {
        let discriminant = 4.0 * alpha - beta * beta;
        if !(discriminant > 0.0) || !discriminant.is_finite() {
            return Err(Error::DegenerateFiber { x, y, discriminant });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `Δ = 4α − β²`, positive by construction.
    pub fn discriminant(&self) -> f64 {
        4.0 * self.alpha - self.beta * self.beta
    }

    /// The root of `X² + βX + α` in the upper half-plane.
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(-0.5 * self.beta, 0.5 * self.discriminant().sqrt())
    }

    /// Product with `i²` reduced through `i² = −βi − α`.
    pub fn mul(&self, w: AlgebraElement, t: AlgebraElement) -> AlgebraElement {
        let vv = w.v * t.v;
        AlgebraElement {
            u: w.u * t.u - self.alpha * vv,
            v: w.u * t.v + w.v * t.u - self.beta * vv,
        }
    }

    /// `U + V·î` with the conjugate root `î = −β − i`.
    pub fn conj(&self, w: AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            u: w.u - self.beta * w.v,
            v: -w.v,
        }
    }

    /// `N(W) = W·Ŵ = U² − βUV + αV²`.
    pub fn norm(&self, w: AlgebraElement) -> f64 {
        w.u * w.u - self.beta * w.u * w.v + self.alpha * w.v * w.v
    }

    pub fn inv(&self, w: AlgebraElement) -> Result<AlgebraElement> {
        if w.is_zero() {
            return Err(Error::NotInvertible);
        }
        let n = self.norm(w);
        let c = self.conj(w);
        Ok(AlgebraElement {
            u: c.u / n,
            v: c.v / n,
        })
    }

    /// Image `U + Vλ` under the transport map.
    pub fn transport(&self, w: AlgebraElement) -> Complex64 {
        Complex64::new(w.u, 0.0) + self.lambda() * w.v
    }
}

/// `W·T` in the fiber `(α, β)`.
pub fn alg_mul(w: AlgebraElement, t: AlgebraElement, alpha: f64, beta: f64) -> Result<AlgebraElement> {
    Ok(Fiber::new(alpha, beta)?.mul(w, t))
}

pub fn alg_conj(w: AlgebraElement, beta: f64) -> AlgebraElement {
    AlgebraElement {
        u: w.u - beta * w.v,
        v: -w.v,
    }
}

pub fn alg_norm(w: AlgebraElement, alpha: f64, beta: f64) -> Result<f64> {
    Ok(Fiber::new(alpha, beta)?.norm(w))
}

pub fn alg_inv(w: AlgebraElement, alpha: f64, beta: f64) -> Result<AlgebraElement> {
    Fiber::new(alpha, beta)?.inv(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const I: AlgebraElement = AlgebraElement::GENERATOR;

    #[test]
    fn standard_complex_unit() {
        assert_eq!(alg_mul(I, I, 1.0, 0.0).unwrap(), AlgebraElement::new(-1.0, 0.0));
        assert_eq!(alg_inv(I, 1.0, 0.0).unwrap(), AlgebraElement::new(0.0, -1.0));
        assert_eq!(alg_norm(AlgebraElement::new(3.0, 4.0), 1.0, 0.0).unwrap(), 25.0);
        assert_eq!(alg_conj(AlgebraElement::new(1.0, 1.0), 0.0), AlgebraElement::new(1.0, -1.0));
    }

    #[test]
    fn moving_generator_relation() {
        // α = 2, β = −2: i² = −βi − α = 2i − 2.
        assert_eq!(alg_mul(I, I, 2.0, -2.0).unwrap(), AlgebraElement::new(-2.0, 2.0));
        assert_eq!(alg_conj(AlgebraElement::new(1.0, 1.0), -2.0), AlgebraElement::new(3.0, -1.0));
        assert_eq!(alg_norm(AlgebraElement::new(1.0, 1.0), 2.0, -2.0).unwrap(), 5.0);
    }

    #[test]
    fn unit_and_inverse_of_unit() {
        let w = AlgebraElement::new(0.3, -1.7);
        assert_eq!(alg_mul(AlgebraElement::ONE, w, 3.0, 1.0).unwrap(), w);
        assert_eq!(alg_inv(AlgebraElement::ONE, 3.0, 1.0).unwrap(), AlgebraElement::ONE);
    }

    #[test]
    fn degenerate_and_zero_are_rejected() {
        assert!(matches!(alg_mul(I, I, 1.0, 2.0), Err(Error::DegenerateFiber { .. })));
        assert!(matches!(alg_norm(I, -1.0, 0.0), Err(Error::DegenerateFiber { .. })));
        assert!(matches!(
            alg_inv(AlgebraElement::default(), 1.0, 0.0),
            Err(Error::NotInvertible)
        ));
    }

    #[test]
    fn root_satisfies_structure_polynomial() {
        let f = Fiber::new(2.0, -2.0).unwrap();
        let l = f.lambda();
        assert_eq!(l, Complex64::new(1.0, 1.0));
        assert!((l * l + l * f.beta() + f.alpha()).norm() < 1e-15);
    }

    fn random_fiber(rng: &mut impl Rng) -> Fiber {
        let beta = rng.gen_range(-5.0..5.0);
        let delta = rng.gen_range(0.1..10.0);
        Fiber::new((delta + beta * beta) / 4.0, beta).unwrap()
    }

    fn random_element(rng: &mut impl Rng) -> AlgebraElement {
        AlgebraElement::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))
    }

    #[test]
    fn norm_is_multiplicative_on_random_triples() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let f = random_fiber(&mut rng);
            let (w, t) = (random_element(&mut rng), random_element(&mut rng));
            let lhs = f.norm(f.mul(w, t));
            let rhs = f.norm(w) * f.norm(t);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn inversion_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let f = random_fiber(&mut rng);
            let w = random_element(&mut rng);
            if f.norm(w) < 1e-6 {
                continue;
            }
            let p = f.mul(w, f.inv(w).unwrap());
            assert!((p.u - 1.0).abs() <= 1e-12 && p.v.abs() <= 1e-12, "{p:?}");
        }
    }

    proptest! {
        #[test]
        fn conjugation_is_an_involution(u in -10.0..10.0f64, v in -10.0..10.0f64, beta in -5.0..5.0f64) {
            let w = AlgebraElement::new(u, v);
            let back = alg_conj(alg_conj(w, beta), beta);
            prop_assert!((back.u - u).abs() <= 1e-12 * (1.0 + u.abs() + (beta * v).abs()));
            prop_assert_eq!(back.v, v);
        }

        #[test]
        fn norm_is_real_and_positive(u in -10.0..10.0f64, v in -10.0..10.0f64,
                                      beta in -5.0..5.0f64, d in 0.1..10.0f64) {
            let f = Fiber::new((d + beta * beta) / 4.0, beta).unwrap();
            let w = AlgebraElement::new(u, v);
            let p = f.mul(w, f.conj(w));
            let scale = 1.0 + u * u + v * v * (1.0 + f.alpha() + beta.abs());
            prop_assert!(p.v.abs() <= 1e-12 * scale);
            prop_assert!((p.u - f.norm(w)).abs() <= 1e-12 * scale);
            if !w.is_zero() {
                prop_assert!(f.norm(w) > 0.0);
            }
        }

        #[test]
        fn transport_is_a_homomorphism(u1 in -10.0..10.0f64, v1 in -10.0..10.0f64,
                                       u2 in -10.0..10.0f64, v2 in -10.0..10.0f64,
                                       beta in -5.0..5.0f64, d in 0.1..10.0f64) {
            let f = Fiber::new((d + beta * beta) / 4.0, beta).unwrap();
            let (w, t) = (AlgebraElement::new(u1, v1), AlgebraElement::new(u2, v2));
            let lhs = f.transport(f.mul(w, t));
            let rhs = f.transport(w) * f.transport(t);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()) * (1.0 + f.alpha()));
            // |W_λ|² is the algebraic norm.
            let n = f.norm(w);
            prop_assert!((f.transport(w).norm_sqr() - n).abs() <= 1e-12 * (1.0 + n) * (1.0 + f.alpha()));
        }
    }
}
