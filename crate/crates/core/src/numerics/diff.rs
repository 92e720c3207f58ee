use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{ComplexGridField, FieldValue, GridField, GridSpec};
use crate::error::{Error, Result};

/// Accuracy order of the centred difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

impl StencilOrder {
    /// Half-width of the stencil, i.e. the number of boundary layers lost.
    pub fn margin(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_u8() as f64
    }
}

impl TryFrom<u8> for StencilOrder {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        match order {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            other => Err(Error::InvalidArgument(format!(
                "stencil order must be 2 or 4, got {other}"
            ))),
        }
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn partial<T: FieldValue>(f: &GridField<T>, order: StencilOrder, axis: Axis) -> Result<GridField<T>> {
    let spec: GridSpec = *f.spec();
    let m = order.margin();
    let (n, h) = match axis {
        Axis::X => (spec.nx(), spec.hx()),
        Axis::Y => (spec.ny(), spec.hy()),
    };
    if n < 2 * m + 1 {
        return Err(Error::GridUnderresolved(format!(
            "{n} points along the axis cannot host an order-{} stencil",
            order.as_u8()
        )));
    }
    let stride = match axis {
        Axis::X => 1isize,
        Axis::Y => spec.nx() as isize,
    };
    let vals = f.values();
    let mask = f.mask();
    let mut out = Vec::with_capacity(spec.len());
    let mut out_mask = Vec::with_capacity(spec.len());
    for j in 0..spec.ny() {
        for i in 0..spec.nx() {
            let pos = match axis {
                Axis::X => i,
                Axis::Y => j,
            };
            let k = spec.index(i, j) as isize;
            let at = |offset: isize| (k + offset * stride) as usize;
            // Boundary layers are never filled with one-sided stencils.
            let inside = pos >= m && pos + m < n;
            let valid = inside && (-(m as isize)..=m as isize).all(|o| mask[at(o)]);
            if !valid {
                out.push(T::default());
                out_mask.push(false);
                continue;
            }
            let d = match order {
                StencilOrder::Second => (vals[at(1)] - vals[at(-1)]) * (0.5 / h),
                StencilOrder::Fourth => {
                    ((vals[at(1)] - vals[at(-1)]) * 8.0 - (vals[at(2)] - vals[at(-2)])) * (1.0 / (12.0 * h))
                }
            };
            out.push(d);
            out_mask.push(true);
        }
    }
    GridField::new(spec, out, out_mask)
}

/// Centred difference in x; the outer `margin` columns and every point whose
/// stencil touches a masked sample are masked out.
pub fn partial_x<T: FieldValue>(f: &GridField<T>, order: StencilOrder) -> Result<GridField<T>> {
    partial(f, order, Axis::X)
}

/// Centred difference in y.
pub fn partial_y<T: FieldValue>(f: &GridField<T>, order: StencilOrder) -> Result<GridField<T>> {
    partial(f, order, Axis::Y)
}

/// Wirtinger derivatives `(∂_z f, ∂_z̄ f)` with `∂_z = (∂x − i∂y)/2` and
/// `∂_z̄ = (∂x + i∂y)/2`.
pub fn wirtinger(f: &ComplexGridField, order: StencilOrder) -> Result<(ComplexGridField, ComplexGridField)> {
    let fx = partial_x(f, order)?;
    let fy = partial_y(f, order)?;
    let i = Complex64::i();
    let dz = fx.zip_map(&fy, |a, b| (a - i * b) * 0.5)?;
    let dzbar = fx.zip_map(&fy, |a, b| (a + i * b) * 0.5)?;
    Ok((dz, dzbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grid::RealGridField;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(-0.3, 0.7, 0.1, 1.3, n, n).unwrap()
    }

    #[test]
    fn linear_and_quadratic_exactness() {
        let g = grid(21);
        let f = RealGridField::from_fn(g, |x, _| x);
        let d = partial_x(&f, StencilOrder::Second).unwrap();
        for (k, &m) in d.mask().iter().enumerate() {
            if m {
                assert!((d.values()[k] - 1.0).abs() <= 1e-12);
            }
        }
        let f = RealGridField::from_fn(g, |x, _| x * x);
        let d = partial_x(&f, StencilOrder::Second).unwrap();
        for (k, &m) in d.mask().iter().enumerate() {
            if m {
                let (x, _) = g.point(k);
                assert!((d.values()[k] - 2.0 * x).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
        let f = RealGridField::from_fn(g, |_, y| y * y);
        let d = partial_y(&f, StencilOrder::Second).unwrap();
        for (k, &m) in d.mask().iter().enumerate() {
            if m {
                let (_, y) = g.point(k);
                assert!((d.values()[k] - 2.0 * y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn fourth_order_is_exact_on_quartics() {
        let g = grid(17);
        let f = RealGridField::from_fn(g, |x, y| x.powi(4) + y.powi(3) * x);
        let d = partial_x(&f, StencilOrder::Fourth).unwrap();
        let mut checked = 0;
        for (k, &m) in d.mask().iter().enumerate() {
            if m {
                let (x, y) = g.point(k);
                let exact = 4.0 * x.powi(3) + y.powi(3);
                assert!((d.values()[k] - exact).abs() <= 1e-11, "{} vs {exact}", d.values()[k]);
                checked += 1;
            }
        }
        assert_eq!(checked, (17 - 4) * 17);
    }

    #[test]
    fn boundary_layers_are_masked() {
        let g = grid(9);
        let f = RealGridField::from_fn(g, |x, y| x + y);
        let d = partial_x(&f, StencilOrder::Fourth).unwrap();
        for j in 0..9 {
            for i in 0..9 {
                assert_eq!(d.is_valid(i, j), (2..7).contains(&i));
            }
        }
        let dy = partial_y(&f, StencilOrder::Second).unwrap();
        assert!(!dy.is_valid(3, 0));
        assert!(dy.is_valid(0, 1));
    }

    #[test]
    fn masked_inputs_propagate() {
        let g = grid(9);
        let mut mask = vec![true; g.len()];
        mask[g.index(4, 4)] = false;
        let f = RealGridField::new(g, vec![1.0; g.len()], mask).unwrap();
        let d = partial_x(&f, StencilOrder::Second).unwrap();
        assert!(!d.is_valid(3, 4));
        assert!(!d.is_valid(5, 4));
        assert!(d.is_valid(4, 3));
        assert!(!d.is_valid(4, 4));
    }

    #[test]
    fn wirtinger_of_z_and_zbar() {
        let g = grid(11);
        let z = ComplexGridField::from_fn(g, Complex64::new);
        let (dz, dzbar) = wirtinger(&z, StencilOrder::Second).unwrap();
        assert!((dz.at(5, 5) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(dzbar.at(5, 5).norm() < 1e-12);
        let zb = z.conj();
        let (dz, dzbar) = wirtinger(&zb, StencilOrder::Second).unwrap();
        assert!(dz.at(5, 5).norm() < 1e-12);
        assert!((dzbar.at(5, 5) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn wirtinger_recombines_to_partials() {
        let g = grid(15);
        let f = ComplexGridField::from_fn(g, |x, y| Complex64::new(x * y.sin(), (x - y).exp()));
        let (dz, dzbar) = wirtinger(&f, StencilOrder::Fourth).unwrap();
        let fx = partial_x(&f, StencilOrder::Fourth).unwrap();
        let fy = partial_y(&f, StencilOrder::Fourth).unwrap();
        for k in 0..g.len() {
            if fx.mask()[k] && fy.mask()[k] {
                let (a, b) = (dz.values()[k], dzbar.values()[k]);
                assert!((a + b - fx.values()[k]).norm() <= 1e-14 * (1.0 + fx.values()[k].norm()));
                let iy = Complex64::i() * (a - b);
                assert!((iy - fy.values()[k]).norm() <= 1e-14 * (1.0 + fy.values()[k].norm()));
            }
        }
    }

    #[test]
    fn product_rule_oracle_for_modulus_squared() {
        // |z|² = z z̄, so ∂_z = z̄ and ∂_z̄ = z; central differences are exact
        // on quadratics, hence the tight tolerance.
        let g = grid(13);
        let f = ComplexGridField::from_fn(g, |x, y| Complex64::new(x * x + y * y, 0.0));
        let (dz, dzbar) = wirtinger(&f, StencilOrder::Second).unwrap();
        for k in 0..g.len() {
            if dz.mask()[k] {
                let (x, y) = g.point(k);
                assert!((dz.values()[k] - Complex64::new(x, -y)).norm() < 1e-12);
                assert!((dzbar.values()[k] - Complex64::new(x, y)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_fields_give_conjugate_wirtinger_pairs() {
        let g = grid(11);
        let f = RealGridField::from_fn(g, |x, y| (x * y).sin() + y.exp()).to_complex();
        let (dz, dzbar) = wirtinger(&f, StencilOrder::Second).unwrap();
        for k in 0..g.len() {
            if dz.mask()[k] {
                assert!((dzbar.values()[k] - dz.values()[k].conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn order_parsing() {
        assert_eq!(StencilOrder::try_from(2).unwrap(), StencilOrder::Second);
        assert_eq!(StencilOrder::try_from(4).unwrap(), StencilOrder::Fourth);
        assert!(StencilOrder::try_from(3).is_err());
    }
}
