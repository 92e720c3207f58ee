use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 5;

/// Uniform rectangular grid over `[x_min, x_max] × [y_min, y_max]`.
///
/// Points are stored row-major over y then x: index `j * nx + i` holds
/// `(x_i, y_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
}

/// Same layout as [`GridSpec::parse`] accepts.
impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.x_min, self.x_max, self.y_min, self.y_max, self.nx, self.ny
        )
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidGrid(format!(
                "empty extent [{x_min}, {x_max}] × [{y_min}, {y_max}]"
            )));
        }
        if nx < MIN_POINTS || ny < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points per axis, got {nx}×{ny}"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny })
    }

    /// Parses `x0,x1,y0,y1,nx,ny`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(Error::InvalidGrid(format!(
                "expected x0,x1,y0,y1,nx,ny, got `{text}`"
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidGrid(format!("bad number `{s}`")))
        };
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidGrid(format!("bad point count `{s}`")))
        };
        Self::new(
            num(parts[0])?,
            num(parts[1])?,
            num(parts[2])?,
            num(parts[3])?,
            count(parts[4])?,
            count(parts[5])?,
        )
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// The coarser of the two spacings.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    // Interpolating between the endpoints keeps x(i) exact wherever the
    // ratio is representable (e.g. the y-axis column of the default grid).
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            return self.x_max;
        }
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            return self.y_max;
        }
        self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.coords(k);
        (self.x(i), self.y(j))
    }

    /// Same extent with every spacing halved.
    pub fn refine(&self) -> Self {
        Self {
            nx: 2 * (self.nx - 1) + 1,
            ny: 2 * (self.ny - 1) + 1,
            ..*self
        }
    }

    /// Same extent with every spacing doubled; requires odd point counts.
    pub fn coarsen(&self) -> Result<Self> {
        if self.nx.is_multiple_of(2) || self.ny.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {}×{} (point counts must be odd)",
                self.nx, self.ny
            )));
        }
        Self::new(
            self.x_min,
            self.x_max,
            self.y_min,
            self.y_max,
            (self.nx - 1) / 2 + 1,
            (self.ny - 1) / 2 + 1,
        )
    }

    /// Column whose abscissa is exactly `x` up to rounding of the grid
    /// construction.
    pub fn exact_column(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * (self.x_max - self.x_min);
        (0..self.nx).find(|&i| (self.x(i) - x).abs() <= tol)
    }

    pub fn nearest_column(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        let i = ((x - self.x_min) / self.hx()).round() as usize;
        Some(i.min(self.nx - 1))
    }
}

/// Scalars a grid field can hold.
pub trait FieldValue:
    Copy + Default + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl FieldValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl FieldValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Values sampled on a [`GridSpec`] with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    spec: GridSpec,
    values: Vec<T>,
    mask: Vec<bool>,
}

pub type ComplexGridField = GridField<Complex64>;
pub type RealGridField = GridField<f64>;

impl<T: FieldValue> GridField<T> {
    pub fn new(spec: GridSpec, values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != spec.len() || mask.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} points, got {} values and {} mask entries",
                spec.len(),
                values.len(),
                mask.len()
            )));
        }
        Ok(Self { spec, values, mask })
    }

    pub fn constant(spec: GridSpec, value: T) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
            mask: vec![true; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny() {
            let y = spec.y(j);
            for i in 0..spec.nx() {
                values.push(f(spec.x(i), y));
            }
        }
        Self {
            spec,
            values,
            mask: vec![true; spec.len()],
        }
    }

    pub fn try_from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> Result<T>) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny() {
            let y = spec.y(j);
            for i in 0..spec.nx() {
                values.push(f(spec.x(i), y)?);
            }
        }
        Ok(Self {
            spec,
            values,
            mask: vec![true; spec.len()],
        })
    }

    /// `None` marks a point invalid.
    pub fn from_fn_masked(spec: GridSpec, mut f: impl FnMut(f64, f64) -> Option<T>) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        let mut mask = Vec::with_capacity(spec.len());
        for j in 0..spec.ny() {
            let y = spec.y(j);
            for i in 0..spec.nx() {
                match f(spec.x(i), y) {
                    Some(v) => {
                        values.push(v);
                        mask.push(true);
                    }
                    None => {
                        values.push(T::default());
                        mask.push(false);
                    }
                }
            }
        }
        Self { spec, values, mask }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.spec.index(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.mask[self.spec.index(i, j)]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let k = self.spec.index(i, j);
        self.mask[k].then(|| self.values[k])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Replaces the mask by its intersection with `mask`; dropped points
    /// are reset to the default value.
    pub fn restrict(mut self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::ShapeMismatch("mask length".into()));
        }
        for (k, &keep) in mask.iter().enumerate() {
            if !keep {
                self.mask[k] = false;
                self.values[k] = T::default();
            }
        }
        Ok(self)
    }

    pub fn map<U: FieldValue>(&self, mut f: impl FnMut(T) -> U) -> GridField<U> {
        GridField {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&self.mask)
                .map(|(&v, &m)| if m { f(v) } else { U::default() })
                .collect(),
            mask: self.mask.clone(),
        }
    }

    /// Pointwise map that also receives the point coordinates.
    pub fn map_with_coords<U: FieldValue>(&self, mut f: impl FnMut(f64, f64, T) -> U) -> GridField<U> {
        let mut values = Vec::with_capacity(self.values.len());
        for (k, (&v, &m)) in self.values.iter().zip(&self.mask).enumerate() {
            if m {
                let (x, y) = self.spec.point(k);
                values.push(f(x, y, v));
            } else {
                values.push(U::default());
            }
        }
        GridField {
            spec: self.spec,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Pointwise combination; the result is valid where both inputs are.
    pub fn zip_map<S: FieldValue, U: FieldValue>(
        &self,
        other: &GridField<S>,
        mut f: impl FnMut(T, S) -> U,
    ) -> Result<GridField<U>> {
        self.check_same_grid(other.spec())?;
        let mut values = Vec::with_capacity(self.values.len());
        let mut mask = Vec::with_capacity(self.values.len());
        for k in 0..self.values.len() {
            let m = self.mask[k] && other.mask[k];
            mask.push(m);
            values.push(if m {
                f(self.values[k], other.values[k])
            } else {
                U::default()
            });
        }
        Ok(GridField {
            spec: self.spec,
            values,
            mask,
        })
    }

    /// Three-way pointwise combination; valid where all inputs are.
    pub fn zip3_map<S: FieldValue, R: FieldValue, U: FieldValue>(
        &self,
        b: &GridField<S>,
        c: &GridField<R>,
        mut f: impl FnMut(T, S, R) -> U,
    ) -> Result<GridField<U>> {
        self.check_same_grid(b.spec())?;
        self.check_same_grid(c.spec())?;
        let mut values = Vec::with_capacity(self.values.len());
        let mut mask = Vec::with_capacity(self.values.len());
        for k in 0..self.values.len() {
            let m = self.mask[k] && b.mask[k] && c.mask[k];
            mask.push(m);
            values.push(if m {
                f(self.values[k], b.values[k], c.values[k])
            } else {
                U::default()
            });
        }
        Ok(GridField {
            spec: self.spec,
            values,
            mask,
        })
    }

    pub fn check_same_grid(&self, other: &GridSpec) -> Result<()> {
        if &self.spec != other {
            return Err(Error::ShapeMismatch(format!(
                "fields live on different grids ({} vs {})",
                self.spec, other
            )));
        }
        Ok(())
    }

    /// Max and RMS magnitude over valid points that sit at least `margin`
    /// cells away from any invalid point or grid edge.
    pub fn norms(&self, margin: usize) -> Result<Norms> {
        let region = erode(&self.mask, &self.spec, margin);
        norms_over(&self.values, &region)
    }

    pub fn norms_in(&self, region: &[bool]) -> Result<Norms> {
        let both: Vec<bool> = region.iter().zip(&self.mask).map(|(&a, &b)| a && b).collect();
        norms_over(&self.values, &both)
    }
}

impl RealGridField {
    pub fn to_complex(&self) -> ComplexGridField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl ComplexGridField {
    pub fn re(&self) -> RealGridField {
        self.map(|v| v.re)
    }
    pub fn im(&self) -> RealGridField {
        self.map(|v| v.im)
    }
    pub fn conj(&self) -> ComplexGridField {
        self.map(|v| v.conj())
    }
    pub fn abs(&self) -> RealGridField {
        self.map(|v| v.norm())
    }
}

/// Summary norms of a residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub max: f64,
    pub rms: f64,
    pub count: usize,
}

// Sequential reduction keeps norms bit-reproducible.
fn norms_over<T: FieldValue>(values: &[T], region: &[bool]) -> Result<Norms> {
    let mut max = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut count = 0usize;
    for (v, &m) in values.iter().zip(region) {
        if !m {
            continue;
        }
        let a = v.magnitude();
        max = max.max(a);
        sum_sq += a * a;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRegion("no valid points to measure".into()));
    }
    Ok(Norms {
        max,
        rms: (sum_sq / count as f64).sqrt(),
        count,
    })
}

/// Shrinks a mask so every surviving point has a full `(2m+1)²` block of
/// valid, in-grid neighbours.
pub fn erode(mask: &[bool], spec: &GridSpec, margin: usize) -> Vec<bool> {
    if margin == 0 {
        return mask.to_vec();
    }
    let (nx, ny) = (spec.nx(), spec.ny());
    // Separable: erode along x, then along y.
    let mut along_x = vec![false; mask.len()];
    for j in 0..ny {
        for i in margin..nx.saturating_sub(margin) {
            along_x[spec.index(i, j)] = (i - margin..=i + margin).all(|ii| mask[spec.index(ii, j)]);
        }
    }
    let mut out = vec![false; mask.len()];
    for j in margin..ny.saturating_sub(margin) {
        for i in 0..nx {
            out[spec.index(i, j)] = (j - margin..=j + margin).all(|jj| along_x[spec.index(i, jj)]);
        }
    }
    out
}

/// Excludes `margin` boundary layers, as required by a centred stencil of
/// half-width `margin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorRegion {
    margin: usize,
}

impl InteriorRegion {
    pub fn new(margin: usize) -> Result<Self> {
        if margin == 0 {
            return Err(Error::InvalidArgument("interior margin must be at least 1".into()));
        }
        Ok(Self { margin })
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Valid points of `mask` at least `margin` cells from any invalid point
    /// or grid edge.
    pub fn apply(&self, mask: &[bool], spec: &GridSpec) -> Result<Vec<bool>> {
        let m = self.margin;
        if spec.nx() < 2 * m + 1 || spec.ny() < 2 * m + 1 {
            return Err(Error::GridUnderresolved(format!(
                "{}×{} grid has no interior at margin {m}",
                spec.nx(),
                spec.ny()
            )));
        }
        Ok(erode(mask, spec, m))
    }
}
