use serde::{Deserialize, Serialize};

use super::grid::{FieldValue, GridField, GridSpec};
use crate::error::{Error, Result};

/// Least-squares slope of `log(norm)` against `log(h)`.
pub fn convergence_order(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(
            "convergence order needs at least two (h, norm) samples".into(),
        ));
    }
    for w in samples.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::InvalidArgument(
                "grid spacings must be strictly decreasing".into(),
            ));
        }
    }
    if let Some(&(h, n)) = samples.iter().find(|(h, n)| !(*n > 0.0) || !(*h > 0.0) || !n.is_finite()) {
        return Err(Error::InvalidResidual(format!("norm {n:e} at h = {h:e}")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(h, n)| (h.ln(), n.ln())).collect();
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Residual norms measured on a dyadic sequence of grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `(h, max-norm)` from coarsest to finest.
    pub samples: Vec<(f64, f64)>,
    /// Observed order; `None` when some residual is exactly zero.
    pub order: Option<f64>,
}

impl ConvergenceReport {
    pub fn finest(&self) -> f64 {
        self.samples.last().map(|s| s.1).unwrap_or(f64::NAN)
    }

    pub fn order_within(&self, expected: f64, slack: f64) -> bool {
        self.order.is_some_and(|p| (p - expected).abs() <= slack)
    }
}

/// Runs `measure` on `base`, `base.refine()`, … (`levels` grids in total)
/// and fits the observed order.
pub fn convergence_study(
    base: &GridSpec,
    levels: usize,
    mut measure: impl FnMut(&GridSpec) -> Result<f64>,
) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidArgument("a study needs at least two grids".into()));
    }
    let mut grid = *base;
    let mut samples = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            grid = grid.refine();
        }
        samples.push((grid.h(), measure(&grid)?));
    }
    let order = match convergence_order(&samples) {
        Ok(p) => Some(p),
        Err(Error::InvalidResidual(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ConvergenceReport { samples, order })
}

/// Like [`convergence_study`], but `measure` returns a residual field and
/// the max-norm is taken only over the nodes of `base` that are valid on
/// every level. Nested grids share those nodes, so the comparison is made at
/// fixed physical points instead of at a boundary layer that moves with `h`.
pub fn nested_convergence_study<T: FieldValue>(
    base: &GridSpec,
    levels: usize,
    mut measure: impl FnMut(&GridSpec) -> Result<GridField<T>>,
) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidArgument("a study needs at least two grids".into()));
    }
    let mut grid = *base;
    let mut fields = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            grid = grid.refine();
        }
        let f = measure(&grid)?;
        f.check_same_grid(&grid)?;
        fields.push(f);
    }
    let common: Vec<(usize, usize)> = (0..base.ny())
        .flat_map(|j| (0..base.nx()).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            fields
                .iter()
                .enumerate()
                .all(|(l, f)| f.is_valid(i << l, j << l))
        })
        .collect();
    if common.is_empty() {
        return Err(Error::EmptyRegion("no node is valid on every level".into()));
    }
    let samples: Vec<(f64, f64)> = fields
        .iter()
        .enumerate()
        .map(|(l, f)| {
            let max = common
                .iter()
                .map(|&(i, j)| f.at(i << l, j << l).magnitude())
                .fold(0.0f64, f64::max);
            (f.spec().h(), max)
        })
        .collect();
    let order = match convergence_order(&samples) {
        Ok(p) => Some(p),
        Err(Error::InvalidResidual(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ConvergenceReport { samples, order })
}

/// The grid `levels − 1` coarsenings below `finest`, so that a study started
/// there ends on `finest`.
pub fn study_base(finest: &GridSpec, levels: usize) -> Result<GridSpec> {
    let mut g = *finest;
    for _ in 1..levels {
        g = g.coarsen()?;
    }
    Ok(g)
}
