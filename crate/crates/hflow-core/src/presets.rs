//! Canonical initial data shared by the tests and the command line tools.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::math;

/// Grim reaper profile `u(x) = -log cos x` on `[-x_half, x_half]`, `n = 1`.
///
/// Translating solution of curve shortening: the graph moves upward at unit
/// speed, so `u(x, t) = t - log cos x` solves the flow with `alpha = 1`.
/// Requires `x_half < pi/2`.
pub fn grim_reaper(spacing: f64, x_half: f64) -> Result<ScalarField> {
    if !(x_half > 0.0 && x_half < core::f64::consts::FRAC_PI_2) {
        return Err(Error::OutOfDomain);
    }
    let grid = Grid::build(&[[-x_half, x_half]], spacing)?;
    Ok(ScalarField::from_fn(grid, |x| -math::log(math::cos(x[0]))))
}

/// Rotationally symmetric paraboloid `u(x) = |x|^2 / 2` on `[-r, r]^dim`.
///
/// Mean convex for any dimension; the exact mean curvature at radius `rho`
/// in `n = 2` is `(2 + rho^2) / (1 + rho^2)^(3/2)`.
pub fn paraboloid(spacing: f64, radius: f64, dim: usize) -> Result<ScalarField> {
    assert!(dim == 1 || dim == 2);
    if !(radius > 0.0) {
        return Err(Error::DegenerateBox);
    }
    let bounds = [[-radius, radius]; 2];
    let grid = Grid::build(&bounds[..dim], spacing)?;
    Ok(ScalarField::from_fn(grid, |x| {
        if dim == 1 {
            0.5 * x[0] * x[0]
        } else {
            0.5 * (x[0] * x[0] + x[1] * x[1])
        }
    }))
}
