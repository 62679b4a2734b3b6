//! Uniform Cartesian grids over R^n (n = 1 or 2), domain masks from
//! sublevel sets, and second-order finite-difference derivatives.
//!
//! The domain approximation is grid-aligned: boundary nodes are lattice
//! nodes, Dirichlet data lives on them, and there is no extrapolation
//! beyond them. The O(h) geometric boundary error this introduces is
//! accepted; every downstream audit measures convergence under refinement.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Uniform lattice with equal spacing in every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub origin: [f64; 2],
    pub spacing: f64,
    pub extents: [usize; 2],
}

impl Grid {
    /// Covers `bounds` (`[[x0, x1]]` or `[[x0, x1], [y0, y1]]`) with nodes
    /// `ceil(side / spacing) + 1` per axis.
    pub fn build(bounds: &[[f64; 2]], spacing: f64) -> Result<Grid> {
        if !(spacing > 0.0) {
            return Err(Error::NonpositiveSpacing);
        }
        let dim = bounds.len();
        assert!(dim == 1 || dim == 2, "only n = 1 or n = 2 is supported");
        let mut origin = [0.0; 2];
        let mut extents = [1; 2];
        for (axis, b) in bounds.iter().enumerate() {
            let side = b[1] - b[0];
            if !(side > 0.0) {
                return Err(Error::DegenerateBox);
            }
            origin[axis] = b[0];
            // ceil with a little slack so that side/spacing == integer does
            // not pick up a spurious extra node from round-off.
            let cells = math::ceil_tol(side / spacing);
            extents[axis] = cells + 1;
            if extents[axis] < 3 {
                return Err(Error::DegenerateBox);
            }
        }
        Ok(Grid {
            dim,
            origin,
            spacing,
            extents,
        })
    }

    pub fn node_count(&self) -> usize {
        if self.dim == 1 {
            self.extents[0]
        } else {
            self.extents[0] * self.extents[1]
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.extents[0]);
        debug_assert!(self.dim == 2 || j == 0);
        j * self.extents[0] + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.extents[0], idx / self.extents[0])
    }

    /// Physical position of a node.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        [
            self.origin[0] + i as f64 * self.spacing,
            if self.dim == 2 {
                self.origin[1] + j as f64 * self.spacing
            } else {
                0.0
            },
        ]
    }

    /// True if the node lies on the outermost frame of the lattice.
    pub fn on_frame(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        i == 0
            || i == self.extents[0] - 1
            || (self.dim == 2 && (j == 0 || j == self.extents[1] - 1))
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        0..self.node_count()
    }
}

/// Per-node classification of a sublevel domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Interior,
    Boundary,
    Exterior,
}

/// Discrete domain `Q = {u0 < a}`: interior nodes are the sublevel set,
/// boundary nodes are the remaining nodes touching it (including
/// diagonally, so every interior stencil is covered), the rest is exterior.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    pub grid: Grid,
    pub classes: Vec<CellClass>,
    pub level: f64,
}

impl DomainMask {
    #[inline]
    pub fn class(&self, idx: usize) -> CellClass {
        self.classes[idx]
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        self.classes[idx] == CellClass::Interior
    }

    /// Nodes carrying solution data (interior or Dirichlet boundary).
    #[inline]
    pub fn has_data(&self, idx: usize) -> bool {
        self.classes[idx] != CellClass::Exterior
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == CellClass::Interior)
            .map(|(i, _)| i)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == CellClass::Boundary)
            .map(|(i, _)| i)
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes().count()
    }

    /// Interior nodes with a boundary node in their 3^n neighborhood.
    pub fn boundary_adjacent_interior(&self) -> Vec<usize> {
        let grid = self.grid;
        let mut out = Vec::new();
        for idx in grid.nodes() {
            if !self.is_interior(idx) {
                continue;
            }
            let (i, j) = grid.coords(idx);
            if neighborhood(&grid, i, j)
                .any(|n| self.classes[n] == CellClass::Boundary)
            {
                out.push(idx);
            }
        }
        out
    }

    /// A mask over the whole grid with only the outer frame as boundary.
    /// Used for fields like `u0` that are defined everywhere.
    pub fn full(grid: Grid) -> DomainMask {
        let classes = grid
            .nodes()
            .map(|idx| {
                if grid.on_frame(idx) {
                    CellClass::Boundary
                } else {
                    CellClass::Interior
                }
            })
            .collect();
        DomainMask {
            grid,
            classes,
            level: f64::INFINITY,
        }
    }
}

/// Iterate the 3^n box around `(i, j)` excluding the node itself.
/// All in-bounds nodes of the 3^n box around `idx`, excluding `idx` itself.
pub fn box_neighbors(grid: &Grid, idx: usize) -> impl Iterator<Item = usize> + '_ {
    let (i, j) = grid.coords(idx);
    neighborhood(grid, i, j)
}

fn neighborhood(grid: &Grid, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
    let (nx, ny) = (grid.extents[0] as isize, grid.extents[1] as isize);
    let dim = grid.dim;
    let (i, j) = (i as isize, j as isize);
    let offsets: &[(isize, isize)] = if dim == 1 {
        &[(-1, 0), (1, 0)]
    } else {
        &[
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ]
    };
    offsets.iter().filter_map(move |&(di, dj)| {
        let (ni, nj) = (i + di, j + dj);
        if ni < 0 || ni >= nx || nj < 0 || (dim == 2 && nj >= ny) {
            None
        } else {
            Some((nj * nx + ni) as usize)
        }
    })
}

/// Scalar field sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> ScalarField {
        assert_eq!(values.len(), grid.node_count());
        ScalarField { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> ScalarField {
        let n = grid.node_count();
        ScalarField {
            grid,
            values: vec![value; n],
        }
    }

    /// Sample a function of position at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> ScalarField {
        let values = grid.nodes().map(|idx| f(grid.position(idx))).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }
}

/// Gradient and Hessian fields produced by [`differentiate`]; entries are
/// only meaningful at interior nodes of the mask used to compute them.
#[derive(Debug, Clone)]
pub struct DerivativeFields {
    pub gradient: Vec<[f64; 2]>,
    /// Symmetric Hessian stored as (xx, xy, yy).
    pub hessian: Vec<[f64; 3]>,
}

/// Builds the discrete domain `{u0 < a}`.
pub fn sublevel_mask(u0: &ScalarField, a: f64) -> Result<DomainMask> {
    let grid = u0.grid;
    let mut classes = vec![CellClass::Exterior; grid.node_count()];
    let mut any_interior = false;
    for idx in grid.nodes() {
        if u0.value(idx) < a {
            classes[idx] = CellClass::Interior;
            any_interior = true;
        }
    }
    if !any_interior {
        return Err(Error::EmptyDomain);
    }
    for idx in grid.nodes() {
        if classes[idx] != CellClass::Exterior {
            continue;
        }
        let (i, j) = grid.coords(idx);
        if neighborhood(&grid, i, j).any(|n| classes[n] == CellClass::Interior) {
            classes[idx] = CellClass::Boundary;
        }
    }
    Ok(DomainMask {
        grid,
        classes,
        level: a,
    })
}

/// Second-order first derivative along one axis, one-sided if a neighbor
/// carries no data. `get(offset)` returns the value `offset` nodes along the
/// axis, `ok(offset)` whether that node carries data.
#[inline]
fn d1(h: f64, get: impl Fn(isize) -> f64, ok: impl Fn(isize) -> bool) -> f64 {
    let (m, p) = (ok(-1), ok(1));
    if m && p {
        (get(1) - get(-1)) / (2.0 * h)
    } else if p {
        // forward: (-3 u0 + 4 u1 - u2) / 2h
        (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
    } else {
        (3.0 * get(0) - 4.0 * get(-1) + get(-2)) / (2.0 * h)
    }
}

/// Second-order second derivative along one axis, one-sided (four-point)
/// if a neighbor carries no data.
#[inline]
fn d2(h: f64, get: impl Fn(isize) -> f64, ok: impl Fn(isize) -> bool) -> f64 {
    let (m, p) = (ok(-1), ok(1));
    let h2 = h * h;
    if m && p {
        (get(1) - 2.0 * get(0) + get(-1)) / h2
    } else if p {
        (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / h2
    } else {
        (2.0 * get(0) - 5.0 * get(-1) + 4.0 * get(-2) - get(-3)) / h2
    }
}

/// Discrete gradient and Hessian of `u` at the interior nodes of `mask`.
///
/// Central differences wherever the full stencil carries data, one-sided
/// second-order stencils otherwise; mixed partials by the four-point cross.
/// Exact (to round-off) on polynomials of total degree <= 2.
pub fn differentiate(u: &ScalarField, mask: &DomainMask) -> DerivativeFields {
    let grid = u.grid;
    let n = grid.node_count();
    let mut gradient = vec![[0.0; 2]; n];
    let mut hessian = vec![[0.0; 3]; n];
    let h = grid.spacing;
    let nx = grid.extents[0] as isize;

    for idx in grid.nodes() {
        if !mask.is_interior(idx) {
            continue;
        }
        let (i, j) = grid.coords(idx);
        let (i, j) = (i as isize, j as isize);
        let ny = grid.extents[1] as isize;
        // Clamped lookup: one-sided stencils on malformed masks then read a
        // duplicated frame value instead of panicking.
        let at = |di: isize, dj: isize| {
            let ni = (i + di).clamp(0, nx - 1);
            let nj = (j + dj).clamp(0, ny - 1);
            (nj * nx + ni) as usize
        };
        let ok_x = |di: isize| {
            let ni = i + di;
            ni >= 0 && ni < nx && mask.has_data(at(di, 0))
        };
        let ux = d1(h, |d| u.value(at(d, 0)), ok_x);
        let uxx = d2(h, |d| u.value(at(d, 0)), ok_x);
        if grid.dim == 1 {
            gradient[idx] = [ux, 0.0];
            hessian[idx] = [uxx, 0.0, 0.0];
            continue;
        }
        let ok_y = |dj: isize| {
            let nj = j + dj;
            nj >= 0 && nj < ny && mask.has_data(at(0, dj))
        };
        let uy = d1(h, |d| u.value(at(0, d)), ok_y);
        let uyy = d2(h, |d| u.value(at(0, d)), ok_y);
        // Mixed partial: four-point cross; the mask invariant guarantees the
        // diagonal neighbors of an interior node carry data.
        let uxy = (u.value(at(1, 1)) - u.value(at(1, -1)) - u.value(at(-1, 1))
            + u.value(at(-1, -1)))
            / (4.0 * h * h);
        gradient[idx] = [ux, uy];
        hessian[idx] = [uxx, uxy, uyy];
    }
    DerivativeFields { gradient, hessian }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(x0: f64, x1: f64, h: f64) -> Grid {
        Grid::build(&[[x0, x1]], h).unwrap()
    }

    #[test]
    fn build_grid_node_positions() {
        let g = grid_1d(-1.0, 1.0, 0.5);
        assert_eq!(g.extents[0], 5);
        let xs: Vec<f64> = g.nodes().map(|i| g.position(i)[0]).collect();
        for (x, want) in xs.iter().zip([-1.0, -0.5, 0.0, 0.5, 1.0]) {
            assert!((x - want).abs() < 1e-14);
        }
    }

    #[test]
    fn build_grid_2d_counts() {
        let half_pi = core::f64::consts::FRAC_PI_2;
        let g = Grid::build(
            &[[-half_pi, half_pi], [-half_pi, half_pi]],
            core::f64::consts::PI / 100.0,
        )
        .unwrap();
        assert_eq!(g.extents, [101, 101]);
        assert_eq!(g.node_count(), 101 * 101);
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        assert_eq!(
            Grid::build(&[[-1.0, 1.0]], 0.0).unwrap_err(),
            Error::NonpositiveSpacing
        );
        assert_eq!(
            Grid::build(&[[1.0, 1.0]], 0.1).unwrap_err(),
            Error::DegenerateBox
        );
    }

    #[test]
    fn sublevel_mask_parabola() {
        let g = grid_1d(-2.0, 2.0, 0.5);
        let u0 = ScalarField::from_fn(g, |p| p[0] * p[0]);
        let mask = sublevel_mask(&u0, 1.0).unwrap();
        let interior: Vec<f64> = mask.interior_nodes().map(|i| g.position(i)[0]).collect();
        assert_eq!(interior, vec![-0.5, 0.0, 0.5]);
        let boundary: Vec<f64> = mask.boundary_nodes().map(|i| g.position(i)[0]).collect();
        assert_eq!(boundary, vec![-1.0, 1.0]);
    }

    #[test]
    fn sublevel_mask_empty() {
        let g = grid_1d(-2.0, 2.0, 0.5);
        let u0 = ScalarField::from_fn(g, |p| p[0] * p[0]);
        assert_eq!(sublevel_mask(&u0, -0.5).unwrap_err(), Error::EmptyDomain);
    }

    #[test]
    fn sublevel_mask_grim_reaper_profile() {
        // u0 = -log cos x; interior of {u0 < 3} must be exactly the nodes
        // with cos x > e^-3.
        let h = 0.01;
        let lim = core::f64::consts::FRAC_PI_2 - 2.0 * h;
        let g = grid_1d(-lim, lim, h);
        let u0 = ScalarField::from_fn(g, |p| -crate::math::log(crate::math::cos(p[0])));
        let mask = sublevel_mask(&u0, 3.0).unwrap();
        let threshold = crate::math::exp(-3.0);
        for idx in g.nodes() {
            let inside = crate::math::cos(g.position(idx)[0]) > threshold;
            assert_eq!(mask.is_interior(idx), inside, "node {idx}");
        }
    }

    #[test]
    fn sublevel_mask_is_monotone() {
        let g = Grid::build(&[[-2.0, 2.0], [-2.0, 2.0]], 0.23).unwrap();
        let u0 = ScalarField::from_fn(g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]));
        let lo = sublevel_mask(&u0, 0.7).unwrap();
        let hi = sublevel_mask(&u0, 1.9).unwrap();
        for idx in g.nodes() {
            if lo.is_interior(idx) {
                assert!(hi.is_interior(idx));
            }
        }
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        let g = Grid::build(&[[-1.0, 1.0], [-1.0, 1.0]], 0.25).unwrap();
        let u = ScalarField::from_fn(g, |p| p[0] * p[1]);
        let mask = DomainMask::full(g);
        let d = differentiate(&u, &mask);
        let center = g.index(4, 4);
        assert!((g.position(center)[0]).abs() < 1e-14);
        assert!(d.gradient[center][0].abs() < 1e-13);
        assert!(d.gradient[center][1].abs() < 1e-13);
        assert!((d.hessian[center][1] - 1.0).abs() < 1e-13);
        assert!(d.hessian[center][0].abs() < 1e-12);

        let q = ScalarField::from_fn(g, |p| p[0] * p[0]);
        let dq = differentiate(&q, &mask);
        assert!(dq.gradient[center][0].abs() < 1e-13);
        assert!((dq.hessian[center][0] - 2.0).abs() < 1e-12);
        // one-sided stencils at the frame-adjacent interior nodes are exact
        // on quadratics too
        let edge = g.index(1, 1);
        assert!((dq.hessian[edge][0] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn derivatives_sine_taylor_bound() {
        let g = grid_1d(-0.5, 0.5, 0.01);
        let u = ScalarField::from_fn(g, |p| crate::math::sin(p[0]));
        let mask = DomainMask::full(g);
        let d = differentiate(&u, &mask);
        let center = g.index(50, 0);
        assert!((g.position(center)[0]).abs() < 1e-13);
        // |error of u'| <= h^2/6 * max|u'''| = 1.7e-5
        assert!((d.gradient[center][0] - 1.0).abs() <= 1.7e-5);
        assert!(d.hessian[center][0].abs() <= 1e-5);
    }

    #[test]
    fn derivative_refinement_order() {
        // For u in C^4 the max-norm error of gradient and second derivative
        // drops by at least 3.5x when h halves.
        let err = |h: f64| -> (f64, f64) {
            let g = grid_1d(-1.0, 1.0, h);
            let u = ScalarField::from_fn(g, |p| crate::math::exp(p[0]) * crate::math::sin(p[0]));
            let mask = DomainMask::full(g);
            let d = differentiate(&u, &mask);
            let mut e1: f64 = 0.0;
            let mut e2: f64 = 0.0;
            for idx in mask.interior_nodes() {
                let x = g.position(idx)[0];
                let exact1 = crate::math::exp(x) * (crate::math::sin(x) + crate::math::cos(x));
                let exact2 = 2.0 * crate::math::exp(x) * crate::math::cos(x);
                e1 = e1.max((d.gradient[idx][0] - exact1).abs());
                e2 = e2.max((d.hessian[idx][0] - exact2).abs());
            }
            (e1, e2)
        };
        let (c1, c2) = err(0.02);
        let (f1, f2) = err(0.01);
        assert!(c1 / f1 >= 3.5, "gradient ratio {}", c1 / f1);
        assert!(c2 / f2 >= 3.5, "hessian ratio {}", c2 / f2);
    }
}
