//! Numerics for the flow of graphical hypersurfaces with normal velocity
//! `H^alpha` (a positive power of the mean curvature).
//!
//! The crate is split along the pipeline:
//!
//! * [`grid`] — uniform Cartesian lattices, sublevel-set domain masks,
//!   finite-difference derivatives.
//! * [`geometry`] — pointwise geometric quantities of a graph from its slope
//!   and Hessian: gradient function `w`, mean curvature `H`, `|A|^2`, the
//!   speed `G`, and the parabolicity matrix of the flow operator.
//! * [`solver`] — assembly and explicit time stepping of the auxiliary
//!   initial boundary value problem on a bounded sublevel domain, with the
//!   exponent field, cut-off field and compatible Dirichlet data.
//! * [`estimates`] — numerical audits of the height-localized a priori
//!   bounds along a trajectory.
//! * [`cascade`] — solving the auxiliary problem at a ladder of cut heights,
//!   extending each solution to the full grid and measuring Cauchy
//!   convergence of the family below a fixed height.
//! * [`curve`] — one-dimensional marker-particle flows in normal
//!   parametrization, exact oracles (grim reaper, shrinking circles,
//!   translator profiles) and finite-difference verification of the
//!   evolution identities.
//!
//! The crate is `no_std` (with `alloc`); all file formats and the CLI live
//! in the companion `hflow` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod cascade;
pub mod curve;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod grid;
pub(crate) mod math;
pub mod presets;
pub mod solver;

pub use error::Error;
pub use grid::{CellClass, DomainMask, Grid, ScalarField};
