//! Assembly and explicit time stepping of the auxiliary initial boundary
//! value problem
//!
//! ```text
//!   du/dt = G(r, p, x) - xi(x) (G0(x) - c)   on Q x (0, T)
//!   u     = Dirichlet data rising at rate c  on dQ
//!   u(0)  = u0
//! ```
//!
//! on the sublevel domain `Q = {u0_raw < a_k}`, where `G` is the graphical
//! flow speed with a position-dependent exponent that is the target `alpha`
//! deep inside the domain and 1 near the boundary, `xi` is a cut-off that
//! is 1 near the boundary, and `c <= min G0` so that the right-hand side is
//! exactly `c` on the cut-off region at `t = 0` (discrete compatibility).
//!
//! The scheme is forward Euler with the parabolic CFL computed from the
//! exact eigenvalue bound of the linearized operator.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry;
use crate::grid::{differentiate, sublevel_mask, DerivativeFields, DomainMask, Grid, ScalarField};
use crate::math;

/// C-infinity monotone step: 0 for `s <= 0`, 1 for `s >= 1`,
/// `f(s)/(f(s) + f(1-s))` with `f(s) = exp(-1/s)` in between.
pub fn smooth_transition(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let f = math::exp(-1.0 / s);
        let g = math::exp(-1.0 / (1.0 - s));
        f / (f + g)
    }
}

/// Value bands (in units of the shifted initial height `u0 - a_k`) over
/// which the exponent field and the cut-off field transition.
///
/// The defaults realize "alpha is the target at and below `a_k - 1`, 1 from
/// `a_k - 3/4` up" and "xi is 0 at and below `a_k - 1/2`, 1 from `a_k - 1/4`
/// up", leaving a gap of width 1/4 between the exponent transition and the
/// support of the cut-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionWidths {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub xi_lo: f64,
    pub xi_hi: f64,
}

impl Default for TransitionWidths {
    fn default() -> Self {
        TransitionWidths {
            alpha_lo: -1.0,
            alpha_hi: -0.75,
            xi_lo: -0.5,
            xi_hi: -0.25,
        }
    }
}

/// Fully assembled auxiliary problem on `Q = {u0_raw < a_k}`.
///
/// `u0` is shifted by `-a_k`, so interior nodes satisfy `u0 < 0` and
/// boundary nodes carry the O(h) residual `u0 >= 0` of the lattice
/// approximation of the level set. Dirichlet data on a boundary node is its
/// initial value plus `c t`.
#[derive(Debug, Clone)]
pub struct AuxiliaryProblem {
    pub mask: DomainMask,
    pub u0: ScalarField,
    pub alpha_field: ScalarField,
    pub xi_field: ScalarField,
    pub g0: ScalarField,
    pub c: f64,
    pub alpha_target: f64,
    /// Cut height `a_k` in raw (unshifted) units.
    pub cut_height: f64,
    pub widths: TransitionWidths,
    interior: Vec<u32>,
    boundary: Vec<u32>,
}

impl AuxiliaryProblem {
    pub fn grid(&self) -> Grid {
        self.u0.grid
    }

    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[u32] {
        &self.boundary
    }

    /// Dirichlet value of a boundary node at time `t`.
    #[inline]
    pub fn dirichlet(&self, node: usize, t: f64) -> f64 {
        self.u0.value(node) + self.c * t
    }

    /// Diagnostic variant with the cut-off forced to zero everywhere, so the
    /// equation is the unmodified flow and the compatibility defect at the
    /// boundary band becomes visible.
    pub fn with_xi_disabled(&self) -> AuxiliaryProblem {
        let mut out = self.clone();
        out.xi_field = ScalarField::constant(self.grid(), 0.0);
        out
    }
}

/// Builds the auxiliary problem from raw initial data and a cut height.
pub fn assemble_aux_problem(
    u0_raw: &ScalarField,
    a_k: f64,
    alpha: f64,
) -> Result<AuxiliaryProblem> {
    assemble_with_widths(u0_raw, a_k, alpha, TransitionWidths::default())
}

pub fn assemble_with_widths(
    u0_raw: &ScalarField,
    a_k: f64,
    alpha: f64,
    widths: TransitionWidths,
) -> Result<AuxiliaryProblem> {
    let grid = u0_raw.grid;
    // compactness: the closed sublevel set must not reach the outer frame
    for idx in grid.nodes() {
        if grid.on_frame(idx) && u0_raw.value(idx) <= a_k {
            return Err(Error::NotCompact);
        }
    }
    let mask = sublevel_mask(u0_raw, a_k)?;

    let u0 = ScalarField::new(
        grid,
        u0_raw.values.iter().map(|v| v - a_k).collect(),
    );
    let alpha_field = ScalarField::new(
        grid,
        u0.values
            .iter()
            .map(|&v| {
                1.0 + (alpha - 1.0)
                    * smooth_transition((widths.alpha_hi - v) / (widths.alpha_hi - widths.alpha_lo))
            })
            .collect(),
    );
    let xi_field = ScalarField::new(
        grid,
        u0.values
            .iter()
            .map(|&v| smooth_transition((v - widths.xi_lo) / (widths.xi_hi - widths.xi_lo)))
            .collect(),
    );

    let deriv = differentiate(&u0, &mask);
    let mut g0 = ScalarField::constant(grid, 0.0);
    let mut c = 1.0f64;
    for idx in mask.interior_nodes() {
        let p = deriv.gradient[idx];
        let r = deriv.hessian[idx];
        let g = geometry::speed(grid.dim, &r, p, alpha_field.value(idx))
            .map_err(|_| Error::NotMeanConvex { node: idx })?;
        g0.values[idx] = g;
        c = c.min(g);
    }

    let interior: Vec<u32> = mask.interior_nodes().map(|i| i as u32).collect();
    let boundary: Vec<u32> = mask.boundary_nodes().map(|i| i as u32).collect();
    Ok(AuxiliaryProblem {
        mask,
        u0,
        alpha_field,
        xi_field,
        g0,
        c,
        alpha_target: alpha,
        cut_height: a_k,
        widths,
        interior,
        boundary,
    })
}

/// Solution field at one time, with the derived geometric fields cached on
/// the interior nodes.
#[derive(Debug, Clone)]
pub struct GraphState {
    pub u: ScalarField,
    pub t: f64,
    pub deriv: DerivativeFields,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub a2: Vec<f64>,
}

impl GraphState {
    /// Computes the derived caches; fails if the graph has lost mean
    /// convexity anywhere on the interior.
    pub fn compute(u: ScalarField, t: f64, problem: &AuxiliaryProblem) -> Result<GraphState> {
        let deriv = differentiate(&u, &problem.mask);
        let n = u.grid.node_count();
        let dim = u.grid.dim;
        let (mut w, mut h, mut a2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for &idx in &problem.interior {
            let idx = idx as usize;
            let p = deriv.gradient[idx];
            let r = deriv.hessian[idx];
            let hh = geometry::mean_curvature(dim, &r, p);
            if !(hh > 0.0) {
                return Err(Error::NonpositiveH { node: idx, time: t });
            }
            w[idx] = geometry::gradient_function(dim, p);
            h[idx] = hh;
            let (_, _, aa) = geometry::second_fundamental(dim, &r, p);
            a2[idx] = aa;
        }
        Ok(GraphState { u, t, deriv, w, h, a2 })
    }

    pub fn initial(problem: &AuxiliaryProblem) -> Result<GraphState> {
        GraphState::compute(problem.u0.clone(), 0.0, problem)
    }
}

/// Right-hand side `G(r, p, x) - xi (G0 - c)` on the interior nodes.
pub fn rhs(state: &GraphState, problem: &AuxiliaryProblem) -> Result<ScalarField> {
    let grid = problem.grid();
    let mut out = ScalarField::constant(grid, 0.0);
    for &idx in &problem.interior {
        let idx = idx as usize;
        let p = state.deriv.gradient[idx];
        let r = state.deriv.hessian[idx];
        let g = geometry::speed(grid.dim, &r, p, problem.alpha_field.value(idx)).map_err(|_| {
            Error::NonpositiveH {
                node: idx,
                time: state.t,
            }
        })?;
        out.values[idx] = g - problem.xi_field.value(idx) * (problem.g0.value(idx) - problem.c);
    }
    Ok(out)
}

/// Largest parabolicity eigenvalue over the interior.
pub fn max_lambda(state: &GraphState, problem: &AuxiliaryProblem) -> Result<f64> {
    let grid = problem.grid();
    let mut lambda = 0.0f64;
    for &idx in &problem.interior {
        let idx = idx as usize;
        let p = state.deriv.gradient[idx];
        let r = state.deriv.hessian[idx];
        let (_, _, hi) =
            geometry::parabolicity(grid.dim, &r, p, problem.alpha_field.value(idx)).map_err(
                |_| Error::NonpositiveH {
                    node: idx,
                    time: state.t,
                },
            )?;
        lambda = lambda.max(hi);
    }
    Ok(lambda)
}

/// Parabolic CFL bound `safety * h^2 / (2 n lambda_max)`.
pub fn stable_dt(state: &GraphState, problem: &AuxiliaryProblem, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::SafetyOutOfRange);
    }
    let grid = problem.grid();
    let lambda = max_lambda(state, problem)?;
    let h = grid.spacing;
    Ok(safety * h * h / (2.0 * grid.dim as f64 * lambda))
}

/// One forward-Euler step. `dt` must not exceed the stability bound.
pub fn time_step(state: &GraphState, problem: &AuxiliaryProblem, dt: f64) -> Result<GraphState> {
    let limit = stable_dt(state, problem, 1.0)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::DtTooLarge { dt, limit });
    }
    let f = rhs(state, problem)?;
    let mut u = state.u.clone();
    let t_new = state.t + dt;
    for &idx in &problem.interior {
        let idx = idx as usize;
        u.values[idx] += dt * f.value(idx);
    }
    for &idx in &problem.boundary {
        let idx = idx as usize;
        u.values[idx] = problem.dirichlet(idx, t_new);
    }
    GraphState::compute(u, t_new, problem)
}

/// Coarse record of the step sizes taken between two snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtSpan {
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Time-ordered snapshots of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub problem: AuxiliaryProblem,
    pub snapshots: Vec<GraphState>,
    pub dt_history: Vec<DtSpan>,
    pub label: String,
}

impl Trajectory {
    /// Offset turning stored (shifted) values into raw surface heights.
    pub fn height_offset(&self) -> f64 {
        self.problem.cut_height
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// A run aborted mid-flight; carries the partial trajectory for diagnosis.
#[derive(Debug)]
pub struct EvolveAbort {
    pub error: Error,
    pub partial: Trajectory,
}

/// Snapshotting policy for [`evolve`].
#[derive(Debug, Clone)]
pub enum Schedule {
    /// Step until `t_end`, snapshotting every `cadence` accepted steps plus
    /// the first and last state.
    Cadence { t_end: f64, cadence: usize },
    /// Land exactly on the given times (strictly increasing, first > 0) by
    /// clipping steps; snapshot at each. Used by the cascade so that the
    /// extended family shares snapshot times without interpolation.
    Times(Vec<f64>),
}

/// Evolves the problem with adaptive stable steps.
pub fn evolve(
    problem: &AuxiliaryProblem,
    schedule: Schedule,
    safety: f64,
) -> core::result::Result<Trajectory, Box<EvolveAbort>> {
    let wrap = |error: Error, snapshots: Vec<GraphState>, dt_history: Vec<DtSpan>| {
        Box::new(EvolveAbort {
            error,
            partial: Trajectory {
                problem: problem.clone(),
                snapshots,
                dt_history,
                label: String::from("aborted"),
            },
        })
    };

    let mut snapshots = Vec::new();
    let mut dt_history = Vec::new();
    let state = GraphState::initial(problem)
        .map_err(|e| wrap(e, Vec::new(), Vec::new()))?;

    let (t_end, cadence, times) = match &schedule {
        Schedule::Cadence { t_end, cadence } => (*t_end, (*cadence).max(1), None),
        Schedule::Times(ts) => {
            let t_end = ts.last().copied().unwrap_or(0.0);
            (t_end, usize::MAX, Some(ts.clone()))
        }
    };

    snapshots.push(state);
    if t_end <= 0.0 {
        return Ok(Trajectory {
            problem: problem.clone(),
            snapshots,
            dt_history,
            label: String::from("run"),
        });
    }

    let kernel = StepKernel::new(problem);
    let mut u = problem.u0.values.clone();
    let mut t = 0.0f64;
    let mut span = DtSpan {
        steps: 0,
        min_dt: f64::INFINITY,
        max_dt: 0.0,
    };
    let mut next_time_idx = 0usize;
    let mut steps_since_snap = 0usize;

    loop {
        let target = match &times {
            Some(ts) => ts[next_time_idx],
            None => t_end,
        };
        let (rhs_vals, lambda) = match kernel.rhs_and_lambda(&u) {
            Ok(x) => x,
            Err(node) => {
                let err = Error::NonpositiveH { node, time: t };
                // recompute snapshots list as-is; the offending state itself
                // cannot be cached (H <= 0), so the last good snapshot stands
                dt_history.push(span);
                return Err(wrap(err, snapshots, dt_history));
            }
        };
        let h = problem.grid().spacing;
        let stable = safety * h * h / (2.0 * problem.grid().dim as f64 * lambda);
        let dt = stable.min(target - t);
        let t_new = t + dt;
        for (slot, &idx) in problem.interior.iter().enumerate() {
            u[idx as usize] += dt * rhs_vals[slot];
        }
        for &idx in &problem.boundary {
            let idx = idx as usize;
            u[idx] = problem.dirichlet(idx, t_new);
        }
        t = t_new;
        span.steps += 1;
        span.min_dt = span.min_dt.min(dt);
        span.max_dt = span.max_dt.max(dt);
        steps_since_snap += 1;

        let reached_target = t >= target - 1e-15 * (1.0 + target);
        let snap_now = if times.is_some() {
            reached_target
        } else {
            reached_target || steps_since_snap >= cadence
        };
        if snap_now {
            let field = ScalarField::new(problem.grid(), u.clone());
            match GraphState::compute(field, t, problem) {
                Ok(s) => snapshots.push(s),
                Err(e) => {
                    dt_history.push(span);
                    return Err(wrap(e, snapshots, dt_history));
                }
            }
            dt_history.push(span);
            span = DtSpan {
                steps: 0,
                min_dt: f64::INFINITY,
                max_dt: 0.0,
            };
            steps_since_snap = 0;
        }
        if reached_target {
            match &times {
                Some(ts) => {
                    next_time_idx += 1;
                    if next_time_idx >= ts.len() {
                        break;
                    }
                }
                None => break,
            }
        }
    }

    Ok(Trajectory {
        problem: problem.clone(),
        snapshots,
        dt_history,
        label: String::from("run"),
    })
}

/// Discrete compatibility diagnostics of an assembled problem.
#[derive(Debug, Clone, Copy)]
pub struct CompatibilityReport {
    /// max |rhs - c| at t = 0 over the probe set.
    pub max_deviation: f64,
    /// Number of probed nodes.
    pub probe_count: usize,
    /// max |d/dt rhs| over the probe set after one stable step.
    pub second_step_drift: f64,
}

/// Probes the order-0/1 discrete compatibility: on `{xi = 1}` the right-hand
/// side at `t = 0` equals `c` exactly. When the cut-off has been disabled
/// (diagnostic mode) the probe set falls back to the boundary-adjacent ring,
/// where the report then shows the raw incompatibility `|G0 - c|`.
pub fn compatibility_report(problem: &AuxiliaryProblem) -> Result<CompatibilityReport> {
    let mut probe: Vec<usize> = problem
        .interior
        .iter()
        .map(|&i| i as usize)
        .filter(|&i| problem.xi_field.value(i) == 1.0)
        .collect();
    if probe.is_empty() {
        probe = problem.mask.boundary_adjacent_interior();
    }

    let state0 = GraphState::initial(problem)?;
    let rhs0 = rhs(&state0, problem)?;
    let mut max_dev = 0.0f64;
    for &idx in &probe {
        max_dev = max_dev.max(math::fabs(rhs0.value(idx) - problem.c));
    }

    let dt = stable_dt(&state0, problem, 0.5)?;
    let state1 = time_step(&state0, problem, dt)?;
    let rhs1 = rhs(&state1, problem)?;
    let mut drift = 0.0f64;
    for &idx in &probe {
        drift = drift.max(math::fabs(rhs1.value(idx) - rhs0.value(idx)) / dt);
    }

    Ok(CompatibilityReport {
        max_deviation: max_dev,
        probe_count: probe.len(),
        second_step_drift: drift,
    })
}

/// Fused per-step kernel: right-hand side and the largest parabolicity
/// eigenvalue in one pass, central stencils only (the mask construction
/// guarantees every interior node has a full data-carrying stencil).
struct StepKernel<'a> {
    problem: &'a AuxiliaryProblem,
    inv2h: f64,
    invh2: f64,
    nx: usize,
}

impl<'a> StepKernel<'a> {
    fn new(problem: &'a AuxiliaryProblem) -> StepKernel<'a> {
        let h = problem.grid().spacing;
        StepKernel {
            problem,
            inv2h: 1.0 / (2.0 * h),
            invh2: 1.0 / (h * h),
            nx: problem.grid().extents[0],
        }
    }

    /// Returns (rhs on interior nodes in `interior` order, lambda_max), or
    /// the offending node index on loss of mean convexity.
    fn rhs_and_lambda(&self, u: &[f64]) -> core::result::Result<(Vec<f64>, f64), usize> {
        let p = self.problem;
        let dim = p.grid().dim;
        let mut out = Vec::with_capacity(p.interior.len());
        let mut lambda = 0.0f64;
        let alpha = &p.alpha_field.values;
        let xi = &p.xi_field.values;
        let g0 = &p.g0.values;
        let c = p.c;

        if dim == 1 {
            for &idx in &p.interior {
                let i = idx as usize;
                let px = (u[i + 1] - u[i - 1]) * self.inv2h;
                let rxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * self.invh2;
                let q = 1.0 + px * px;
                let sq = math::sqrt(q);
                let h_curv = rxx / (q * sq);
                if !(h_curv > 0.0) {
                    return Err(i);
                }
                let a = alpha[i];
                let g = sq * math::powf(h_curv, a);
                // lambda = a H^{a-1} / (w q) = a (g / (sq H)) * sq / q
                let lam = a * g / (h_curv * q);
                if lam > lambda {
                    lambda = lam;
                }
                let x = xi[i];
                out.push(if x == 0.0 { g } else { g - x * (g0[i] - c) });
            }
        } else {
            let nx = self.nx;
            for &idx in &p.interior {
                let i = idx as usize;
                let px = (u[i + 1] - u[i - 1]) * self.inv2h;
                let py = (u[i + nx] - u[i - nx]) * self.inv2h;
                let rxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * self.invh2;
                let ryy = (u[i + nx] - 2.0 * u[i] + u[i - nx]) * self.invh2;
                let rxy = (u[i + nx + 1] - u[i + nx - 1] - u[i - nx + 1] + u[i - nx - 1])
                    * (0.25 * self.invh2);
                let q = 1.0 + px * px + py * py;
                let sq = math::sqrt(q);
                let prp = px * px * rxx + 2.0 * px * py * rxy + py * py * ryy;
                let h_curv = (rxx + ryy - prp / q) / sq;
                if !(h_curv > 0.0) {
                    return Err(i);
                }
                let a = alpha[i];
                let g = sq * math::powf(h_curv, a);
                // lambda_max = a H^{a-1} / w = a g / H / q * ... = a g / (H q) * q
                let lam = a * g / h_curv;
                if lam > lambda {
                    lambda = lam;
                }
                let x = xi[i];
                out.push(if x == 0.0 { g } else { g - x * (g0[i] - c) });
            }
        }
        Ok((out, lambda))
    }
}
