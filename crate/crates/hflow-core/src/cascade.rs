//! Exhaustion of a complete graph by compact auxiliary problems: solve at a
//! ladder of cut heights `a_k`, extend each solution by `a_k + c t` outside
//! its domain, and measure Cauchy convergence of the extended family below a
//! fixed height.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{differentiate, DomainMask, Grid, ScalarField};
use crate::math;
use crate::solver::{self, Schedule, Trajectory};

/// Output of [`run_cascade`]: one evolved and extended solution per height,
/// on a shared grid and shared snapshot times.
#[derive(Debug, Clone)]
pub struct CascadeResult {
    pub heights: Vec<f64>,
    /// Per-problem compatibility constant `c_k`.
    pub c_values: Vec<f64>,
    /// Shared snapshot times, starting at 0.
    pub times: Vec<f64>,
    /// `extended[k][j]`: full-grid raw-height field of height `k` at
    /// `times[j]`.
    pub extended: Vec<Vec<ScalarField>>,
    /// The underlying compact-domain trajectories, for estimate audits.
    pub trajectories: Vec<Trajectory>,
    pub grid: Grid,
}

/// Picks `count` heights `start + j step`, each nudged within `±step/4`
/// towards a discrete regular value of `u0` when the unnudged level band
/// carries a near-critical point.
pub fn select_heights(
    u0: &ScalarField,
    count: usize,
    start: f64,
    step: f64,
) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::NeedTwoHeights);
    }
    let grid = u0.grid;
    let top = start + count as f64 * step;
    for idx in grid.nodes() {
        if grid.on_frame(idx) && u0.value(idx) <= top {
            return Err(Error::NotCompact);
        }
    }

    let deriv = differentiate(u0, &DomainMask::full(grid));
    let grad_mag = |idx: usize| math::hypot2(deriv.gradient[idx][0], deriv.gradient[idx][1]);
    // min |grad u0| over the cells cut by the level a
    let band_min = |a: f64| -> f64 {
        let mut best = f64::INFINITY;
        for idx in grid.nodes() {
            let here = u0.value(idx) - a;
            let mut cut = false;
            for nb in crate::grid::box_neighbors(&grid, idx) {
                if (u0.value(nb) - a) * here <= 0.0 {
                    cut = true;
                    break;
                }
            }
            if cut {
                best = best.min(grad_mag(idx));
            }
        }
        best
    };

    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let a = start + j as f64 * step;
        // candidate offsets ordered by |delta| so ties keep the nominal value
        let mut best_delta = 0.0;
        let mut best_val = band_min(a);
        let nominal = best_val;
        for m in 1..=4 {
            for sign in [1.0, -1.0] {
                let delta = sign * m as f64 * step / 16.0;
                let v = band_min(a + delta);
                // a level that no cell crosses is not a usable height
                if !v.is_finite() {
                    continue;
                }
                if v > best_val * (1.0 + 1e-12) {
                    best_val = v;
                    best_delta = delta;
                }
            }
        }
        // only move off the nominal height when its band is near-critical
        if nominal >= 0.25 * best_val {
            out.push(a);
        } else {
            out.push(a + best_delta);
        }
    }
    Ok(out)
}

/// Extends every snapshot of a compact-domain run to the full grid:
/// `v + a_k` where the domain carries data, `a_k + c t` outside.
pub fn extend_solution(traj: &Trajectory) -> Vec<ScalarField> {
    let p = &traj.problem;
    let grid = p.grid();
    let a_k = p.cut_height;
    traj.snapshots
        .iter()
        .map(|s| {
            ScalarField::new(
                grid,
                grid.nodes()
                    .map(|idx| {
                        if p.mask.has_data(idx) {
                            s.u.value(idx) + a_k
                        } else {
                            a_k + p.c * s.t
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Largest mismatch between the boundary values and the exterior formula
/// `a_k + c t`, over all snapshots. Scales with `h` times the boundary
/// slope; a diagnostic for a discontinuous extension.
pub fn extension_jump(traj: &Trajectory) -> f64 {
    let p = &traj.problem;
    let mut jump = 0.0f64;
    for s in &traj.snapshots {
        for &idx in p.boundary_nodes() {
            let idx = idx as usize;
            // boundary value + a_k versus a_k + c t
            jump = jump.max(math::fabs(s.u.value(idx) - p.c * s.t));
        }
    }
    jump
}

/// Assembles, evolves and extends one auxiliary problem per height, all on
/// the shared snapshot schedule `t_end * j / snapshots`.
pub fn run_cascade(
    u0_raw: &ScalarField,
    heights: &[f64],
    alpha: f64,
    t_end: f64,
    snapshots: usize,
    safety: f64,
) -> Result<CascadeResult> {
    if heights.len() < 2 {
        return Err(Error::NeedTwoHeights);
    }
    let snapshots = snapshots.max(1);
    let times: Vec<f64> = (1..=snapshots)
        .map(|j| t_end * j as f64 / snapshots as f64)
        .collect();

    let mut c_values = Vec::with_capacity(heights.len());
    let mut extended = Vec::with_capacity(heights.len());
    let mut trajectories = Vec::with_capacity(heights.len());
    for (k, &a_k) in heights.iter().enumerate() {
        let problem = solver::assemble_aux_problem(u0_raw, a_k, alpha)?;
        let mut traj =
            solver::evolve(&problem, Schedule::Times(times.clone()), safety).map_err(|a| a.error)?;
        traj.label = format!("k={k}");
        c_values.push(problem.c);
        extended.push(extend_solution(&traj));
        trajectories.push(traj);
    }

    let mut full_times = Vec::with_capacity(times.len() + 1);
    full_times.push(0.0);
    full_times.extend_from_slice(&times);
    Ok(CascadeResult {
        heights: heights.to_vec(),
        c_values,
        times: full_times,
        extended,
        trajectories,
        grid: u0_raw.grid,
    })
}

/// `sup |v_{k+1} - v_k|` over `{v_{k+1} < a, t <= t_star}` for the
/// consecutive pair starting at `pair` (no height-margin guard; callers
/// measuring raw agreement below low heights use this directly).
pub fn sup_difference_below(result: &CascadeResult, pair: usize, a: f64, t_star: f64) -> f64 {
    let lo = &result.extended[pair];
    let hi = &result.extended[pair + 1];
    let mut sup = 0.0f64;
    for (j, &t) in result.times.iter().enumerate() {
        if t > t_star * (1.0 + 1e-12) {
            break;
        }
        for idx in result.grid.nodes() {
            if hi[j].value(idx) < a {
                sup = sup.max(math::fabs(hi[j].value(idx) - lo[j].value(idx)));
            }
        }
    }
    sup
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub a: f64,
    pub t_star: f64,
    /// `d[j] = sup |v_{j+1} - v_j|` below `a` for `t <= t_star`.
    pub d: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
    /// Index of the limit-candidate (finest) member.
    pub limit_index: usize,
}

impl ConvergenceReport {
    /// Aligned columnar text: `k d_k a t_star` per pair.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for (j, d) in self.d.iter().enumerate() {
            s.push_str(&format!("{} {:.17e} {} {}\n", j, d, self.a, self.t_star));
        }
        s
    }
}

/// Cauchy-convergence measurement of the extended family below height `a`
/// up to `t_star`. Requires `a < min heights - 2`, the margin under which
/// the interior estimates apply.
pub fn convergence_report(result: &CascadeResult, a: f64, t_star: f64) -> Result<ConvergenceReport> {
    let min_height = result
        .heights
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x));
    if a >= min_height - 2.0 {
        return Err(Error::WindowTooHigh);
    }
    let d: Vec<f64> = (0..result.heights.len() - 1)
        .map(|pair| sup_difference_below(result, pair, a, t_star))
        .collect();
    let h = result.grid.spacing;
    let tol = 10.0 * h * h;
    let all_small = d.iter().all(|&x| x < tol);
    let trend = d.len() >= 2 && d.windows(2).all(|w| w[1] <= 0.9 * w[0]);
    Ok(ConvergenceReport {
        a,
        t_star,
        pass: all_small || trend,
        d,
        tol,
        limit_index: result.heights.len() - 1,
    })
}

/// Indicator of the recovered domain `{v_finest(. , times[snap]) < a}`.
pub fn omega_indicator(result: &CascadeResult, a: f64, snap: usize) -> Vec<bool> {
    let field = &result.extended[result.extended.len() - 1][snap];
    field.values.iter().map(|&v| v < a).collect()
}
