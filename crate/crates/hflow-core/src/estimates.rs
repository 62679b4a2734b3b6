//! Numerical audit of the height-localized a priori bounds and of the
//! monotonicity program along solver trajectories.
//!
//! Each continuum inequality is checked with discretization slack
//! `eps_h = c_tol * h^2` (default `c_tol = 10`); a deficit that shrinks
//! under grid refinement is discretization, not dynamics. Upper bounds with
//! unknown constants are audited as refinement stability of the localized
//! ratio instead of reconstructing constants from the proofs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::math;
use crate::solver::Trajectory;

/// Default slack multiplier in `eps_h = c_tol * h^2`.
pub const DEFAULT_C_TOL: f64 = 10.0;

/// Height-localization window of `psi = (a - b t - height)_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationWindow {
    pub a: f64,
    pub b: f64,
}

impl LocalizationWindow {
    pub fn new(a: f64, b: f64) -> LocalizationWindow {
        assert!(a > 0.0 && b >= 0.0);
        LocalizationWindow { a, b }
    }

    #[inline]
    pub fn psi(&self, height: f64, t: f64) -> f64 {
        (self.a - self.b * t - height).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The localization support was empty; nothing was claimed.
    Vacuous,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Vacuous => "VACUOUS",
        }
    }
}

/// Outcome of one audited inequality.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub check: &'static str,
    /// Bound formula rendered with its constants.
    pub formula: String,
    pub observed: f64,
    pub bound: f64,
    /// Signed slack; for lower bounds `observed - bound`, for
    /// ratio-stability checks `bound - observed`.
    pub margin: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
    pub window: LocalizationWindow,
    pub h: f64,
    pub trajectory: String,
}

impl EstimateReport {
    /// Flat line-oriented record.
    pub fn line(&self) -> String {
        format!(
            "check={} a={} b={} h={} observed={} bound={} margin={} status={}",
            self.check,
            self.window.a,
            self.window.b,
            self.h,
            self.observed,
            self.bound,
            self.margin,
            self.status.as_str()
        )
    }
}

/// `psi` evaluated over a raw height field at time `t`.
pub fn psi_values(height: &ScalarField, t: f64, window: LocalizationWindow) -> ScalarField {
    ScalarField::new(
        height.grid,
        height
            .values
            .iter()
            .map(|&v| window.psi(v, t))
            .collect(),
    )
}

/// `psi` of a solver state (heights are the stored values plus the cut
/// height of the problem, undoing the assembly shift).
pub fn psi_field(
    state: &crate::solver::GraphState,
    window: LocalizationWindow,
    height_offset: f64,
) -> ScalarField {
    ScalarField::new(
        state.u.grid,
        state
            .u
            .values
            .iter()
            .map(|&v| window.psi(v + height_offset, state.t))
            .collect(),
    )
}

/// Guard: the support of `psi` must stay inside the region where the
/// equation is the unmodified flow (below the exponent-transition band).
fn window_guard(traj: &Trajectory, window: LocalizationWindow) -> Result<()> {
    let t_end = traj.snapshots.last().map(|s| s.t).unwrap_or(0.0);
    let limit = traj.problem.cut_height + traj.problem.widths.alpha_lo - window.b * t_end;
    if window.a > limit + 1e-12 {
        return Err(Error::WindowTooHigh);
    }
    Ok(())
}

/// Folds `quantity(idx, state) / psi` over the support of `psi` on the
/// given snapshot range, returning the minimum, or `None` if the support
/// is empty.
fn localized_min(
    traj: &Trajectory,
    window: LocalizationWindow,
    snaps: core::ops::Range<usize>,
    mut quantity: impl FnMut(usize, &crate::solver::GraphState) -> f64,
) -> Option<f64> {
    let offset = traj.height_offset();
    let mut best: Option<f64> = None;
    for state in &traj.snapshots[snaps] {
        for &idx in traj.problem.interior_nodes() {
            let idx = idx as usize;
            let psi = window.psi(state.u.value(idx) + offset, state.t);
            if psi > 0.0 {
                let q = quantity(idx, state) / psi;
                best = Some(match best {
                    Some(b) if b <= q => b,
                    _ => q,
                });
            }
        }
    }
    best
}

fn vacuous(
    check: &'static str,
    window: LocalizationWindow,
    traj: &Trajectory,
) -> EstimateReport {
    EstimateReport {
        check,
        formula: String::from("psi support empty"),
        observed: f64::NAN,
        bound: f64::NAN,
        margin: 0.0,
        tolerance: 0.0,
        status: CheckStatus::Vacuous,
        window,
        h: traj.problem.grid().spacing,
        trajectory: traj.label.clone(),
    }
}

/// Localized gradient bound: `psi^{-1} w` stays above its initial infimum
/// (alpha <= 1), or above `min{initial, alpha/(n(alpha-1)), b/(a(alpha-1))}`
/// (alpha > 1).
pub fn check_gradient_localized(
    traj: &Trajectory,
    window: LocalizationWindow,
    alpha: f64,
    c_tol: f64,
) -> Result<EstimateReport> {
    window_guard(traj, window)?;
    let n = traj.problem.grid().dim as f64;
    let init = localized_min(traj, window, 0..1, |idx, s| s.w[idx]);
    let init = match init {
        Some(v) => v,
        None => return Ok(vacuous("gradient_localized", window, traj)),
    };
    let observed = localized_min(traj, window, 0..traj.snapshots.len(), |idx, s| s.w[idx])
        .unwrap_or(init);
    let bound = if alpha <= 1.0 {
        init
    } else {
        let c1 = alpha / (n * (alpha - 1.0));
        let c2 = window.b / (window.a * (alpha - 1.0));
        init.min(c1).min(c2)
    };
    let h = traj.problem.grid().spacing;
    let tolerance = c_tol * h * h;
    let margin = observed - bound;
    Ok(EstimateReport {
        check: "gradient_localized",
        formula: format!(
            "min psi^-1 w >= {} (init {}, alpha {}, n {})",
            bound, init, alpha, n
        ),
        observed,
        bound,
        margin,
        tolerance,
        status: if margin >= -tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        window,
        h,
        trajectory: traj.label.clone(),
    })
}

/// Localized lower speed bound: `psi^{-1} H^alpha` stays above its initial
/// infimum (alpha <= 1), or above `min{initial, b/(a(alpha-1))}` (alpha > 1).
pub fn check_speed_lower_localized(
    traj: &Trajectory,
    window: LocalizationWindow,
    alpha: f64,
    c_tol: f64,
) -> Result<EstimateReport> {
    window_guard(traj, window)?;
    let speed = |idx: usize, s: &crate::solver::GraphState| math::powf(s.h[idx], alpha);
    let init = match localized_min(traj, window, 0..1, speed) {
        Some(v) => v,
        None => return Ok(vacuous("speed_lower_localized", window, traj)),
    };
    let observed =
        localized_min(traj, window, 0..traj.snapshots.len(), speed).unwrap_or(init);
    let bound = if alpha <= 1.0 {
        init
    } else {
        init.min(window.b / (window.a * (alpha - 1.0)))
    };
    let h = traj.problem.grid().spacing;
    let tolerance = c_tol * h * h;
    let margin = observed - bound;
    Ok(EstimateReport {
        check: "speed_lower_localized",
        formula: format!("min psi^-1 H^alpha >= {} (init {})", bound, init),
        observed,
        bound,
        margin,
        tolerance,
        status: if margin >= -tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        window,
        h,
        trajectory: traj.label.clone(),
    })
}

/// Hypothesis scan on the support of `psi` across all snapshots.
fn scan_hypotheses(
    traj: &Trajectory,
    window: LocalizationWindow,
    wbar: f64,
    cbound: Option<(f64, f64)>,
) -> Result<bool> {
    let offset = traj.height_offset();
    let mut any = false;
    let mut min_w = f64::INFINITY;
    for state in &traj.snapshots {
        for &idx in traj.problem.interior_nodes() {
            let idx = idx as usize;
            if window.psi(state.u.value(idx) + offset, state.t) > 0.0 {
                any = true;
                min_w = min_w.min(state.w[idx]);
                if let Some((alpha, c)) = cbound {
                    let half = 0.5 * math::powf(state.h[idx], alpha);
                    if !(c <= half && half <= 1.0 / c) {
                        return Err(Error::HHypothesisFailed);
                    }
                }
            }
        }
    }
    if any && min_w < 2.0 * wbar {
        return Err(Error::GradientHypothesisFailed {
            observed_min_w: min_w,
            required: 2.0 * wbar,
        });
    }
    Ok(any)
}

/// Localized ratio `sup_t max psi q / max{sup_{t=0} psi q, 1}` for a
/// per-node quantity `q`.
fn localized_ratio(
    traj: &Trajectory,
    window: LocalizationWindow,
    mut quantity: impl FnMut(usize, &crate::solver::GraphState) -> f64,
) -> f64 {
    let offset = traj.height_offset();
    let mut sup0 = 0.0f64;
    let mut sup_all = 0.0f64;
    for (j, state) in traj.snapshots.iter().enumerate() {
        for &idx in traj.problem.interior_nodes() {
            let idx = idx as usize;
            let psi = window.psi(state.u.value(idx) + offset, state.t);
            if psi > 0.0 {
                let v = psi * quantity(idx, state);
                if j == 0 {
                    sup0 = sup0.max(v);
                }
                sup_all = sup_all.max(v);
            }
        }
    }
    sup_all / sup0.max(1.0)
}

/// Localized upper bound on `H`: the unknown constant is not reconstructed;
/// the audit requires the ratio `sup_t max psi H / max{sup_0 psi H, 1}` to
/// be finite and stable under refinement: `R(h/2) <= 1.1 R(h)`.
///
/// `coarse` and `fine` are runs of the same data at `h` and `h/2`.
pub fn check_h_upper_localized(
    coarse: &Trajectory,
    fine: &Trajectory,
    window: LocalizationWindow,
    wbar: f64,
) -> Result<EstimateReport> {
    assert!(window.b == 0.0, "upper bounds use b = 0");
    window_guard(coarse, window)?;
    window_guard(fine, window)?;
    let any = scan_hypotheses(fine, window, wbar, None)?
        | scan_hypotheses(coarse, window, wbar, None)?;
    if !any {
        return Ok(vacuous("h_upper_localized", window, fine));
    }
    let r_coarse = localized_ratio(coarse, window, |idx, s| s.h[idx]);
    let r_fine = localized_ratio(fine, window, |idx, s| s.h[idx]);
    let bound = 1.1 * r_coarse;
    let margin = bound - r_fine;
    Ok(EstimateReport {
        check: "h_upper_localized",
        formula: format!("R(h/2) = {} <= 1.1 R(h) = {}", r_fine, bound),
        observed: r_fine,
        bound,
        margin,
        tolerance: 0.0,
        status: if r_fine.is_finite() && margin >= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        window,
        h: fine.problem.grid().spacing,
        trajectory: fine.label.clone(),
    })
}

/// Localized curvature bound: ratio stability of `psi |A|` under the
/// standing hypotheses `w >= 2 wbar` and `cbound <= H^alpha/2 <= 1/cbound`
/// on the support of `psi`.
pub fn check_curvature_localized(
    coarse: &Trajectory,
    fine: &Trajectory,
    window: LocalizationWindow,
    alpha: f64,
    cbound: f64,
    wbar: f64,
) -> Result<EstimateReport> {
    assert!(window.b == 0.0, "upper bounds use b = 0");
    window_guard(coarse, window)?;
    window_guard(fine, window)?;
    let any = scan_hypotheses(fine, window, wbar, Some((alpha, cbound)))?
        | scan_hypotheses(coarse, window, wbar, Some((alpha, cbound)))?;
    if !any {
        return Ok(vacuous("curvature_localized", window, fine));
    }
    let norm_a = |idx: usize, s: &crate::solver::GraphState| math::sqrt(s.a2[idx]);
    let r_coarse = localized_ratio(coarse, window, norm_a);
    let r_fine = localized_ratio(fine, window, norm_a);
    let bound = 1.1 * r_coarse;
    let margin = bound - r_fine;
    Ok(EstimateReport {
        check: "curvature_localized",
        formula: format!("R(h/2) = {} <= 1.1 R(h) = {}", r_fine, bound),
        observed: r_fine,
        bound,
        margin,
        tolerance: 0.0,
        status: if r_fine.is_finite() && margin >= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        window,
        h: fine.problem.grid().spacing,
        trajectory: fine.label.clone(),
    })
}

fn slack_report(
    check: &'static str,
    formula: String,
    slack: f64,
    tolerance: f64,
    traj: &Trajectory,
) -> EstimateReport {
    EstimateReport {
        check,
        formula,
        observed: slack,
        bound: 0.0,
        margin: slack,
        tolerance,
        status: if slack >= -tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        window: LocalizationWindow { a: f64::INFINITY, b: 0.0 },
        h: traj.problem.grid().spacing,
        trajectory: traj.label.clone(),
    }
}

/// Audits the monotonicity program along a trajectory: (1) speed squeeze
/// `c <= du/dt <= sup G0`, (2) height pinching `u0 <= u - c t <= 0`,
/// (3) boundary gradient, (4) upper speed `H^alpha(x) <= 2 sup G0`,
/// (6) lower speed `H^alpha(x) >= c inf w`. One report per item; `observed`
/// is the worst signed slack of the item (two-sided items fold both sides).
pub fn check_program_bounds(traj: &Trajectory, c_tol: f64) -> Vec<EstimateReport> {
    let p = &traj.problem;
    let h = p.grid().spacing;
    let eps = c_tol * h * h;
    let c = p.c;
    let mut sup_g0 = f64::NEG_INFINITY;
    for &idx in p.interior_nodes() {
        sup_g0 = sup_g0.max(p.g0.value(idx as usize));
    }
    let mut out = Vec::with_capacity(5);

    // (1) snapshot-to-snapshot rates
    let mut slack1 = f64::INFINITY;
    for pair in traj.snapshots.windows(2) {
        let dt = pair[1].t - pair[0].t;
        for &idx in p.interior_nodes() {
            let idx = idx as usize;
            let rate = (pair[1].u.value(idx) - pair[0].u.value(idx)) / dt;
            slack1 = slack1.min(rate - c).min(sup_g0 - rate);
        }
    }
    out.push(slack_report(
        "program1_speed_squeeze",
        format!("{} <= du/dt <= {}", c, sup_g0),
        slack1,
        eps,
        traj,
    ));

    // (2) height pinching
    let mut slack2 = f64::INFINITY;
    for state in &traj.snapshots {
        for &idx in p.interior_nodes() {
            let idx = idx as usize;
            let v = state.u.value(idx) - c * state.t;
            slack2 = slack2.min(v - p.u0.value(idx)).min(-v);
        }
    }
    out.push(slack_report(
        "program2_height_pinching",
        String::from("u0 <= u - c t <= 0"),
        slack2,
        eps,
        traj,
    ));

    // (3) boundary gradient: compare against the initial gradient on the
    // boundary ring
    let ring = p.mask.boundary_adjacent_interior();
    let init = &traj.snapshots[0];
    let grad_mag = |g: [f64; 2]| math::hypot2(g[0], g[1]);
    let mut bound3 = 0.0f64;
    for &idx in p.boundary_nodes() {
        bound3 = bound3.max(grad_mag(init.deriv.gradient[idx as usize]));
    }
    for &idx in &ring {
        bound3 = bound3.max(grad_mag(init.deriv.gradient[idx]));
    }
    let mut max3 = 0.0f64;
    for state in &traj.snapshots {
        for &idx in &ring {
            max3 = max3.max(grad_mag(state.deriv.gradient[idx]));
        }
    }
    // gradients near the cut scale like the boundary slope; the slack must
    // scale with the bound or steep cuts fail on round-off alone
    let eps3 = eps * (1.0 + bound3);
    out.push(slack_report(
        "program3_boundary_gradient",
        format!("|grad u| <= {} at boundary-adjacent nodes", bound3),
        bound3 - max3,
        eps3,
        traj,
    ));

    // (4) upper speed with the position-dependent exponent
    let mut max4 = 0.0f64;
    for state in &traj.snapshots {
        for &idx in p.interior_nodes() {
            let idx = idx as usize;
            max4 = max4.max(math::powf(state.h[idx], p.alpha_field.value(idx)));
        }
    }
    out.push(slack_report(
        "program4_speed_upper",
        format!("H^alpha(x) <= {}", 2.0 * sup_g0),
        2.0 * sup_g0 - max4,
        eps,
        traj,
    ));

    // (6) lower speed against c inf w, per snapshot
    let mut slack6 = f64::INFINITY;
    for state in &traj.snapshots {
        let mut min_w = f64::INFINITY;
        let mut min_speed = f64::INFINITY;
        for &idx in p.interior_nodes() {
            let idx = idx as usize;
            min_w = min_w.min(state.w[idx]);
            min_speed = min_speed.min(math::powf(state.h[idx], p.alpha_field.value(idx)));
        }
        slack6 = slack6.min(min_speed - c * min_w);
    }
    out.push(slack_report(
        "program6_speed_lower",
        format!("H^alpha(x) >= {} inf w", c),
        slack6,
        eps,
        traj,
    ));

    out
}
