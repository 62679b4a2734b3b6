//! Marker-particle flows of plane curves in normal parametrization,
//! `dX/dt = kappa^alpha nu`, with exact oracles (grim reaper, shrinking
//! circles, translator profiles) and finite-difference verification of the
//! evolution identities for constant alpha.
//!
//! Sign conventions: markers are ordered so that the signed curvature of the
//! test corpus is positive (counterclockwise for closed convex curves,
//! left-to-right for convex-up graphical arcs); `nu` is then the left
//! normal of the tangent, which points in the direction of the curvature
//! vector.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Endpoint rule for open marker curves.
#[derive(Clone, Copy)]
pub enum BoundaryMotion {
    /// Endpoints carry the prescribed velocity field `(position, t) ->
    /// velocity`; used when the exact motion of the arc ends is known.
    Prescribed(fn([f64; 2], f64) -> [f64; 2]),
    /// Endpoints are frozen in place.
    Fixed,
}

/// Ordered markers on a plane curve.
#[derive(Debug, Clone)]
pub struct MarkerCurve {
    pub points: Vec<[f64; 2]>,
    pub t: f64,
    pub closed: bool,
}

/// Pointwise geometry of one marker from its two neighbors.
#[derive(Debug, Clone, Copy)]
pub struct MarkerGeometry {
    pub kappa: f64,
    pub nu: [f64; 2],
    /// Vertical normal component `<nu, e2>` (the gradient function on
    /// graphical arcs).
    pub w: f64,
    /// Smaller of the two adjacent chord lengths.
    pub ds: f64,
}

impl MarkerCurve {
    /// Counterclockwise circle of radius `r` with `n` markers.
    pub fn circle(r: f64, n: usize) -> MarkerCurve {
        assert!(n >= 8);
        let points = (0..n)
            .map(|j| {
                let th = 2.0 * core::f64::consts::PI * j as f64 / n as f64;
                [r * math::cos(th), r * math::sin(th)]
            })
            .collect();
        MarkerCurve {
            points,
            t: 0.0,
            closed: true,
        }
    }

    /// Graphical arc of the grim reaper at time `t`, markers uniform in x.
    pub fn grim_reaper_arc(x_lo: f64, x_hi: f64, n: usize, t: f64) -> Result<MarkerCurve> {
        assert!(n >= 8 && x_lo < x_hi);
        let mut points = Vec::with_capacity(n);
        for j in 0..n {
            let x = x_lo + (x_hi - x_lo) * j as f64 / (n - 1) as f64;
            points.push([x, grim_reaper(x, t)?]);
        }
        Ok(MarkerCurve {
            points,
            t,
            closed: false,
        })
    }

    fn neighbor_indices(&self, i: usize) -> Option<(usize, usize)> {
        let n = self.points.len();
        if self.closed {
            Some(((i + n - 1) % n, (i + 1) % n))
        } else if i == 0 || i == n - 1 {
            None
        } else {
            Some((i - 1, i + 1))
        }
    }

    /// Geometry at marker `i` by nonuniform 3-point chord-length
    /// differences; `None` at open endpoints.
    pub fn geometry(&self, i: usize) -> Option<Result<MarkerGeometry>> {
        let (im, ip) = self.neighbor_indices(i)?;
        let (a, x, b) = (self.points[im], self.points[i], self.points[ip]);
        let d1 = math::hypot2(x[0] - a[0], x[1] - a[1]);
        let d2 = math::hypot2(b[0] - x[0], b[1] - x[1]);
        let (xs, xss) = nonuniform_d1_d2(a, x, b, d1, d2);
        let speed2 = xs[0] * xs[0] + xs[1] * xs[1];
        let speed = math::sqrt(speed2);
        let cross = xs[0] * xss[1] - xs[1] * xss[0];
        let kappa = cross / (speed2 * speed);
        if !(kappa > 0.0) {
            return Some(Err(Error::NonpositiveKappa { marker: i }));
        }
        // left normal of the unit tangent
        let nu = [-xs[1] / speed, xs[0] / speed];
        Some(Ok(MarkerGeometry {
            kappa,
            nu,
            w: nu[1],
            ds: d1.min(d2),
        }))
    }

    /// Geometry of every marker (endpoints of open curves excluded).
    pub fn geometries(&self) -> Result<Vec<(usize, MarkerGeometry)>> {
        let mut out = Vec::with_capacity(self.points.len());
        for i in 0..self.points.len() {
            if let Some(g) = self.geometry(i) {
                out.push((i, g?));
            }
        }
        Ok(out)
    }
}

/// First and second parameter derivatives at the middle of three samples
/// with parameter gaps `d1` (left) and `d2` (right).
fn nonuniform_d1_d2(
    a: [f64; 2],
    x: [f64; 2],
    b: [f64; 2],
    d1: f64,
    d2: f64,
) -> ([f64; 2], [f64; 2]) {
    let s = d1 + d2;
    let mut xs = [0.0; 2];
    let mut xss = [0.0; 2];
    for c in 0..2 {
        xs[c] = (-d2 / (d1 * s)) * a[c] + ((d2 - d1) / (d1 * d2)) * x[c] + (d1 / (d2 * s)) * b[c];
        xss[c] = 2.0 * (a[c] / (d1 * s) - x[c] / (d1 * d2) + b[c] / (d2 * s));
    }
    (xs, xss)
}

/// Scalar version of the nonuniform derivatives: returns (q_s, q_ss).
fn nonuniform_scalar(qa: f64, q: f64, qb: f64, d1: f64, d2: f64) -> (f64, f64) {
    let s = d1 + d2;
    (
        (-d2 / (d1 * s)) * qa + ((d2 - d1) / (d1 * d2)) * q + (d1 / (d2 * s)) * qb,
        2.0 * (qa / (d1 * s) - q / (d1 * d2) + qb / (d2 * s)),
    )
}

/// Grim reaper height `t - log cos x`; exact solution for `alpha = 1`.
pub fn grim_reaper(x: f64, t: f64) -> Result<f64> {
    if math::fabs(x) >= core::f64::consts::FRAC_PI_2 {
        return Err(Error::OutOfDomain);
    }
    Ok(t - math::log(math::cos(x)))
}

/// Radius of the shrinking circle: `(R0^(a+1) - (a+1) t)^(1/(a+1))`.
pub fn circle_radius(alpha: f64, r0: f64, t: f64) -> Result<f64> {
    let e = alpha + 1.0;
    let core_val = math::powf(r0, e) - e * t;
    if core_val <= 0.0 {
        return Err(Error::Extinct);
    }
    Ok(math::powf(core_val, 1.0 / e))
}

/// Extinction time `R0^(a+1) / (a+1)` of the shrinking circle.
pub fn circle_extinction(alpha: f64, r0: f64) -> f64 {
    math::powf(r0, alpha + 1.0) / (alpha + 1.0)
}

/// Right-hand side of the translator profile equation
/// `phi'' = (1 + phi'^2)^((3 alpha - 1)/(2 alpha))`.
pub fn profile_rhs(alpha: f64, p: f64) -> f64 {
    math::powf(1.0 + p * p, (3.0 * alpha - 1.0) / (2.0 * alpha))
}

/// Sampled translator profile `(x, phi, phi')`.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub samples: Vec<[f64; 3]>,
    /// The integration stopped at a slope blow-up before `x_max`.
    pub blew_up: bool,
}

impl ProfileTable {
    pub fn x_end(&self) -> f64 {
        self.samples.last().map(|s| s[0]).unwrap_or(0.0)
    }

    /// Cubic Hermite interpolation of `(phi, phi')` between the bracketing
    /// samples; `None` outside the covered range.
    pub fn sample(&self, x: f64) -> Option<(f64, f64)> {
        if self.samples.is_empty() || x < 0.0 || x > self.x_end() {
            return None;
        }
        let pos = self
            .samples
            .partition_point(|s| s[0] <= x)
            .min(self.samples.len() - 1)
            .max(1);
        let (lo, hi) = (self.samples[pos - 1], self.samples[pos]);
        let hx = hi[0] - lo[0];
        if hx <= 0.0 {
            return Some((lo[1], lo[2]));
        }
        let s = (x - lo[0]) / hx;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let phi = h00 * lo[1] + h10 * hx * lo[2] + h01 * hi[1] + h11 * hx * hi[2];
        let dphi = ((6.0 * s2 - 6.0 * s) * lo[1]
            + (3.0 * s2 - 4.0 * s + 1.0) * hx * lo[2]
            + (-6.0 * s2 + 6.0 * s) * hi[1]
            + (3.0 * s2 - 2.0 * s) * hx * hi[2])
            / hx;
        Some((phi, dphi))
    }
}

/// Integrates the translator profile ODE from `phi(0) = phi'(0) = 0` by an
/// adaptive Dormand-Prince 5(4) pair, up to `x_max` or slope blow-up.
pub fn translator_profile(alpha: f64, x_max: f64, tol: f64) -> ProfileTable {
    assert!(alpha > 0.0 && x_max > 0.0 && tol > 0.0);
    // Butcher tableau of DOPRI5
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let f = |y: [f64; 2]| [y[1], profile_rhs(alpha, y[1])];

    let mut x = 0.0f64;
    let mut y = [0.0f64, 0.0f64];
    let mut h = (x_max / 64.0).min(0.05);
    let mut samples = alloc::vec![[0.0, 0.0, 0.0]];
    let mut blew_up = false;
    let slope_cap = 1e8;
    let h_min = 1e-14;

    while x < x_max {
        if y[1] > slope_cap {
            blew_up = true;
            break;
        }
        h = h.min(x_max - x);
        let mut k = [[0.0f64; 2]; 7];
        k[0] = f(y);
        for stage in 0..6 {
            let mut ys = y;
            for c in 0..2 {
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    ys[c] += h * A[stage][j] * kj[c];
                }
            }
            // stage abscissae are not needed: the system is autonomous
            k[stage + 1] = f(ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for c in 0..2 {
            for j in 0..7 {
                y5[c] += h * B5[j] * k[j][c];
                y4[c] += h * B4[j] * k[j][c];
            }
        }
        let err = math::hypot2(y5[0] - y4[0], y5[1] - y4[1]);
        let scale = tol * (1.0 + math::fabs(y5[1]));
        if err <= scale || h <= h_min {
            x += h;
            y = y5;
            samples.push([x, y[0], y[1]]);
            if y[1] > slope_cap {
                blew_up = true;
                break;
            }
        }
        // standard step-size controller, order 5
        let factor = if err > 0.0 {
            0.9 * math::powf(scale / err, 0.2)
        } else {
            5.0
        };
        h *= factor.clamp(0.2, 5.0);
        if h < h_min {
            h = h_min;
        }
    }
    ProfileTable { samples, blew_up }
}

/// Curvature-limited stability bound `safety * min ds^2 / (2 max alpha
/// kappa^(alpha-1))` for explicit marker stepping.
pub fn marker_stable_dt(curve: &MarkerCurve, alpha: f64, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::SafetyOutOfRange);
    }
    let mut dt = f64::INFINITY;
    for (_, g) in curve.geometries()? {
        let diff = alpha * math::powf(g.kappa, alpha - 1.0);
        dt = dt.min(safety * g.ds * g.ds / (2.0 * diff));
    }
    Ok(dt)
}

pub fn step_markers(
    curve: &MarkerCurve,
    alpha: f64,
    dt: f64,
    motion: &BoundaryMotion,
) -> Result<MarkerCurve> {
    let n = curve.points.len();
    let mut points = curve.points.clone();
    for i in 0..n {
        match curve.geometry(i) {
            Some(g) => {
                let g = g?;
                let speed = math::powf(g.kappa, alpha);
                points[i][0] += dt * speed * g.nu[0];
                points[i][1] += dt * speed * g.nu[1];
            }
            None => match motion {
                BoundaryMotion::Prescribed(v) => {
                    let vel = v(curve.points[i], curve.t);
                    points[i][0] += dt * vel[0];
                    points[i][1] += dt * vel[1];
                }
                BoundaryMotion::Fixed => {}
            },
        }
    }
    Ok(MarkerCurve {
        points,
        t: curve.t + dt,
        closed: curve.closed,
    })
}

/// Fixed-step marker evolution; snapshots every `cadence` steps plus first
/// and last. `dt` must respect the curvature-limited stability bound at
/// every step.
pub fn evolve_markers(
    curve: &MarkerCurve,
    alpha: f64,
    dt: f64,
    steps: usize,
    motion: &BoundaryMotion,
    cadence: usize,
) -> Result<Vec<MarkerCurve>> {
    let cadence = cadence.max(1);
    let mut out = alloc::vec![curve.clone()];
    let mut cur = curve.clone();
    for step in 1..=steps {
        let limit = marker_stable_dt(&cur, alpha, 1.0)?;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::DtTooLarge { dt, limit });
        }
        cur = step_markers(&cur, alpha, dt, motion)?;
        if step % cadence == 0 || step == steps {
            out.push(cur.clone());
        }
    }
    Ok(out)
}

/// Adaptive driver: substeps at the stability bound capped by `dt_cap`
/// until `t_end`. Returns the final curve.
pub fn flow_markers(
    curve: &MarkerCurve,
    alpha: f64,
    t_end: f64,
    dt_cap: f64,
    motion: &BoundaryMotion,
    safety: f64,
) -> Result<MarkerCurve> {
    let mut cur = curve.clone();
    while cur.t < t_end - 1e-15 * (1.0 + t_end) {
        let stable = marker_stable_dt(&cur, alpha, safety)?;
        let dt = stable.min(dt_cap).min(t_end - cur.t);
        cur = step_markers(&cur, alpha, dt, motion)?;
    }
    Ok(cur)
}

/// Max finite-difference residuals of the constant-alpha evolution
/// identities, over all interior markers and interior snapshot times.
#[derive(Debug, Clone, Copy)]
pub struct IdentityReport {
    /// `L y - (1-alpha)/alpha kappa w`
    pub height: f64,
    /// `L w - kappa^2 w`
    pub gradient: f64,
    /// `L kappa^alpha - kappa^2 kappa^alpha`
    pub speed: f64,
    /// `L kappa^2 - ((2 alpha - 4) kappa_s^2 + 2 kappa^4 / alpha)`
    pub curvature: f64,
    pub samples: usize,
}

/// Verifies the evolution identities `L q = rhs(q)` with
/// `L q = (d_t q)/(alpha kappa^(alpha-1)) - q_ss` along a stored marker
/// trajectory: centered time differences over snapshot triples, arclength
/// second differences in space. Needs at least three snapshots.
pub fn verify_evolution_identities(
    traj: &[MarkerCurve],
    alpha: f64,
) -> Result<IdentityReport> {
    if traj.len() < 3 {
        return Err(Error::InsufficientSnapshots);
    }
    let n = traj[0].points.len();
    let mut rep = IdentityReport {
        height: 0.0,
        gradient: 0.0,
        speed: 0.0,
        curvature: 0.0,
        samples: 0,
    };

    for m in 1..traj.len() - 1 {
        let (prev, mid, next) = (&traj[m - 1], &traj[m], &traj[m + 1]);
        let dt1 = mid.t - prev.t;
        let dt2 = next.t - mid.t;
        // per-marker geometry at the three times; None where unavailable
        let geo = |c: &MarkerCurve, i: usize| c.geometry(i).map(|g| g.ok()).flatten();

        for i in 0..n {
            // the curvature identity needs kappa at both spatial neighbors
            let (im, ip) = match mid.neighbor_indices(i) {
                Some(v) => v,
                None => continue,
            };
            let needed = [
                geo(prev, i),
                geo(mid, i),
                geo(next, i),
                geo(mid, im),
                geo(mid, ip),
            ];
            let [Some(gp), Some(g0), Some(gn), Some(gl), Some(gr)] = needed else {
                continue;
            };

            let d1 = math::hypot2(
                mid.points[i][0] - mid.points[im][0],
                mid.points[i][1] - mid.points[im][1],
            );
            let d2 = math::hypot2(
                mid.points[ip][0] - mid.points[i][0],
                mid.points[ip][1] - mid.points[i][1],
            );
            let denom = alpha * math::powf(g0.kappa, alpha - 1.0);
            let dt_q = |qp: f64, q0: f64, qn: f64| {
                let s = dt1 + dt2;
                (-dt2 / (dt1 * s)) * qp + ((dt2 - dt1) / (dt1 * dt2)) * q0 + (dt1 / (dt2 * s)) * qn
            };
            let worst = |slot: &mut f64, res: f64| *slot = slot.max(math::fabs(res));

            // height: L y = (1-alpha)/alpha kappa w
            let (_, yss) = nonuniform_scalar(
                mid.points[im][1],
                mid.points[i][1],
                mid.points[ip][1],
                d1,
                d2,
            );
            let ly = dt_q(prev.points[i][1], mid.points[i][1], next.points[i][1]) / denom - yss;
            worst(&mut rep.height, ly - (1.0 - alpha) / alpha * g0.kappa * g0.w);

            // gradient function: L w = kappa^2 w
            let (_, wss) = nonuniform_scalar(gl.w, g0.w, gr.w, d1, d2);
            let lw = dt_q(gp.w, g0.w, gn.w) / denom - wss;
            worst(&mut rep.gradient, lw - g0.kappa * g0.kappa * g0.w);

            // speed: L kappa^alpha = kappa^2 kappa^alpha
            let ka = |k: f64| math::powf(k, alpha);
            let (_, kass) = nonuniform_scalar(ka(gl.kappa), ka(g0.kappa), ka(gr.kappa), d1, d2);
            let lka = dt_q(ka(gp.kappa), ka(g0.kappa), ka(gn.kappa)) / denom - kass;
            worst(
                &mut rep.speed,
                lka - g0.kappa * g0.kappa * ka(g0.kappa),
            );

            // curvature: L kappa^2 = (2 alpha - 4) kappa_s^2 + 2 kappa^4 / alpha
            let k2 = |k: f64| k * k;
            let (ks, k2ss) = {
                let (ks, _) = nonuniform_scalar(gl.kappa, g0.kappa, gr.kappa, d1, d2);
                let (_, k2ss) =
                    nonuniform_scalar(k2(gl.kappa), k2(g0.kappa), k2(gr.kappa), d1, d2);
                (ks, k2ss)
            };
            let lk2 = dt_q(k2(gp.kappa), k2(g0.kappa), k2(gn.kappa)) / denom - k2ss;
            let rhs = (2.0 * alpha - 4.0) * ks * ks
                + 2.0 * math::powf(g0.kappa, 4.0) / alpha;
            worst(&mut rep.curvature, lk2 - rhs);

            rep.samples += 1;
        }
    }
    if rep.samples == 0 {
        return Err(Error::InsufficientSnapshots);
    }
    Ok(rep)
}

/// Exact marker velocity of the grim reaper arc for `alpha = 1`:
/// `kappa nu = cos x (-sin x, cos x)`.
pub fn grim_reaper_velocity(pos: [f64; 2], _t: f64) -> [f64; 2] {
    let c = math::cos(pos[0]);
    [-c * math::sin(pos[0]), c * c]
}
