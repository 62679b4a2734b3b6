//! Pointwise geometry of a graph hypersurface from its slope `p = grad u`
//! and Hessian `r = grad^2 u`.
//!
//! Conventions: the normal is the upward unit vector `nu = (-p, 1) * w`
//! with `w = 1/sqrt(1 + |p|^2)`, which together with `H > 0` realizes the
//! sign convention that `nu` points in the direction of the mean curvature
//! vector. Non-positive `H` is always a hard error and never clamped: the
//! whole setting is strictly mean convex and a sign loss must surface as a
//! failure, not be smoothed over.

use crate::error::{Error, Result};
use crate::math;

/// Symmetric 2x2 matrix as (xx, xy, yy); for n = 1 only `xx` is used.
pub type Sym2 = [f64; 3];

/// All pointwise quantities of a graph at one node.
#[derive(Debug, Clone, Copy)]
pub struct GeometricPoint {
    pub dim: usize,
    pub p: [f64; 2],
    pub r: Sym2,
    pub w: f64,
    pub h: f64,
    pub a2: f64,
    pub nu: [f64; 3],
}

impl GeometricPoint {
    pub fn from_derivatives(dim: usize, p: [f64; 2], r: Sym2) -> GeometricPoint {
        let w = gradient_function(dim, p);
        let h = mean_curvature(dim, &r, p);
        let (_, _, a2) = second_fundamental(dim, &r, p);
        GeometricPoint {
            dim,
            p,
            r,
            w,
            h,
            a2,
            nu: [-p[0] * w, if dim == 2 { -p[1] * w } else { 0.0 }, w],
        }
    }
}

#[inline]
fn norm2(dim: usize, p: [f64; 2]) -> f64 {
    if dim == 1 {
        p[0] * p[0]
    } else {
        p[0] * p[0] + p[1] * p[1]
    }
}

/// Gradient function `w = <nu, e_{n+1}> = 1/sqrt(1 + |p|^2)`, in (0, 1].
#[inline]
pub fn gradient_function(dim: usize, p: [f64; 2]) -> f64 {
    1.0 / math::sqrt(1.0 + norm2(dim, p))
}

/// Mean curvature of the graph, `H = w * sum_ij (delta_ij - p_i p_j / (1 + |p|^2)) r_ij`.
#[inline]
pub fn mean_curvature(dim: usize, r: &Sym2, p: [f64; 2]) -> f64 {
    let q = 1.0 + norm2(dim, p);
    let w = 1.0 / math::sqrt(q);
    if dim == 1 {
        w * (r[0] - p[0] * p[0] * r[0] / q)
    } else {
        let trace = r[0] + r[2];
        let prp = p[0] * p[0] * r[0] + 2.0 * p[0] * p[1] * r[1] + p[1] * p[1] * r[2];
        w * (trace - prp / q)
    }
}

/// Second fundamental form data of the graph: `h_ij = w * r_ij`, the inverse
/// metric `g^ij = delta_ij - p_i p_j / (1 + |p|^2)`, and
/// `|A|^2 = g^ik g^jl h_ij h_kl`.
pub fn second_fundamental(dim: usize, r: &Sym2, p: [f64; 2]) -> (Sym2, Sym2, f64) {
    let q = 1.0 + norm2(dim, p);
    let w = 1.0 / math::sqrt(q);
    if dim == 1 {
        let g_inv = 1.0 - p[0] * p[0] / q;
        let h = w * r[0];
        let a2 = g_inv * g_inv * h * h;
        ([h, 0.0, 0.0], [g_inv, 0.0, 0.0], a2)
    } else {
        let h = [w * r[0], w * r[1], w * r[2]];
        let g_inv = [
            1.0 - p[0] * p[0] / q,
            -p[0] * p[1] / q,
            1.0 - p[1] * p[1] / q,
        ];
        // B = g_inv * h (full 2x2), |A|^2 = trace(B * B)
        let b11 = g_inv[0] * h[0] + g_inv[1] * h[1];
        let b12 = g_inv[0] * h[1] + g_inv[1] * h[2];
        let b21 = g_inv[1] * h[0] + g_inv[2] * h[1];
        let b22 = g_inv[1] * h[1] + g_inv[2] * h[2];
        let a2 = b11 * b11 + 2.0 * b12 * b21 + b22 * b22;
        (h, g_inv, a2)
    }
}

/// Normal speed `G = (1/w) H^alpha = sqrt(1 + |p|^2) * H^alpha`.
///
/// Fails with [`Error::NonpositiveH`] when `H <= 0`; callers attach node and
/// time context.
pub fn speed(dim: usize, r: &Sym2, p: [f64; 2], alpha: f64) -> Result<f64> {
    let h = mean_curvature(dim, r, p);
    if !(h > 0.0) {
        return Err(Error::NonpositiveH {
            node: 0,
            time: f64::NAN,
        });
    }
    let q = 1.0 + norm2(dim, p);
    Ok(math::sqrt(q) * math::powf(h, alpha))
}

/// Derivative of the flow operator with respect to the Hessian,
/// `M = alpha H^{alpha-1} / w * (delta_ij - p_i p_j / (1 + |p|^2))`,
/// with its exact eigenvalue range.
///
/// For n = 2 the eigenvalues of the projector factor are `1/(1+|p|^2)`
/// (along `p`) and `1` (across), so `lambda_max = alpha H^{alpha-1}/w` and
/// `lambda_min = lambda_max / (1+|p|^2)`. For n = 1 only the along-`p`
/// eigenvalue exists.
pub fn parabolicity(dim: usize, r: &Sym2, p: [f64; 2], alpha: f64) -> Result<(Sym2, f64, f64)> {
    let h = mean_curvature(dim, r, p);
    if !(h > 0.0) {
        return Err(Error::NonpositiveH {
            node: 0,
            time: f64::NAN,
        });
    }
    let q = 1.0 + norm2(dim, p);
    let w = 1.0 / math::sqrt(q);
    let factor = alpha * math::powf(h, alpha - 1.0) / w;
    let lambda_small = factor / q;
    if dim == 1 {
        Ok(([factor / q, 0.0, 0.0], lambda_small, lambda_small))
    } else {
        let m = [
            factor * (1.0 - p[0] * p[0] / q),
            factor * (-p[0] * p[1] / q),
            factor * (1.0 - p[1] * p[1] / q),
        ];
        if norm2(dim, p) == 0.0 {
            Ok((m, factor, factor))
        } else {
            Ok((m, lambda_small, factor))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_function_closed_forms() {
        assert_eq!(gradient_function(2, [0.0, 0.0]), 1.0);
        assert!((gradient_function(2, [1.0, 0.0]) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((gradient_function(1, [3f64.sqrt(), 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mean_curvature_examples() {
        // bowl apex
        assert!((mean_curvature(2, &[1.0, 0.0, 1.0], [0.0, 0.0]) - 2.0).abs() < 1e-15);
        // grim reaper profile at x = 0
        assert!((mean_curvature(1, &[1.0, 0.0, 0.0], [0.0, 0.0]) - 1.0).abs() < 1e-15);
        // tilted identity Hessian: (2 - 1/2)/sqrt(2)
        let h = mean_curvature(2, &[1.0, 0.0, 1.0], [1.0, 0.0]);
        assert!((h - 1.5 / 2f64.sqrt()).abs() < 1e-14);
        assert!((h - 1.06066).abs() < 1e-5);
    }

    #[test]
    fn second_fundamental_examples() {
        let (_, _, a2) = second_fundamental(2, &[1.0, 0.0, 2.0], [0.0, 0.0]);
        assert!((a2 - 5.0).abs() < 1e-14);

        // sphere bowl apex, R = 1: umbilic with H = 2, |A|^2 = 2
        let (_, _, a2) = second_fundamental(2, &[1.0, 0.0, 1.0], [0.0, 0.0]);
        assert!((a2 - 2.0).abs() < 1e-14);

        // curve case: |A|^2 = H^2 always
        let (h, g_inv, a2) = second_fundamental(1, &[1.0, 0.0, 0.0], [1.0, 0.0]);
        assert!((h[0] - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g_inv[0] - 0.5).abs() < 1e-15);
        assert!((a2 - 0.125).abs() < 1e-15);
        let hh = mean_curvature(1, &[1.0, 0.0, 0.0], [1.0, 0.0]);
        assert!((hh - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((a2 - hh * hh).abs() < 1e-15);
    }

    #[test]
    fn speed_examples() {
        assert!((speed(2, &[1.0, 0.0, 1.0], [0.0, 0.0], 2.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((speed(1, &[1.0, 0.0, 0.0], [0.0, 0.0], 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            speed(2, &[-1.0, 0.0, -1.0], [0.0, 0.0], 1.0),
            Err(Error::NonpositiveH { .. })
        ));
    }

    #[test]
    fn parabolicity_examples() {
        let (m, lo, hi) = parabolicity(2, &[1.0, 0.0, 1.0], [0.0, 0.0], 1.0).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15 && (m[2] - 1.0).abs() < 1e-15);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);

        let (_, lo, hi) = parabolicity(2, &[1.0, 0.0, 1.0], [1.0, 0.0], 1.0).unwrap();
        assert!((hi - 2f64.sqrt()).abs() < 1e-14);
        assert!((lo - 2f64.sqrt() / 2.0).abs() < 1e-14);

        // alpha = 2, H = 3: factor alpha H^{alpha-1} = 6
        let (m, lo, hi) = parabolicity(2, &[1.0, 0.0, 2.0], [0.0, 0.0], 2.0).unwrap();
        assert!((m[0] - 6.0).abs() < 1e-13 && (m[2] - 6.0).abs() < 1e-13 && m[1].abs() < 1e-15);
        assert!((lo - 6.0).abs() < 1e-13 && (hi - 6.0).abs() < 1e-13);
    }

    /// Eigenvalues of a symmetric 2x2 matrix, independent closed form.
    fn eigenvalues(m: &Sym2) -> (f64, f64) {
        let tr = m[0] + m[2];
        let det = m[0] * m[2] - m[1] * m[1];
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    #[test]
    fn parabolicity_matches_direct_eigensolve() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            // xorshift; plenty for test point generation
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let p = [4.0 * rng() - 2.0, 4.0 * rng() - 2.0];
            // positive definite-ish Hessian keeps H > 0
            let d = [2.0 * rng() + 0.5, 2.0 * rng() + 0.5];
            let r = [d[0], 0.3 * (rng() - 0.5), d[1]];
            let alpha = 0.25 + 2.0 * rng();
            if mean_curvature(2, &r, p) <= 1e-3 {
                continue;
            }
            let (m, lo, hi) = parabolicity(2, &r, p, alpha).unwrap();
            let (elo, ehi) = eigenvalues(&m);
            assert!((lo - elo).abs() <= 1e-12 * ehi.max(1.0), "{lo} vs {elo}");
            assert!((hi - ehi).abs() <= 1e-12 * ehi.max(1.0), "{hi} vs {ehi}");
        }
    }

    #[test]
    fn consistency_trace_ginv_h_equals_mean_curvature() {
        let r = [1.3, -0.4, 0.7];
        let p = [2.0, -1.0];
        let (h, g_inv, _) = second_fundamental(2, &r, p);
        let trace = g_inv[0] * h[0] + 2.0 * g_inv[1] * h[1] + g_inv[2] * h[2];
        assert!((trace - mean_curvature(2, &r, p)).abs() < 1e-14);
    }
}
