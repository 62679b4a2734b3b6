//! Thin wrappers over `libm` so the crate builds without `std` and produces
//! the same bit patterns in either configuration.

pub use libm::{cos, exp, fabs, log, sin, sqrt};

#[cfg(test)]
pub use libm::tan;

#[inline]
pub fn powf(base: f64, exponent: f64) -> f64 {
    // The solver spends most of its time here with integer or half-integer
    // exponents; dispatching on the common cases is a large win.
    if exponent == 1.0 {
        base
    } else if exponent == 2.0 {
        base * base
    } else if exponent == 0.5 {
        sqrt(base)
    } else {
        libm::pow(base, exponent)
    }
}

#[inline]
pub fn hypot2(x: f64, y: f64) -> f64 {
    sqrt(x * x + y * y)
}

/// Ceiling with a small relative tolerance, so that ratios like
/// `2.0 / 0.5 = 3.9999999999999996` still count as 4 cells.
pub fn ceil_tol(x: f64) -> usize {
    let rounded = libm::round(x);
    if fabs(x - rounded) < 1e-9 * (1.0 + fabs(x)) {
        rounded as usize
    } else {
        libm::ceil(x) as usize
    }
}
