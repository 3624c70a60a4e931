//! Numerical primitives shared by the estimation, tuning and simulation code.

mod lambert;
mod minimize;
mod rng;
mod roots;

pub use lambert::lambert_w0;
pub use minimize::{minimize_quasiconvex, Boundary, Minimum, GOLDEN_TOL};
pub use rng::RandomStream;
pub use roots::{find_root_bracketed, real_roots_in_interval, scan_roots, ROOT_SCAN_STEPS};

/// Pairwise (cascade) summation. Keeps the rounding error at O(log n)
/// and makes the result depend only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Evaluates `coeffs[0] + coeffs[1] x + ... ` with Horner's rule.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
