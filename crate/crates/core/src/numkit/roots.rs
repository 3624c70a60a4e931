use crate::error::{Error, Result};

use super::horner;

/// Number of uniform sub-intervals used by [`scan_roots`] and
/// [`real_roots_in_interval`] to detect sign changes.
pub const ROOT_SCAN_STEPS: usize = 20_000;

/// Bisection on a sign-changing bracket.
///
/// Stops once the bracket is narrower than `tol` or can no longer be split in
/// floating point. Exact zeros at either end are returned directly.
pub fn find_root_bracketed<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }
    for _ in 0..2000 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// All sign-changing roots of `f` in `[lo, hi]`: a uniform scan with `steps`
/// sub-intervals, each bracket refined by bisection. Roots of even multiplicity
/// that do not change sign are not reported.
pub fn scan_roots<F>(f: F, lo: f64, hi: f64, steps: usize) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let steps = steps.max(1);
    let h = (hi - lo) / steps as f64;
    let mut roots: Vec<f64> = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for i in 1..=steps {
        let x1 = if i == steps { hi } else { lo + h * i as f64 };
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() && f0.is_finite() && f1.is_finite() {
            let tol = 1e-15 * x1.abs().max(1.0);
            if let Ok(r) = find_root_bracketed(&f, x0, x1, tol) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    roots
}

/// Real roots of a polynomial (coefficients in ascending order of power) lying
/// in `[lo, hi]`, sorted ascending. Uses [`ROOT_SCAN_STEPS`] scan cells.
pub fn real_roots_in_interval(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    debug_assert!(coeffs.len() <= 7, "degree above 6");
    scan_roots(|x| horner(coeffs, x), lo, hi, ROOT_SCAN_STEPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = find_root_bracketed(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn boundary_root_has_no_sign_change() {
        let f = |b: f64| (b - 1.0) * (2.0 * b).exp() + (b + 1.0);
        let err = find_root_bracketed(f, 1e-9, 5.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn gaussian_location_stationarity_at_unit_noise_ratio() {
        let f = |b: f64| 2.0 * (b - 1.0) * (2.0 * b).exp() + (b + 1.0);
        let r = find_root_bracketed(f, 0.5, 2.0, 1e-13).unwrap();
        // scipy brentq to 1e-15
        assert!((r - 0.824_670_626_894_092_5).abs() < 1e-11, "{r}");
    }

    #[test]
    fn polynomial_roots() {
        assert_eq!(real_roots_in_interval(&[-1.0, 0.0, 1.0], 0.0, 2.0).len(), 1);
        assert!((real_roots_in_interval(&[-1.0, 0.0, 1.0], 0.0, 2.0)[0] - 1.0).abs() < 1e-12);
        assert!(real_roots_in_interval(&[1.0, 0.0, 1.0], -10.0, 10.0).is_empty());

        let r = real_roots_in_interval(&[-16.0, 18.0, 21.0, 4.0], 0.0, 10.0);
        let closed = (3.0 * 33f64.sqrt() - 13.0) / 8.0;
        assert_eq!(r.len(), 1);
        assert!((r[0] - closed).abs() < 1e-12);
        assert!((r[0] - 0.52921).abs() < 1e-5);
    }

    #[test]
    fn several_roots_sorted() {
        // (x - 0.5)(x - 1.5)(x + 2)
        let c = [1.5, -3.25, 0.0, 1.0];
        let r = real_roots_in_interval(&c, -3.0, 3.0);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 2.0).abs() < 1e-12);
        assert!((r[1] - 0.5).abs() < 1e-12);
        assert!((r[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bad_bracket() {
        assert!(find_root_bracketed(|x| x, 1.0, 1.0, 1e-9).is_err());
    }
}
