use crate::{Error, Result};

/// Bisection for a monotone `f` on `[lo, hi]`, stopping once the bracket is
/// narrower than `tol`. Works for increasing and decreasing `f` alike.
pub fn bisect_monotone<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::Domain { what: "bisection tolerance", value: tol });
    }
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let x = bisect_monotone(|x| x - 3.0, 0.0, 10.0, 1e-12).unwrap();
        assert!((x - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_root() {
        let x = bisect_monotone(|x| x.log2() - 2.0, 1.0, 16.0, 1e-12).unwrap();
        assert!((x - 4.0).abs() < 1e-12);
    }

    #[test]
    fn decreasing_exponential_root() {
        let x = bisect_monotone(|x| (-x).exp() - 0.5, 0.0, 5.0, 1e-13).unwrap();
        assert!((x - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn missing_sign_change_is_a_bracket_error() {
        let err = bisect_monotone(|x| x * x + 1.0, -1.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn deterministic_across_runs() {
        let f = |x: f64| x.powi(3) - 2.0 * x - 5.0;
        let a = bisect_monotone(f, 2.0, 3.0, 1e-14).unwrap();
        let b = bisect_monotone(f, 2.0, 3.0, 1e-14).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
