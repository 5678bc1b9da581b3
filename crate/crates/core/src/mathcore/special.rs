use crate::{Error, Result};

/// Generalized Laguerre polynomial `L_i^alpha(x)` by upward three-term recurrence.
pub fn laguerre(i: usize, alpha: usize, x: f64) -> f64 {
    let alpha = alpha as f64;
    let mut prev = 1.0;
    if i == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for n in 1..i {
        let n = n as f64;
        let next = ((2.0 * n + 1.0 + alpha - x) * cur - (n + alpha) * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "log_gamma argument", value: x });
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}
