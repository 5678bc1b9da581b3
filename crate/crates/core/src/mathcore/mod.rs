//! Numerical building blocks shared by the density and bound modules.

mod quadrature;
mod root;
mod special;

pub use quadrature::{integrate, integrate_pieces, QuadratureRule, RuleKind, Tolerance};
pub use root::bisect_monotone;
pub use special::{laguerre, log_gamma};

/// `ln 2`, the single conversion constant between nats and bits.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Neumaier-compensated sum, independent of magnitude ordering.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
