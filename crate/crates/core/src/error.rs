use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} is outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("quadrature did not converge (last estimates {last} and {previous})")]
    NoConvergence { last: f64, previous: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error(
        "infeasible budget: {capacity_bits} bits cannot cover the {feedback_bits} bits of \
         noise-level (CSI) feedback"
    )]
    InfeasibleBudget { capacity_bits: f64, feedback_bits: f64 },

    #[error("zero bottleneck capacity leaves the representation noise undefined")]
    DegenerateBudget,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
