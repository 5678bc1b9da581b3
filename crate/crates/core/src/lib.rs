//! Upper and lower bounds on the information-bottleneck rate of an oblivious
//! relay observing an i.i.d. Rayleigh-fading MIMO channel.
//!
//! * [`bounds`] — informed-receiver upper bound, ergodic capacity and their limits.
//! * [`qci`] — quantized channel inversion lower bound (requires `K <= M`).
//! * [`mmse`] — MMSE-estimate lower bound (any `K`, `M`).
//! * [`spectra`] — densities of the unordered Wishart eigenvalue and of the
//!   zero-forcing noise level.
//! * [`mathcore`] — special functions, quadrature and root finding.
//!
//! All rates and entropies are in bits per complex dimension.

pub mod bounds;
mod error;
pub mod mathcore;
pub mod mmse;
pub mod qci;
pub mod spectra;

pub use error::{Error, Result};
pub use spectra::{ChannelConfig, ChannelDims};
