//! Reproducible channel draws.
//!
//! Samples are cut into fixed-size chunks and chunk `c` of check `salt`
//! draws from ChaCha8 stream `salt << 32 | c`. The assignment of samples to
//! streams never depends on the thread count.

use ibrelay_core::ChannelDims;
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Samples per RNG stream.
pub const CHUNK: usize = 1024;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `CN(0, 1)`: independent real and imaginary parts of variance 1/2.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // Column-major fill keeps the draw order fixed.
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// One `M x K` channel with i.i.d. `CN(0, 1)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub h: CMatrix,
    pub stream: u64,
}

pub fn sample_channel(dims: ChannelDims, seed: u64, stream: u64) -> ChannelSample {
    let mut rng = stream_rng(seed, stream);
    ChannelSample { h: complex_gaussian_matrix(&mut rng, dims.m(), dims.k()), stream }
}

/// Runs `work(rng, count)` over `n` samples split into [`CHUNK`]-sized
/// pieces in parallel, returning the per-chunk results in chunk order.
pub fn map_chunks<T, F>(seed: u64, salt: u32, n: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n - c * CHUNK);
            let mut rng = stream_rng(seed, (u64::from(salt) << 32) | c as u64);
            work(&mut rng, count)
        })
        .collect()
}
