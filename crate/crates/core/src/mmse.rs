//! Lower bound from forwarding a compressed MMSE estimate of the input. No
//! channel knowledge is sent to the destination, and any `K`, `M` works.

use crate::mathcore::LN_2;
use crate::spectra::{ChannelConfig, EigDensity};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseParams {
    /// `E[lambda / (lambda + sigma^2)]`.
    pub e_ratio: f64,
    /// `log2 D`; `D` itself underflows for budgets of a few thousand bits.
    pub log2_d: f64,
}

impl MmseParams {
    /// Representation noise power `D = (T/K) e / (2^{C/K} - 1)`.
    pub fn d_noise(&self) -> f64 {
        self.log2_d.exp2()
    }
}

/// `log2(2^x - 1)` for `x > 0`.
fn log2_exp2_m1(x: f64) -> f64 {
    x + (-(-x * LN_2).exp()).ln_1p() / LN_2
}

fn e_ratio(density: &EigDensity, sigma2: f64) -> Result<f64> {
    density.expect_from(0.0, |l| l / (l + sigma2), &[sigma2])
}

pub fn mmse_params(cfg: &ChannelConfig) -> Result<MmseParams> {
    if cfg.capacity_bits == 0.0 {
        return Err(Error::DegenerateBudget);
    }
    let k = cfg.dims.k() as f64;
    let t = cfg.dims.t() as f64;
    let e_ratio = e_ratio(&EigDensity::new(cfg.dims), cfg.sigma2)?;
    let log2_d = (t / k * e_ratio).log2() - log2_exp2_m1(cfg.capacity_bits / k);
    Ok(MmseParams { e_ratio, log2_d })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseRate {
    /// `R^lb2` clamped at zero.
    pub bits: f64,
    /// Value of the closed form before clamping.
    pub raw_bits: f64,
}

impl MmseRate {
    /// The closed form went negative, so the bound is vacuous here.
    pub fn clamped(&self) -> bool {
        self.raw_bits < 0.0
    }
}

pub fn mmse_rate(cfg: &ChannelConfig) -> Result<MmseRate> {
    let params = mmse_params(cfg)?;
    let density = EigDensity::new(cfg.dims);
    let (k, t) = (cfg.dims.k() as f64, cfg.dims.t() as f64);
    let s2 = cfg.sigma2;
    let d = params.d_noise();

    // log2(l/(l+s2) + D) = log2((l (1 + D) + D s2) / (l + s2))
    let first = density.expect_from(
        0.0,
        |l| ((l * (1.0 + d) + d * s2).ln() - (l + s2).ln()) / LN_2,
        &[s2],
    )?;
    let te = t / k * params.e_ratio;
    let last = (te * (1.0 - te) + d).log2();
    let raw_bits = t * first + (k - t) * params.log2_d - k * last;
    Ok(MmseRate { bits: raw_bits.max(0.0), raw_bits })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseLimits {
    /// `M -> inf`, or `rho -> inf` with `K <= M`: the budget `C`.
    pub large_m_or_snr: f64,
    /// `C -> inf`: `K E[log2(l/(l+s2))] - K log2(e - e^2)`. Only defined
    /// for `K <= M`; with `K > M` the `(K-T) log2 D` term diverges.
    pub large_c: Option<f64>,
}

pub fn mmse_limits(cfg: &ChannelConfig) -> Result<MmseLimits> {
    let large_c = if cfg.dims.k() <= cfg.dims.m() {
        let density = EigDensity::new(cfg.dims);
        let s2 = cfg.sigma2;
        let k = cfg.dims.k() as f64;
        let e = e_ratio(&density, s2)?;
        let log_ratio = density.expect_from(0.0, |l| (l.ln() - (l + s2).ln()) / LN_2, &[s2])?;
        Some(k * log_ratio - k * (e * (1.0 - e)).log2())
    } else {
        None
    };
    Ok(MmseLimits { large_m_or_snr: cfg.capacity_bits, large_c })
}
