//! Informed-receiver upper bound and the ergodic capacity of the fading
//! channel.
//!
//! With the channel known at the destination, the problem splits into
//! parallel scalar Gaussian IB problems, one per unordered eigenvalue. The
//! budget is spread by water-filling: a sub-channel with eigenvalue `l`
//! gets `max(0, log2(rho l / nu))` bits, where the water level `nu` exhausts
//! `C / T` on average.
//!
//! The water level is carried as `log2 nu`. For very large budgets `nu`
//! drops below the smallest positive `f64`, while its logarithm stays
//! representable.

use std::cell::RefCell;

use crate::mathcore::{bisect_monotone, LN_2};
use crate::spectra::{ChannelConfig, EigDensity};
use crate::{Error, Result};

/// Optimal scalar Gaussian IB rate `log2(1 + s) - log2(1 + s 2^{-c})` for a
/// channel with effective SNR `s` and budget `c` bits.
pub fn scalar_ib_rate(snr_eff: f64, c_bits: f64) -> f64 {
    if snr_eff <= 0.0 || c_bits <= 0.0 {
        return 0.0;
    }
    let residual = snr_eff * (-c_bits * LN_2).exp();
    (snr_eff.ln_1p() - residual.ln_1p()) / LN_2
}

/// Solution of the informed-receiver water-filling problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterfillSolution {
    log2_nu: Option<f64>,
    snr: f64,
    pub rate_bits: f64,
    /// Compression budget actually spent, `T E[c(lambda)]`.
    pub spent_bits: f64,
}

impl WaterfillSolution {
    /// `C = 0`: nothing is forwarded and the water level is unbounded.
    pub fn degenerate(snr: f64) -> Self {
        Self { log2_nu: None, snr, rate_bits: 0.0, spent_bits: 0.0 }
    }

    pub fn is_degenerate(&self) -> bool {
        self.log2_nu.is_none()
    }

    pub fn log2_nu(&self) -> Option<f64> {
        self.log2_nu
    }

    /// Water level `nu`; underflows to `0` for budgets of thousands of bits.
    pub fn nu(&self) -> Option<f64> {
        self.log2_nu.map(f64::exp2)
    }

    /// `log2(nu / rho)`, the eigenvalue below which nothing is allocated.
    pub fn log2_threshold(&self) -> Option<f64> {
        self.log2_nu.map(|l| l - self.snr.log2())
    }

    /// Bits allocated to a sub-channel with eigenvalue `lambda`.
    pub fn allocation_bits(&self, lambda: f64) -> f64 {
        match self.log2_nu {
            None => 0.0,
            Some(log2_nu) => ((self.snr * lambda).log2() - log2_nu).max(0.0),
        }
    }
}

// Below 2^-800 the mass of the density under the threshold is negligible
// (< 1e-240), so the integrals are evaluated from zero.
const LOG2_THRESHOLD_FLOOR: f64 = -800.0;
const LOG2_NU_TOL: f64 = 1e-12;

struct WaterLevelProblem<'a> {
    cfg: &'a ChannelConfig,
    density: EigDensity,
    mean_log2: RefCell<Option<f64>>,
}

impl<'a> WaterLevelProblem<'a> {
    fn new(cfg: &'a ChannelConfig) -> Self {
        Self { cfg, density: EigDensity::new(cfg.dims), mean_log2: RefCell::new(None) }
    }

    fn mean_log2(&self) -> Result<f64> {
        if let Some(v) = *self.mean_log2.borrow() {
            return Ok(v);
        }
        let v = self.density.expect_from(0.0, f64::log2, &[1e-8, 1e-4])?;
        *self.mean_log2.borrow_mut() = Some(v);
        Ok(v)
    }

    /// Per-stream compression `int_{theta}^inf log2(l / theta) f(l) dl`.
    fn spent_per_stream(&self, log2_threshold: f64) -> Result<f64> {
        if log2_threshold < LOG2_THRESHOLD_FLOOR {
            return Ok(self.mean_log2()? - log2_threshold);
        }
        let threshold = log2_threshold.exp2();
        self.density.expect_from(threshold, |l| l.log2() - log2_threshold, &[])
    }

    /// Per-stream rate `int_{theta}^inf [log2(1 + rho l) - log2(1 + nu)] f(l) dl`.
    fn rate_per_stream(&self, log2_threshold: f64) -> Result<f64> {
        let snr = self.cfg.snr();
        let nu = (log2_threshold + snr.log2()).exp2();
        let lower = if log2_threshold < LOG2_THRESHOLD_FLOOR { 0.0 } else { log2_threshold.exp2() };
        let log_nu = nu.ln_1p();
        self.density
            .expect_from(lower, |l| ((snr * l).ln_1p() - log_nu) / LN_2, &[self.cfg.sigma2])
    }

    fn solve(&self) -> Result<WaterfillSolution> {
        let t = self.cfg.dims.t() as f64;
        let target = self.cfg.capacity_bits / t;
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let residual = |lt: f64| match self.spent_per_stream(lt) {
            Ok(v) => v - target,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };

        let mut lo = -2.0 * target - 10.0;
        let mut hi = (self.cfg.dims.s() as f64).log2() + 10.0;
        for _ in 0..60 {
            if residual(lo) > 0.0 || failure.borrow().is_some() {
                break;
            }
            lo -= hi - lo;
        }
        for _ in 0..60 {
            if residual(hi) < 0.0 || failure.borrow().is_some() {
                break;
            }
            hi += 10.0;
        }
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        let lt = bisect_monotone(&residual, lo, hi, LOG2_NU_TOL)?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }

        let spent_bits = t * self.spent_per_stream(lt)?;
        let rate_bits = (t * self.rate_per_stream(lt)?).max(0.0);
        Ok(WaterfillSolution {
            log2_nu: Some(lt + self.cfg.snr().log2()),
            snr: self.cfg.snr(),
            rate_bits,
            spent_bits,
        })
    }
}

/// Water level for the informed-receiver bound; `C = 0` yields the
/// degenerate solution.
pub fn solve_water_level(cfg: &ChannelConfig) -> Result<WaterfillSolution> {
    if cfg.capacity_bits == 0.0 {
        return Ok(WaterfillSolution::degenerate(cfg.snr()));
    }
    WaterLevelProblem::new(cfg).solve()
}

/// Informed-receiver upper bound `R^ub` in bits per complex dimension.
pub fn upper_bound(cfg: &ChannelConfig) -> Result<f64> {
    solve_water_level(cfg).map(|s| s.rate_bits)
}

/// Ergodic capacity `T E[log2(1 + rho lambda)]` of the source–relay channel.
pub fn capacity(cfg: &ChannelConfig) -> Result<f64> {
    let density = EigDensity::new(cfg.dims);
    let snr = cfg.snr();
    let per_stream = density.expect_from(0.0, |l| (snr * l).ln_1p() / LN_2, &[cfg.sigma2])?;
    Ok(cfg.dims.t() as f64 * per_stream)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UbLimits {
    /// `M -> inf`: the bound tends to `C`.
    pub large_m: f64,
    /// `rho -> inf`: the bound tends to `C`.
    pub large_snr: f64,
    /// `C -> inf`: the bound tends to the channel capacity.
    pub large_c: f64,
}

pub fn ub_limits(cfg: &ChannelConfig) -> Result<UbLimits> {
    Ok(UbLimits {
        large_m: cfg.capacity_bits,
        large_snr: cfg.capacity_bits,
        large_c: capacity(cfg)?,
    })
}
