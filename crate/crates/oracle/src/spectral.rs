//! Monte Carlo checks of the eigenvalue density, the zero-forcing noise
//! level density, and the ergodic capacity.

use ibrelay_core::bounds::capacity;
use ibrelay_core::spectra::{DofConvention, EigDensity, NoiseLevelDensity};
use ibrelay_core::{ChannelConfig, ChannelDims, Error, Result};

use crate::linalg::{hermitian_eigenvalues, ln_det_hpd, inverse_hpd, scaled_identity, small_gram, MAX_CONDITION};
use crate::report::Report;
use crate::sampler::{complex_gaussian_matrix, map_chunks};
use crate::stats::{bin_count, fit_bins, merge_all, BinFit, EmpiricalHistogram, MeanVar, SIGMA_BAND};

/// Share of resampled draws above which a check fails outright.
pub const MAX_RESAMPLE_SHARE: f64 = 1e-3;
pub const MEAN_REL_TOL: f64 = 0.01;
pub const CAPACITY_REL_TOL: f64 = 0.01;
pub const SYLVESTER_TOL: f64 = 1e-8;

const SALT_EIG: u32 = 1;
const SALT_NOISE: u32 = 2;
const SALT_CAPACITY: u32 = 3;
const MAX_TRIES: usize = 1000;

fn resamples_ok(resamples: usize, n: usize) -> bool {
    resamples as f64 <= MAX_RESAMPLE_SHARE * n as f64
}

/// Bin probabilities of `cdf` over `edges`; the last edge is `+inf`.
fn bin_probs<F: Fn(f64) -> Result<f64>>(edges: &[f64], cdf: F) -> Result<Vec<f64>> {
    let mut cdfs = Vec::with_capacity(edges.len());
    for &e in edges {
        cdfs.push(if e == 0.0 { 0.0 } else if e.is_infinite() { 1.0 } else { cdf(e)? });
    }
    Ok(cdfs.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect())
}

fn quantile_edges<F: Fn(f64) -> Result<f64>>(nbins: usize, quantile: F) -> Result<Vec<f64>> {
    let mut edges = vec![0.0];
    for i in 1..nbins {
        edges.push(quantile(i as f64 / nbins as f64)?);
    }
    edges.push(f64::INFINITY);
    Ok(edges)
}

#[derive(Debug, Clone)]
pub struct EigCheck {
    pub dims: ChannelDims,
    pub n: usize,
    pub histogram: EmpiricalHistogram,
    pub fit: BinFit,
    pub mean: MeanVar,
    pub resamples: usize,
    pub passed: bool,
}

impl EigCheck {
    pub fn mean_rel_err(&self) -> f64 {
        let s = self.dims.s() as f64;
        (self.mean.mean() - s).abs() / s
    }

    /// [`MEAN_REL_TOL`], widened to four standard errors when needed.
    pub fn mean_tolerance(&self) -> f64 {
        MEAN_REL_TOL.max(SIGMA_BAND * self.mean.std_err() / self.dims.s() as f64)
    }

    pub fn report(&self) -> Report {
        Report::new(format!("eigenvalue density K={} M={}", self.dims.k(), self.dims.m()))
            .value("samples", self.n)
            .value("bins", self.fit.dof + 1)
            .num("max_bin_rel_err", self.fit.max_rel_err)
            .num("chi_square", self.fit.chi_square)
            .check("bins_ok", self.fit.passed)
            .num("mean", self.mean.mean())
            .num("mean_std_err", self.mean.std_err())
            .check("mean_ok", self.mean_rel_err() <= self.mean_tolerance())
            .value("resamples", self.resamples)
            .check("resamples_ok", resamples_ok(self.resamples, self.n))
    }
}

/// Pools the `T` unordered eigenvalues of `H H^H` over `n` draws and
/// compares them with the closed-form density.
pub fn empirical_eig_check(dims: ChannelDims, n: usize, seed: u64) -> Result<EigCheck> {
    let chunks = map_chunks(seed, SALT_EIG, n, |rng, count| {
        let mut values = Vec::with_capacity(count * dims.t());
        let mut resamples = 0;
        for _ in 0..count {
            for _ in 0..MAX_TRIES {
                let h = complex_gaussian_matrix(rng, dims.m(), dims.k());
                match hermitian_eigenvalues(&small_gram(&h), h.norm_squared()) {
                    Some(ev) => {
                        values.extend(ev.into_iter().map(|l| l.max(0.0)));
                        break;
                    }
                    None => resamples += 1,
                }
            }
        }
        (values, resamples)
    });
    let resamples = chunks.iter().map(|c| c.1).sum();
    let values: Vec<f64> = chunks.into_iter().flat_map(|c| c.0).collect();
    let mut mean = MeanVar::default();
    values.iter().for_each(|&v| mean.add(v));

    let density = EigDensity::new(dims);
    let edges = quantile_edges(bin_count(values.len()), |p| density.quantile(p))?;
    let probs = bin_probs(&edges, |x| density.cdf(x))?;
    let histogram = EmpiricalHistogram::from_values(&values, edges);
    let fit = fit_bins(&histogram, &probs);
    let mut check = EigCheck { dims, n, histogram, fit, mean, resamples, passed: false };
    check.passed = check.report().passed;
    Ok(check)
}

#[derive(Debug, Clone, Copy)]
pub struct ConventionFit {
    pub convention: DofConvention,
    pub fit: BinFit,
}

#[derive(Debug, Clone)]
pub struct NoiseLevelCheck {
    pub dims: ChannelDims,
    pub sigma2: f64,
    pub n: usize,
    pub histogram: EmpiricalHistogram,
    pub fits: Vec<ConventionFit>,
    /// Mean of `1 / a`; equals `(M - K + 1) / sigma^2`.
    pub mean_inverse: MeanVar,
    pub resamples: usize,
    pub passed: bool,
}

impl NoiseLevelCheck {
    /// The single convention that passes the per-bin criterion, if exactly
    /// one does.
    pub fn selected(&self) -> Option<DofConvention> {
        let passing: Vec<_> = self.fits.iter().filter(|f| f.fit.passed).collect();
        match passing.as_slice() {
            [only] => Some(only.convention),
            _ => None,
        }
    }

    pub fn report(&self) -> Report {
        let want = (self.dims.m() - self.dims.k() + 1) as f64 / self.sigma2;
        let mut r = Report::new(format!("noise-level density K={} M={}", self.dims.k(), self.dims.m()))
            .value("samples", self.n)
            .num("sigma2", self.sigma2);
        for f in &self.fits {
            r = r
                .num(&format!("{}.max_bin_rel_err", f.convention), f.fit.max_rel_err)
                .num(&format!("{}.chi_square", f.convention), f.fit.chi_square)
                .value(&format!("{}.fits", f.convention), f.fit.passed);
        }
        let mean_ok = (self.mean_inverse.mean() - want).abs() <= SIGMA_BAND * self.mean_inverse.std_err();
        r.value("selected", self.selected().map_or("none", |c| c.name()))
            .check("exactly_one_convention_fits", self.selected().is_some())
            .num("mean_inverse", self.mean_inverse.mean())
            .num("mean_inverse_expected", want)
            .check("mean_inverse_within_4se", mean_ok)
            .value("resamples", self.resamples)
            .check("resamples_ok", resamples_ok(self.resamples, self.n))
    }
}

/// Pools the `K` diagonal entries of `sigma^2 (H^H H)^{-1}` and fits both
/// density conventions on common equal-mass bins.
pub fn empirical_noise_levels(dims: ChannelDims, sigma2: f64, n: usize, seed: u64) -> Result<NoiseLevelCheck> {
    if dims.k() > dims.m() {
        return Err(Error::Unsupported(format!(
            "zero-forcing needs K <= M (K={}, M={})",
            dims.k(),
            dims.m()
        )));
    }
    let chunks = map_chunks(seed, SALT_NOISE, n, |rng, count| {
        let mut values = Vec::with_capacity(count * dims.k());
        let mut inv = MeanVar::default();
        let mut resamples = 0;
        for _ in 0..count {
            for _ in 0..MAX_TRIES {
                let h = complex_gaussian_matrix(rng, dims.m(), dims.k());
                let gram = h.adjoint() * &h;
                let ev = hermitian_eigenvalues(&gram, h.norm_squared());
                let well_posed = ev.as_ref().is_some_and(|ev| {
                    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
                    lo > 0.0 && hi / lo <= MAX_CONDITION
                });
                let inverse = if well_posed { inverse_hpd(&gram) } else { None };
                match inverse {
                    Some(w) => {
                        for k in 0..dims.k() {
                            let a = sigma2 * w[(k, k)].re;
                            values.push(a);
                            inv.add(1.0 / a);
                        }
                        break;
                    }
                    None => resamples += 1,
                }
            }
        }
        (values, inv, resamples)
    });
    let resamples = chunks.iter().map(|c| c.2).sum();
    let mean_inverse = merge_all(chunks.iter().map(|c| &c.1));
    let values: Vec<f64> = chunks.into_iter().flat_map(|c| c.0).collect();

    let reference = NoiseLevelDensity::new(dims, sigma2, DofConvention::default())?;
    let edges = quantile_edges(bin_count(values.len()), |p| reference.quantile(p))?;
    let histogram = EmpiricalHistogram::from_values(&values, edges.clone());
    let mut fits = Vec::new();
    for convention in DofConvention::ALL {
        let d = NoiseLevelDensity::new(dims, sigma2, convention)?;
        let probs = bin_probs(&edges, |x| d.cdf(x))?;
        fits.push(ConventionFit { convention, fit: fit_bins(&histogram, &probs) });
    }
    let mut check = NoiseLevelCheck { dims, sigma2, n, histogram, fits, mean_inverse, resamples, passed: false };
    check.passed = check.report().passed;
    Ok(check)
}

#[derive(Debug, Clone)]
pub struct CapacityCheck {
    pub cfg: ChannelConfig,
    pub n: usize,
    /// Per-draw `log2 det(I + rho H H^H)`.
    pub bits: MeanVar,
    pub closed_form: f64,
    /// Largest per-draw relative gap between the two determinant forms.
    pub sylvester_max: f64,
    pub passed: bool,
}

impl CapacityCheck {
    pub fn rel_err(&self) -> f64 {
        (self.bits.mean() - self.closed_form).abs() / self.closed_form
    }

    pub fn report(&self) -> Report {
        Report::new(format!(
            "ergodic capacity K={} M={} snr={}dB",
            self.cfg.dims.k(),
            self.cfg.dims.m(),
            crate::report::format_sig(self.cfg.snr_db())
        ))
        .value("samples", self.n)
        .num("monte_carlo", self.bits.mean())
        .num("std_err", self.bits.std_err())
        .num("closed_form", self.closed_form)
        .num("rel_err", self.rel_err())
        .check("within_1pct", self.rel_err() <= CAPACITY_REL_TOL)
        .num("sylvester_max_rel", self.sylvester_max)
        .check("sylvester_identity", self.sylvester_max <= SYLVESTER_TOL)
    }
}

/// Monte Carlo `E[log2 det(I_M + rho H H^H)]`; each draw also checks
/// `det(H H^H + s2 I_M)/s2^M = det(H^H H + s2 I_K)/s2^K`.
pub fn empirical_capacity(cfg: &ChannelConfig, n: usize, seed: u64) -> Result<CapacityCheck> {
    let dims = cfg.dims;
    let s2 = cfg.sigma2;
    let chunks = map_chunks(seed, SALT_CAPACITY, n, |rng, count| {
        let mut bits = MeanVar::default();
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let h = complex_gaussian_matrix(rng, dims.m(), dims.k());
            let big = &h * h.adjoint() + scaled_identity(dims.m(), s2);
            let small = h.adjoint() * &h + scaled_identity(dims.k(), s2);
            let (Some(ld_m), Some(ld_k)) = (ln_det_hpd(&big), ln_det_hpd(&small)) else {
                worst = f64::INFINITY;
                continue;
            };
            let ld_m = ld_m - dims.m() as f64 * s2.ln();
            let ld_k = ld_k - dims.k() as f64 * s2.ln();
            worst = worst.max((ld_m - ld_k).exp_m1().abs());
            bits.add(ld_k / std::f64::consts::LN_2);
        }
        (bits, worst)
    });
    let bits = merge_all(chunks.iter().map(|c| &c.0));
    let sylvester_max = chunks.iter().map(|c| c.1).fold(0.0, f64::max);
    let closed_form = capacity(cfg)?;
    let mut check = CapacityCheck { cfg: *cfg, n, bits, closed_form, sylvester_max, passed: false };
    check.passed = check.report().passed;
    Ok(check)
}

const SALT_WATERFILL: u32 = 8;
pub const WATERFILL_REL_TOL: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct UpperBoundCheck {
    pub cfg: ChannelConfig,
    pub n: usize,
    /// Water level found on the sampled eigenvalues.
    pub log2_nu: f64,
    /// Per-eigenvalue rate terms at that level, scaled by `T`.
    pub rate: MeanVar,
    pub closed_form: f64,
    pub passed: bool,
}

impl UpperBoundCheck {
    pub fn rel_err(&self) -> f64 {
        (self.rate.mean() - self.closed_form).abs() / self.closed_form
    }

    pub fn tolerance(&self) -> f64 {
        WATERFILL_REL_TOL.max(SIGMA_BAND * self.rate.std_err() / self.closed_form)
    }

    pub fn report(&self) -> Report {
        Report::new(format!(
            "informed-receiver bound K={} M={} snr={}dB C={}",
            self.cfg.dims.k(),
            self.cfg.dims.m(),
            crate::report::format_sig(self.cfg.snr_db()),
            crate::report::format_sig(self.cfg.capacity_bits)
        ))
        .value("samples", self.n)
        .num("monte_carlo", self.rate.mean())
        .num("closed_form", self.closed_form)
        .num("rel_err", self.rel_err())
        .check("within_tolerance", self.rel_err() <= self.tolerance())
    }
}

/// Water-filling on sampled eigenvalues: the level `nu` with
/// `mean(max(0, log2(rho l / nu))) = C / T`, and the resulting rate.
pub fn empirical_upper_bound(cfg: &ChannelConfig, n: usize, seed: u64) -> Result<UpperBoundCheck> {
    let dims = cfg.dims;
    let chunks = map_chunks(seed, SALT_WATERFILL, n, |rng, count| {
        let mut values = Vec::with_capacity(count * dims.t());
        for _ in 0..count {
            let h = complex_gaussian_matrix(rng, dims.m(), dims.k());
            if let Some(ev) = hermitian_eigenvalues(&small_gram(&h), h.norm_squared()) {
                values.extend(ev.into_iter().filter(|&l| l > 0.0));
            }
        }
        values
    });
    let log2_snr_l: Vec<f64> = chunks.into_iter().flatten().map(|l| (cfg.snr() * l).log2()).collect();
    let t = dims.t() as f64;
    let target = cfg.capacity_bits / t;
    let spent = |log2_nu: f64| {
        let mut s = crate::stats::NeumaierSum::default();
        log2_snr_l.iter().for_each(|&v| s.add((v - log2_nu).max(0.0)));
        s.value() / log2_snr_l.len() as f64
    };

    let (mut lo, mut hi) = (-2000.0, 2000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spent(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let log2_nu = 0.5 * (lo + hi);
    let log1p_nu = (log2_nu.exp2()).ln_1p();
    let mut rate = MeanVar::default();
    for &v in &log2_snr_l {
        let term = if v > log2_nu {
            ((v * std::f64::consts::LN_2).exp().ln_1p() - log1p_nu) / std::f64::consts::LN_2
        } else {
            0.0
        };
        rate.add(t * term);
    }
    let closed_form = ibrelay_core::bounds::upper_bound(cfg)?;
    let mut check = UpperBoundCheck { cfg: *cfg, n, log2_nu, rate, closed_form, passed: false };
    check.passed = check.report().passed;
    Ok(check)
}
