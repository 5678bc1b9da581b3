//! Closed-form densities of the channel's spectral quantities.
//!
//! [`EigDensity`] is the marginal density of one unordered positive
//! eigenvalue `lambda` of `H H^H`. [`NoiseLevelDensity`] is the density of a
//! diagonal entry `a` of `sigma^2 (H^H H)^{-1}`, the per-stream noise level
//! left after zero-forcing.

use crate::mathcore::{bisect_monotone, integrate_pieces, laguerre, log_gamma, QuadratureRule};
use crate::qci::{grid_pmf, QuantGrid};
use crate::{Error, Result};

/// Antenna counts: `k` transmit dimensions, `m` relay antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelDims {
    k: usize,
    m: usize,
}

impl ChannelDims {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!("antenna counts must be positive (K={k}, M={m})")));
        }
        Ok(Self { k, m })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `min(K, M)`, the number of positive eigenvalues of `H H^H`.
    pub fn t(&self) -> usize {
        self.k.min(self.m)
    }

    /// `max(K, M)`.
    pub fn s(&self) -> usize {
        self.k.max(self.m)
    }
}

/// Dimensions, noise power and bottleneck capacity of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub dims: ChannelDims,
    pub sigma2: f64,
    /// Bottleneck link capacity `C` in bits per complex dimension.
    pub capacity_bits: f64,
}

impl ChannelConfig {
    pub fn new(dims: ChannelDims, sigma2: f64, capacity_bits: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidConfig(format!("noise power must be positive, got {sigma2}")));
        }
        if !(capacity_bits >= 0.0) || capacity_bits.is_infinite() {
            return Err(Error::InvalidConfig(format!(
                "bottleneck capacity must be finite and non-negative, got {capacity_bits}"
            )));
        }
        Ok(Self { dims, sigma2, capacity_bits })
    }

    /// Builds a configuration from an SNR in dB, `rho_dB = 10 log10(rho)`.
    pub fn from_snr_db(k: usize, m: usize, snr_db: f64, capacity_bits: f64) -> Result<Self> {
        Self::new(ChannelDims::new(k, m)?, db_to_sigma2(snr_db), capacity_bits)
    }

    /// `rho = 1 / sigma^2`.
    pub fn snr(&self) -> f64 {
        1.0 / self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    pub fn with_capacity(self, capacity_bits: f64) -> Result<Self> {
        Self::new(self.dims, self.sigma2, capacity_bits)
    }

    pub fn with_snr_db(self, snr_db: f64) -> Result<Self> {
        Self::new(self.dims, db_to_sigma2(snr_db), self.capacity_bits)
    }

    pub fn with_dims(self, dims: ChannelDims) -> Self {
        Self { dims, ..self }
    }
}

fn db_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Density of an unordered positive eigenvalue of `H H^H`,
/// `f(l) = (1/T) sum_i i!/(i+S-T)! [L_i^{S-T}(l)]^2 l^{S-T} e^{-l}`.
#[derive(Debug, Clone)]
pub struct EigDensity {
    dims: ChannelDims,
    alpha: usize,
    ln_coeffs: Vec<f64>,
    tail_rule: QuadratureRule,
}

impl EigDensity {
    pub fn new(dims: ChannelDims) -> Self {
        let alpha = dims.s() - dims.t();
        let ln_coeffs = (0..dims.t())
            .map(|i| {
                let i = i as f64;
                // Arguments are >= 1, so log_gamma cannot fail here.
                log_gamma(i + 1.0).unwrap() - log_gamma(i + alpha as f64 + 1.0).unwrap()
            })
            .collect();
        Self { dims, alpha, ln_coeffs, tail_rule: QuadratureRule::default() }
    }

    pub fn dims(&self) -> ChannelDims {
        self.dims
    }

    pub fn pdf(&self, lambda: f64) -> f64 {
        if lambda < 0.0 || lambda.is_nan() {
            return 0.0;
        }
        if lambda.is_infinite() {
            return 0.0;
        }
        let ln_weight = if self.alpha == 0 {
            -lambda
        } else if lambda == 0.0 {
            return 0.0;
        } else {
            self.alpha as f64 * lambda.ln() - lambda
        };
        let sum: f64 = self
            .ln_coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let l = laguerre(i, self.alpha, lambda);
                (c + ln_weight).exp() * l * l
            })
            .sum();
        sum / self.dims.t() as f64
    }

    /// Break points that bracket where the density carries its mass.
    fn natural_breaks(&self) -> [f64; 5] {
        let s = self.dims.s() as f64;
        let t = self.dims.t() as f64;
        let low_edge = (s.sqrt() - t.sqrt()).powi(2);
        let high_edge = (s.sqrt() + t.sqrt()).powi(2);
        let cutoff = high_edge + 10.0 * high_edge.sqrt() + 50.0;
        [low_edge, 1.0, s, high_edge, cutoff]
    }

    fn breaks_from(&self, lower: f64, upper: f64, kinks: &[f64]) -> Vec<f64> {
        let mut breaks: Vec<f64> = self
            .natural_breaks()
            .iter()
            .chain(kinks)
            .copied()
            .filter(|&p| p > lower && p < upper && p.is_finite())
            .collect();
        breaks.push(lower);
        breaks.push(upper);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }

    /// `E[g(lambda)]`.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        self.expect_from(0.0, g, &[])
    }

    /// `int_lower^inf g(l) f(l) dl`, splitting the range at `kinks` (points
    /// where `g` is not smooth or changes scale) in addition to the
    /// density's own mass landmarks.
    pub fn expect_from<G: Fn(f64) -> f64>(&self, lower: f64, g: G, kinks: &[f64]) -> Result<f64> {
        let lower = lower.max(0.0);
        let breaks = self.breaks_from(lower, f64::INFINITY, kinks);
        integrate_pieces(
            |l| {
                let p = self.pdf(l);
                if p == 0.0 {
                    0.0
                } else {
                    g(l) * p
                }
            },
            &breaks,
            &self.tail_rule,
        )
    }

    /// `P(lambda <= x)` by numerical integration of the density.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let breaks = self.breaks_from(0.0, x, &[]);
        integrate_pieces(|l| self.pdf(l), &breaks, &self.tail_rule)
    }

    /// Value `x` with `cdf(x) = p`, `0 < p < 1`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain { what: "eigenvalue quantile level", value: p });
        }
        let hi = self.natural_breaks()[4];
        let residual = |x: f64| self.cdf(x).map(|c| c - p).unwrap_or(f64::NAN);
        bisect_monotone(residual, 0.0, hi, 1e-12 * hi)
    }
}

/// Which degrees-of-freedom convention the noise-level density uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DofConvention {
    /// Inverse chi-square with `M-K+1` real degrees of freedom: `sigma^2 / X`,
    /// `X ~ chi^2_{M-K+1}`.
    HalfDof,
    /// `sigma^2 / g` with `g ~ Gamma(M-K+1, 1)`, the diagonal of a complex
    /// inverse Wishart matrix. This is the convention the Monte Carlo oracle
    /// confirms.
    #[default]
    ComplexGamma,
}

impl DofConvention {
    pub const ALL: [DofConvention; 2] = [DofConvention::HalfDof, DofConvention::ComplexGamma];

    pub fn name(self) -> &'static str {
        match self {
            DofConvention::HalfDof => "half-dof",
            DofConvention::ComplexGamma => "complex-gamma",
        }
    }
}

impl std::fmt::Display for DofConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DofConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-dof" => Ok(DofConvention::HalfDof),
            "complex-gamma" => Ok(DofConvention::ComplexGamma),
            other => Err(Error::InvalidConfig(format!("unknown dof convention '{other}'"))),
        }
    }
}

/// Density of the zero-forcing noise level `a`, a diagonal entry of
/// `sigma^2 (H^H H)^{-1}`. Both conventions have the form `scale / g` with
/// `g ~ Gamma(shape, 1)`.
#[derive(Debug, Clone)]
pub struct NoiseLevelDensity {
    dims: ChannelDims,
    sigma2: f64,
    convention: DofConvention,
    shape: f64,
    scale: f64,
    ln_norm: f64,
    tail_rule: QuadratureRule,
}

impl NoiseLevelDensity {
    pub fn new(dims: ChannelDims, sigma2: f64, convention: DofConvention) -> Result<Self> {
        if dims.k() > dims.m() {
            return Err(Error::Unsupported(format!(
                "channel inversion needs K <= M (K={}, M={})",
                dims.k(),
                dims.m()
            )));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidConfig(format!("noise power must be positive, got {sigma2}")));
        }
        let dof = (dims.m() - dims.k() + 1) as f64;
        let (shape, scale) = match convention {
            DofConvention::HalfDof => (dof / 2.0, sigma2 / 2.0),
            DofConvention::ComplexGamma => (dof, sigma2),
        };
        let ln_norm = shape * scale.ln() - log_gamma(shape)?;
        Ok(Self { dims, sigma2, convention, shape, scale, ln_norm, tail_rule: QuadratureRule::adaptive() })
    }

    pub fn for_config(cfg: &ChannelConfig, convention: DofConvention) -> Result<Self> {
        Self::new(cfg.dims, cfg.sigma2, convention)
    }

    pub fn dims(&self) -> ChannelDims {
        self.dims
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn convention(&self) -> DofConvention {
        self.convention
    }

    /// `f_a(a) = scale^shape / Gamma(shape) * a^{-shape-1} e^{-scale/a}`.
    pub fn pdf(&self, a: f64) -> f64 {
        if !(a > 0.0) || a.is_infinite() {
            return 0.0;
        }
        (self.ln_norm - (self.shape + 1.0) * a.ln() - self.scale / a).exp()
    }

    // In u = scale / a the integrand f_a(scale/u) scale/u^2 is a Gamma(shape)
    // bump, so the landmarks are placed around its mode.
    fn u_breaks(&self, lower_u: f64) -> Vec<f64> {
        let k = self.shape;
        let spread = k.sqrt();
        let mut breaks: Vec<f64> = [0.25 * k, k, k + 6.0 * spread + 10.0, k + 20.0 * spread + 60.0]
            .into_iter()
            .filter(|&u| u > lower_u)
            .collect();
        breaks.insert(0, lower_u);
        breaks.push(f64::INFINITY);
        breaks
    }

    fn u_integrand<'a, G: Fn(f64) -> f64 + 'a>(&'a self, g: G) -> impl Fn(f64) -> f64 + 'a {
        move |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let a = self.scale / u;
            let p = self.pdf(a);
            if p == 0.0 {
                0.0
            } else {
                g(a) * p * self.scale / (u * u)
            }
        }
    }

    /// `P(a <= x)` by numerical integration of the density.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let breaks = self.u_breaks(self.scale / x);
        integrate_pieces(self.u_integrand(|_| 1.0), &breaks, &self.tail_rule)
    }

    /// `E[g(a)]`.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let breaks = self.u_breaks(0.0);
        integrate_pieces(self.u_integrand(g), &breaks, &self.tail_rule)
    }

    /// Value `b` with `cdf(b) = p`, found by bisection on `ln b`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain { what: "noise-level quantile level", value: p });
        }
        let residual = |ln_b: f64| self.cdf(ln_b.exp()).map(|c| c - p).unwrap_or(f64::NAN);
        let widen = 1000f64.ln();
        let mut lo = (self.sigma2 * 1e-9).ln();
        let mut hi = (self.sigma2 * 1e6).ln();
        for _ in 0..20 {
            if residual(lo) < 0.0 {
                break;
            }
            lo -= widen;
        }
        for _ in 0..20 {
            if residual(hi) > 0.0 {
                break;
            }
            hi += widen;
        }
        bisect_monotone(residual, lo, hi, 1e-12).map(f64::exp)
    }

    /// Quantile grid with `j` levels: `b_i` at `cdf = i/j` for `i < j`, and
    /// the implicit `b_j = +inf`.
    pub fn quantile_grid(&self, j: usize) -> Result<QuantGrid> {
        if j < 2 {
            return Err(Error::InvalidConfig(format!("a quantile grid needs at least 2 levels, got {j}")));
        }
        let points = (1..j)
            .map(|i| self.quantile(i as f64 / j as f64))
            .collect::<Result<Vec<_>>>()?;
        grid_pmf(&points, self)
    }
}
