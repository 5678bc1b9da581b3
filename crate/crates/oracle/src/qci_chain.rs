//! Simulation of the quantized channel inversion chain: zero-forcing,
//! rounding of noise levels up to the grid, artificial degradation, and the
//! Gaussian representation `z = Phi x_hat + n'`.

use ibrelay_core::qci::{qci_waterfill, repr_fading, QuantGrid};
use ibrelay_core::{ChannelConfig, Error, Result};
use rand::Rng;

use crate::linalg::{hermitian_eigenvalues, inverse_hpd, MAX_CONDITION};
use crate::report::{format_sig, Report};
use crate::sampler::{complex_gaussian_matrix, complex_normal, map_chunks, stream_rng, CMatrix, C64};
use crate::stats::{MeanVar, SIGMA_BAND};

const SALT_CHAIN: u32 = 5;
const SALT_CONDITIONAL: u32 = 6;
const MAX_TRIES: usize = 1000;
/// Channels on which the conditional noise covariance is checked.
pub const CONDITIONAL_CHANNELS: usize = 4;
pub const CONDITIONAL_DRAWS: usize = 20_000;
/// Levels with fewer pooled streams are reported but not judged.
pub const MIN_LEVEL_COUNT: usize = 200;

/// Per-level statistics over pooled streams.
#[derive(Debug, Clone, Default)]
pub struct LevelStats {
    pub count: usize,
    /// `|n_tilde_k|^2`, zero-forcing noise only.
    pub zf_noise: MeanVar,
    /// `|n_hat_k|^2`, after degradation.
    pub degraded_noise: MeanVar,
    /// `|z_k|^2`.
    pub representation: MeanVar,
}

impl LevelStats {
    fn merge(&mut self, other: &LevelStats) {
        self.count += other.count;
        self.zf_noise.merge(&other.zf_noise);
        self.degraded_noise.merge(&other.degraded_noise);
        self.representation.merge(&other.representation);
    }
}

#[derive(Debug, Clone)]
pub struct ConditionalCovariance {
    pub predicted: CMatrix,
    pub empirical: CMatrix,
    /// Largest entry gap in units of its standard error.
    pub max_z: f64,
}

#[derive(Debug, Clone)]
pub struct QciChainCheck {
    pub cfg: ChannelConfig,
    pub n: usize,
    pub grid: QuantGrid,
    pub c_bits: Vec<f64>,
    pub fading: Vec<f64>,
    pub levels: Vec<LevelStats>,
    pub negative_artificial: usize,
    pub conditional: Vec<ConditionalCovariance>,
    pub resamples: usize,
    pub passed: bool,
}

impl QciChainCheck {
    fn pmf_band(&self, p: f64) -> f64 {
        SIGMA_BAND * (p * (1.0 - p) / self.n as f64).sqrt()
    }

    pub fn report(&self) -> Report {
        let k = self.cfg.dims.k();
        let total = (self.n * k) as f64;
        let mut r = Report::new(format!(
            "qci chain K={} M={} sigma2={} J={}",
            k,
            self.cfg.dims.m(),
            format_sig(self.cfg.sigma2),
            self.grid.levels()
        ))
        .value("samples", self.n);
        let finite = self.grid.points().len();
        for (j, stats) in self.levels.iter().enumerate() {
            let p = self.grid.pmf()[j];
            let freq = stats.count as f64 / total;
            r = r
                .num(&format!("level{j}.pmf"), p)
                .num(&format!("level{j}.frequency"), freq)
                .check(&format!("level{j}.frequency_ok"), (freq - p).abs() <= self.pmf_band(p));
            if j >= finite || stats.count < MIN_LEVEL_COUNT {
                continue;
            }
            let b = self.grid.points()[j];
            let dn = &stats.degraded_noise;
            let zn = &stats.representation;
            let z_expected = (self.c_bits[j] * std::f64::consts::LN_2).exp();
            r = r
                .num(&format!("level{j}.degraded_noise"), dn.mean())
                .check(&format!("level{j}.degraded_noise_is_level"), (dn.mean() - b).abs() <= SIGMA_BAND * dn.std_err())
                .check(&format!("level{j}.degradation_adds_noise"), dn.mean() >= stats.zf_noise.mean())
                .num(&format!("level{j}.repr_power"), zn.mean())
                .num(&format!("level{j}.repr_power_expected"), z_expected)
                .check(
                    &format!("level{j}.repr_power_ok"),
                    (zn.mean() - z_expected).abs() <= SIGMA_BAND * zn.std_err().max(1e-12 * z_expected),
                );
        }
        let worst_z = self.conditional.iter().map(|c| c.max_z).fold(0.0, f64::max);
        r.value("artificial_noise_negative", self.negative_artificial)
            .check("artificial_noise_nonnegative", self.negative_artificial == 0)
            .value("conditional_channels", self.conditional.len())
            .num("conditional_cov_max_z", worst_z)
            .check(
                "conditional_cov_ok",
                self.conditional.len() == CONDITIONAL_CHANNELS && worst_z <= SIGMA_BAND + 1.0,
            )
            .value("resamples", self.resamples)
            .check("resamples_ok", self.resamples as f64 <= 1e-3 * self.n as f64)
    }
}

/// Draws a well-conditioned channel and returns it with `(H^H H)^{-1}`.
fn draw_invertible<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize, resamples: &mut usize) -> Option<(CMatrix, CMatrix)> {
    for _ in 0..MAX_TRIES {
        let h = complex_gaussian_matrix(rng, m, k);
        let gram = h.adjoint() * &h;
        let ok = hermitian_eigenvalues(&gram, h.norm_squared()).is_some_and(|ev| {
            let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ev.iter().copied().fold(0.0, f64::max);
            lo > 0.0 && hi / lo <= MAX_CONDITION
        });
        if ok {
            if let Some(w) = inverse_hpd(&gram) {
                return Some((h, w));
            }
        }
        *resamples += 1;
    }
    None
}

fn conditional_covariance<R: Rng + ?Sized>(
    rng: &mut R,
    h: &CMatrix,
    w: &CMatrix,
    grid: &QuantGrid,
    sigma2: f64,
) -> Option<ConditionalCovariance> {
    let k = h.ncols();
    let a = w * C64::from(sigma2);
    let ceil: Vec<f64> = (0..k).map(|i| grid.ceiling(a[(i, i)].re)).collect();
    if ceil.iter().any(|b| b.is_infinite()) {
        return None;
    }
    let mut predicted = a.clone();
    for i in 0..k {
        predicted[(i, i)] = C64::from(ceil[i]);
    }
    let pinv = w * h.adjoint();
    let mut sum = CMatrix::zeros(k, k);
    for _ in 0..CONDITIONAL_DRAWS {
        let noise = CMatrix::from_fn(h.nrows(), 1, |_, _| complex_normal(rng) * sigma2.sqrt());
        let mut n_hat = &pinv * noise;
        for i in 0..k {
            n_hat[(i, 0)] += complex_normal(rng) * (ceil[i] - a[(i, i)].re).sqrt();
        }
        sum += &n_hat * n_hat.adjoint();
    }
    let draws = CONDITIONAL_DRAWS as f64;
    let empirical = sum / C64::from(draws);
    let mut max_z: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let se = (predicted[(i, i)].re * predicted[(j, j)].re / draws).sqrt();
            max_z = max_z.max((empirical[(i, j)] - predicted[(i, j)]).norm() / se);
        }
    }
    Some(ConditionalCovariance { predicted, empirical, max_z })
}

/// Runs the chain `n` times with the water-filled budget of `cfg` on `grid`.
pub fn simulate_qci_chain(cfg: &ChannelConfig, grid: &QuantGrid, n: usize, seed: u64) -> Result<QciChainCheck> {
    let (k, m) = (cfg.dims.k(), cfg.dims.m());
    if k > m {
        return Err(Error::Unsupported(format!("zero-forcing needs K <= M (K={k}, M={m})")));
    }
    let sigma2 = cfg.sigma2;
    let alloc = qci_waterfill(grid, k, cfg.capacity_bits)?;
    let finite = grid.points().len();
    let fading = (0..finite)
        .map(|j| repr_fading(grid.points()[j], alloc.c[j]))
        .collect::<Result<Vec<_>>>()?;
    let levels_n = grid.levels();

    let chunks = map_chunks(seed, SALT_CHAIN, n, |rng, count| {
        let mut levels = vec![LevelStats::default(); levels_n];
        let mut negative = 0usize;
        let mut resamples = 0usize;
        for _ in 0..count {
            let Some((h, w)) = draw_invertible(rng, m, k, &mut resamples) else { continue };
            let x = complex_gaussian_matrix(rng, k, 1);
            let noise = CMatrix::from_fn(m, 1, |_, _| complex_normal(rng) * sigma2.sqrt());
            let n_tilde = &w * h.adjoint() * noise;
            for i in 0..k {
                let a = sigma2 * w[(i, i)].re;
                let j = grid.ceiling_index(a);
                let stats = &mut levels[j];
                stats.count += 1;
                if j >= finite {
                    continue;
                }
                let extra = grid.points()[j] - a;
                if extra < 0.0 {
                    negative += 1;
                }
                let n_hat = n_tilde[(i, 0)] + complex_normal(rng) * extra.max(0.0).sqrt();
                let z = C64::from(fading[j]) * (x[(i, 0)] + n_hat) + complex_normal(rng);
                stats.zf_noise.add(n_tilde[(i, 0)].norm_sqr());
                stats.degraded_noise.add(n_hat.norm_sqr());
                stats.representation.add(z.norm_sqr());
            }
        }
        (levels, negative, resamples)
    });

    let mut levels = vec![LevelStats::default(); levels_n];
    let mut negative_artificial = 0;
    let mut resamples = 0;
    for (lv, neg, res) in &chunks {
        for (t, s) in levels.iter_mut().zip(lv) {
            t.merge(s);
        }
        negative_artificial += neg;
        resamples += res;
    }

    let mut rng = stream_rng(seed, u64::from(SALT_CONDITIONAL) << 32);
    let mut conditional = Vec::new();
    for _ in 0..MAX_TRIES {
        if conditional.len() == CONDITIONAL_CHANNELS {
            break;
        }
        let Some((h, w)) = draw_invertible(&mut rng, m, k, &mut resamples) else { break };
        if let Some(c) = conditional_covariance(&mut rng, &h, &w, grid, sigma2) {
            conditional.push(c);
        }
    }

    let mut check = QciChainCheck {
        cfg: *cfg,
        n,
        grid: grid.clone(),
        c_bits: alloc.c,
        fading,
        levels,
        negative_artificial,
        conditional,
        resamples,
        passed: false,
    };
    check.passed = check.report().passed;
    Ok(check)
}
