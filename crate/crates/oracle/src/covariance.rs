//! Sample-mean checks of the MMSE filter moments.
//!
//! With `F = (H H^H + s2 I_M)^{-1} H`, the means of `F^H H`, `F^H H H^H F`
//! and `F^H F` are `(T/K) E[g(lambda)] I_K` for `g = l/(l+s2)`,
//! `l^2/(l+s2)^2` and `l/(l+s2)^2`. The filtered observation `x_bar = F^H y`
//! has covariance `(T/K) E[l/(l+s2)] I_K`.

use ibrelay_core::spectra::EigDensity;
use ibrelay_core::{ChannelDims, Result};
use nalgebra::Cholesky;

use crate::linalg::scaled_identity;
use crate::report::Report;
use crate::sampler::{complex_gaussian_matrix, complex_normal, map_chunks, CMatrix, C64};
use crate::stats::{MeanVar, SIGMA_BAND};

pub const DIAG_REL_TOL: f64 = 0.01;
/// Off-diagonal means must stay below `OFF_DIAG_SCALE / sqrt(n)`.
pub const OFF_DIAG_SCALE: f64 = 3.0;

const SALT_COVARIANCE: u32 = 4;
const NAMES: [&str; 4] = ["F^H H", "F^H H H^H F", "F^H F", "E[x_bar x_bar^H]"];

#[derive(Debug, Clone)]
pub struct MomentCheck {
    pub name: &'static str,
    pub mean: CMatrix,
    pub predicted_diag: f64,
    /// Largest standard error of a diagonal mean, relative to the prediction.
    pub diag_rel_se: f64,
}

impl MomentCheck {
    /// [`DIAG_REL_TOL`], widened to four standard errors when needed.
    pub fn diag_tolerance(&self) -> f64 {
        DIAG_REL_TOL.max(SIGMA_BAND * self.diag_rel_se)
    }

    pub fn max_diag_rel_err(&self) -> f64 {
        let p = self.predicted_diag;
        (0..self.mean.nrows()).map(|i| (self.mean[(i, i)].re - p).abs() / p.abs()).fold(0.0, f64::max)
    }

    pub fn max_off_diag(&self) -> f64 {
        let k = self.mean.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    worst = worst.max(self.mean[(i, j)].norm());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceCheck {
    pub dims: ChannelDims,
    pub sigma2: f64,
    pub n: usize,
    pub moments: Vec<MomentCheck>,
    pub singular: usize,
    pub passed: bool,
}

impl CovarianceCheck {
    pub fn off_diag_limit(&self) -> f64 {
        OFF_DIAG_SCALE / (self.n as f64).sqrt()
    }

    pub fn report(&self) -> Report {
        let mut r = Report::new(format!(
            "mmse covariance identities K={} M={} sigma2={}",
            self.dims.k(),
            self.dims.m(),
            crate::report::format_sig(self.sigma2)
        ))
        .value("samples", self.n);
        for m in &self.moments {
            r = r
                .num(&format!("{}.predicted", m.name), m.predicted_diag)
                .num(&format!("{}.max_diag_rel_err", m.name), m.max_diag_rel_err())
                .num(&format!("{}.diag_rel_se", m.name), m.diag_rel_se)
                .check(&format!("{}.diag_ok", m.name), m.max_diag_rel_err() <= m.diag_tolerance())
                .num(&format!("{}.max_off_diag", m.name), m.max_off_diag())
                .check(&format!("{}.off_diag_small", m.name), m.max_off_diag() <= self.off_diag_limit());
        }
        r.value("singular_draws", self.singular).check("no_singular_draws", self.singular == 0)
    }
}

pub fn check_covariance_identities(dims: ChannelDims, sigma2: f64, n: usize, seed: u64) -> Result<CovarianceCheck> {
    let (k, m) = (dims.k(), dims.m());
    let chunks = map_chunks(seed, SALT_COVARIANCE, n, |rng, count| {
        let mut sums = vec![CMatrix::zeros(k, k); 4];
        let mut diags = vec![vec![MeanVar::default(); k]; 4];
        let mut singular = 0usize;
        for _ in 0..count {
            let h = complex_gaussian_matrix(rng, m, k);
            let x = complex_gaussian_matrix(rng, k, 1);
            let noise = CMatrix::from_fn(m, 1, |_, _| complex_normal(rng) * sigma2.sqrt());
            let Some(chol) = Cholesky::new(&h * h.adjoint() + scaled_identity(m, sigma2)) else {
                singular += 1;
                continue;
            };
            let f = chol.solve(&h);
            let fh = f.adjoint();
            let fh_h = &fh * &h;
            let y = &h * x + noise;
            let x_bar = &fh * y;
            let terms = [fh_h.clone(), &fh_h * fh_h.adjoint(), &fh * &f, &x_bar * x_bar.adjoint()];
            for ((sum, diag), term) in sums.iter_mut().zip(diags.iter_mut()).zip(terms) {
                for (i, d) in diag.iter_mut().enumerate() {
                    d.add(term[(i, i)].re);
                }
                *sum += term;
            }
        }
        (sums, diags, singular)
    });
    let singular: usize = chunks.iter().map(|c| c.2).sum();
    let mut totals = vec![CMatrix::zeros(k, k); 4];
    let mut diag_stats = vec![vec![MeanVar::default(); k]; 4];
    for (sums, diags, _) in &chunks {
        for (t, s) in totals.iter_mut().zip(sums) {
            *t += s;
        }
        for (t, d) in diag_stats.iter_mut().zip(diags) {
            for (a, b) in t.iter_mut().zip(d) {
                a.merge(b);
            }
        }
    }

    let density = EigDensity::new(dims);
    let ratio = dims.t() as f64 / k as f64;
    let g1 = density.expect_from(0.0, |l| l / (l + sigma2), &[sigma2])?;
    let g2 = density.expect_from(0.0, |l| (l / (l + sigma2)).powi(2), &[sigma2])?;
    let g3 = density.expect_from(0.0, |l| l / (l + sigma2).powi(2), &[sigma2])?;
    let predicted = [g1, g2, g3, g1].map(|g| ratio * g);

    let used = (n - singular).max(1) as f64;
    let moments = totals
        .into_iter()
        .zip(diag_stats)
        .zip(NAMES.into_iter().zip(predicted))
        .map(|((sum, diag), (name, predicted_diag))| {
            let se = diag.iter().map(MeanVar::std_err).fold(0.0, f64::max);
            MomentCheck { name, mean: sum / C64::from(used), predicted_diag, diag_rel_se: se / predicted_diag }
        })
        .collect();
    let mut check = CovarianceCheck { dims, sigma2, n, moments, singular, passed: false };
    check.passed = check.report().passed;
    Ok(check)
}
