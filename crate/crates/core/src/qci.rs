//! Quantized channel inversion: the relay zero-forces, rounds each
//! per-stream noise level up to a grid point, and pays for describing the
//! grid index out of the bottleneck budget.

use crate::bounds::scalar_ib_rate;
use crate::mathcore::{compensated_sum, LN_2};
use crate::spectra::{ChannelConfig, NoiseLevelDensity};
use crate::{Error, Result};

/// Slack by which the budget must exceed the index-entropy cost.
pub const FEASIBILITY_MARGIN_BITS: f64 = 1e-9;

/// Relative offset of the single finite point of [`concentration_grid`].
pub const CONCENTRATION_MARGIN: f64 = 0.05;

/// Quantization grid `b_1 <= ... <= b_{J-1} < b_J = +inf` for the noise
/// level, with the probability of each cell `(b_{j-1}, b_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantGrid {
    points: Vec<f64>,
    pmf: Vec<f64>,
    entropy_bits: f64,
}

impl QuantGrid {
    /// Builds a grid from explicit points and probabilities; `pmf` has one
    /// more entry than `points`.
    pub fn from_parts(points: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        check_points(&points)?;
        if pmf.len() != points.len() + 1 {
            return Err(Error::InvalidConfig(format!(
                "{} grid points need {} probabilities, got {}",
                points.len(),
                points.len() + 1,
                pmf.len()
            )));
        }
        if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig("grid probabilities must be non-negative".into()));
        }
        let total = compensated_sum(pmf.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("grid probabilities sum to {total}")));
        }
        let entropy_bits = entropy_bits(&pmf);
        Ok(Self { points, pmf, entropy_bits })
    }

    /// Finite points `b_1 .. b_{J-1}`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Index entropy `H_0 = -sum P_j log2 P_j`.
    pub fn entropy_bits(&self) -> f64 {
        self.entropy_bits
    }

    /// Number of levels `J`, counting the implicit `+inf`.
    pub fn levels(&self) -> usize {
        self.pmf.len()
    }

    /// `rho_j = 1 / b_j`, with `rho_J = 0`.
    pub fn level_snrs(&self) -> Vec<f64> {
        self.points.iter().map(|b| 1.0 / b).chain(std::iter::once(0.0)).collect()
    }

    /// Index of `ceil(a)_B`, the smallest level with `a <= b_j`.
    pub fn ceiling_index(&self, a: f64) -> usize {
        self.points.partition_point(|&b| b < a)
    }

    /// `ceil(a)_B`; `+inf` in the last cell.
    pub fn ceiling(&self, a: f64) -> f64 {
        self.points.get(self.ceiling_index(a)).copied().unwrap_or(f64::INFINITY)
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidConfig("grid points must be positive and finite".into()));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("grid points must be non-decreasing".into()));
    }
    Ok(())
}

fn entropy_bits(pmf: &[f64]) -> f64 {
    let h = -compensated_sum(pmf.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()));
    h.max(0.0)
}

/// Cell probabilities of `points` under the noise-level density, with
/// `b_0 = 0`.
pub fn grid_pmf(points: &[f64], density: &NoiseLevelDensity) -> Result<QuantGrid> {
    check_points(points)?;
    let mut cdfs = Vec::with_capacity(points.len() + 2);
    cdfs.push(0.0);
    for &b in points {
        let c = density.cdf(b)?.clamp(0.0, 1.0);
        // Keep the sequence monotone when quadrature noise crosses over.
        let prev = *cdfs.last().unwrap();
        cdfs.push(c.max(prev));
    }
    cdfs.push(1.0);
    let pmf = cdfs.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    let entropy_bits = entropy_bits(&pmf);
    Ok(QuantGrid { points: points.to_vec(), pmf, entropy_bits })
}

/// Grid with one finite point just above the concentration value
/// `sigma^2 / M` of the noise level.
pub fn concentration_grid(density: &NoiseLevelDensity) -> Result<QuantGrid> {
    let b1 = density.sigma2() / density.dims().m() as f64 * (1.0 + CONCENTRATION_MARGIN);
    grid_pmf(&[b1], density)
}

/// Budget split across grid levels.
#[derive(Debug, Clone, PartialEq)]
pub struct QciAllocation {
    pub log2_nu: f64,
    /// Bits per level, `c_j = max(0, log2(rho_j / nu))`; `c_J = 0`.
    pub c: Vec<f64>,
    pub level_snrs: Vec<f64>,
    /// Number of levels with non-zero probability that receive bits.
    pub active_levels: usize,
}

impl QciAllocation {
    pub fn nu(&self) -> f64 {
        self.log2_nu.exp2()
    }

    /// `sum K P_j c_j`, the budget spent on the representation itself.
    pub fn spent_bits(&self, grid: &QuantGrid, k: usize) -> f64 {
        k as f64 * compensated_sum(grid.pmf().iter().zip(&self.c).map(|(p, c)| p * c))
    }
}

/// Water level over the grid levels so that `sum K P_j c_j = C - K H_0`.
pub fn qci_waterfill(grid: &QuantGrid, k: usize, capacity_bits: f64) -> Result<QciAllocation> {
    let kf = k as f64;
    let feedback_bits = kf * grid.entropy_bits();
    if !(capacity_bits - feedback_bits >= FEASIBILITY_MARGIN_BITS) {
        return Err(Error::InfeasibleBudget { capacity_bits, feedback_bits });
    }
    let per_stream = capacity_bits / kf - grid.entropy_bits();
    let snrs = grid.level_snrs();
    let finite = grid.points().len();
    let candidates: Vec<usize> = (0..finite).filter(|&j| grid.pmf()[j] > 0.0).collect();
    if candidates.is_empty() {
        // All mass in the last cell: no level can carry bits.
        return Err(Error::InfeasibleBudget { capacity_bits, feedback_bits });
    }

    let mut weight = 0.0;
    let mut weighted_log = 0.0;
    let mut log2_nu = f64::NAN;
    let mut active = 0;
    for (n, &j) in candidates.iter().enumerate() {
        let p = grid.pmf()[j];
        weight += p;
        weighted_log += p * snrs[j].log2();
        log2_nu = (weighted_log - per_stream) / weight;
        active = n + 1;
        let next_inactive = candidates.get(n + 1).is_none_or(|&jn| snrs[jn].log2() <= log2_nu);
        if next_inactive {
            break;
        }
    }

    let c = snrs
        .iter()
        .enumerate()
        .map(|(j, &rho)| if j < finite { (rho.log2() - log2_nu).max(0.0) } else { 0.0 })
        .collect();
    Ok(QciAllocation { log2_nu, c, level_snrs: snrs, active_levels: active })
}

/// `R^lb1 = sum K P_j [log2(1 + rho_j) - log2(1 + rho_j 2^{-c_j})]`.
pub fn qci_rate(grid: &QuantGrid, alloc: &QciAllocation, k: usize) -> f64 {
    let terms = grid
        .pmf()
        .iter()
        .zip(&alloc.level_snrs)
        .zip(&alloc.c)
        .filter(|((&p, _), _)| p > 0.0)
        .map(|((&p, &rho), &c)| p * scalar_ib_rate(rho, c));
    k as f64 * compensated_sum(terms)
}

fn check_density(cfg: &ChannelConfig, density: &NoiseLevelDensity) -> Result<()> {
    if density.dims() != cfg.dims || density.sigma2() != cfg.sigma2 {
        return Err(Error::InvalidConfig(
            "noise-level density does not match the channel configuration".into(),
        ));
    }
    Ok(())
}

/// QCI rate with the `J`-level quantile grid of the noise level.
pub fn qci_quantile_rate(cfg: &ChannelConfig, levels: usize, density: &NoiseLevelDensity) -> Result<f64> {
    check_density(cfg, density)?;
    let k = cfg.dims.k();
    let feedback_bits = k as f64 * (levels as f64).log2();
    if !(cfg.capacity_bits - feedback_bits >= FEASIBILITY_MARGIN_BITS) {
        return Err(Error::InfeasibleBudget { capacity_bits: cfg.capacity_bits, feedback_bits });
    }
    let grid = density.quantile_grid(levels)?;
    let alloc = qci_waterfill(&grid, k, cfg.capacity_bits)?;
    Ok(qci_rate(&grid, &alloc, k))
}

/// QCI rate on an arbitrary grid.
pub fn qci_grid_rate(cfg: &ChannelConfig, grid: &QuantGrid) -> Result<f64> {
    let k = cfg.dims.k();
    let alloc = qci_waterfill(grid, k, cfg.capacity_bits)?;
    Ok(qci_rate(grid, &alloc, k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QciLimits {
    /// `C -> inf`: `K E[log2(1 + 1/a)]`.
    pub large_c: f64,
    /// `M -> inf` or `rho -> inf`: the budget `C`.
    pub large_m_or_snr: f64,
}

pub fn qci_limit_rate(cfg: &ChannelConfig, density: &NoiseLevelDensity) -> Result<QciLimits> {
    check_density(cfg, density)?;
    let per_stream = density.expectation(|a| (1.0 / a).ln_1p() / LN_2)?;
    Ok(QciLimits { large_c: cfg.dims.k() as f64 * per_stream, large_m_or_snr: cfg.capacity_bits })
}

/// Fading coefficient of the Gaussian representation of one stream whose
/// noise level was rounded to `level`, given `rate_bits` for that stream:
/// `phi^2 = (1/b + 2^r)/(1 + b) - 1/b = (2^r - 1)/(1 + b)`.
pub fn repr_fading(level: f64, rate_bits: f64) -> Result<f64> {
    if !(level > 0.0) {
        return Err(Error::Domain { what: "grid level", value: level });
    }
    if !(rate_bits >= 0.0) {
        return Err(Error::Domain { what: "representation rate", value: rate_bits });
    }
    let radicand = (rate_bits * LN_2).exp_m1() / (1.0 + level);
    Ok(radicand.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::upper_bound;
    use crate::spectra::{ChannelDims, DofConvention};

    fn density(k: usize, m: usize, sigma2: f64) -> NoiseLevelDensity {
        NoiseLevelDensity::new(ChannelDims::new(k, m).unwrap(), sigma2, DofConvention::ComplexGamma).unwrap()
    }

    #[test]
    fn quantile_grid_is_uniform() {
        let d = density(2, 4, 0.1);
        for j in [2usize, 4, 8, 16] {
            let grid = d.quantile_grid(j).unwrap();
            assert_eq!(grid.levels(), j);
            for &p in grid.pmf() {
                assert!((p - 1.0 / j as f64).abs() < 1e-6, "J={j}: {p}");
            }
            assert!((grid.entropy_bits() - (j as f64).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_level_grid_has_no_entropy() {
        let grid = grid_pmf(&[], &density(1, 1, 1.0)).unwrap();
        assert_eq!(grid.pmf(), &[1.0]);
        assert_eq!(grid.entropy_bits(), 0.0);
        assert_eq!(grid.level_snrs(), vec![0.0]);
    }

    #[test]
    fn duplicate_points_give_empty_cells() {
        let d = density(2, 2, 1.0);
        let grid = grid_pmf(&[0.5, 0.5, 2.0], &d).unwrap();
        assert_eq!(grid.pmf()[1], 0.0);
        assert!((grid.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(grid_pmf(&[2.0, 1.0], &d).is_err());
    }

    #[test]
    fn ceiling_rounds_up() {
        let grid = QuantGrid::from_parts(vec![1.0, 2.0], vec![0.3, 0.3, 0.4]).unwrap();
        assert_eq!(grid.ceiling(0.2), 1.0);
        assert_eq!(grid.ceiling(1.0), 1.0);
        assert_eq!(grid.ceiling(1.5), 2.0);
        assert_eq!(grid.ceiling(3.0), f64::INFINITY);
        assert_eq!(grid.ceiling_index(3.0), 2);
    }

    #[test]
    fn single_active_level_hand_solve() {
        // J = 2 uniform, K = 1, C = H_0 + 2: c_1 = 2 / P_1 = 4 bits.
        let grid = QuantGrid::from_parts(vec![0.5], vec![0.5, 0.5]).unwrap();
        let alloc = qci_waterfill(&grid, 1, grid.entropy_bits() + 2.0).unwrap();
        assert_eq!(alloc.active_levels, 1);
        assert!((alloc.c[0] - 4.0).abs() < 1e-12);
        assert_eq!(alloc.c[1], 0.0);
        assert!((alloc.log2_nu - (2f64.log2() - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn equal_levels_share_equally() {
        let grid = QuantGrid::from_parts(vec![0.5, 0.5, 0.5], vec![0.2, 0.3, 0.1, 0.4]).unwrap();
        let alloc = qci_waterfill(&grid, 2, 10.0).unwrap();
        assert!((alloc.c[0] - alloc.c[1]).abs() < 1e-12);
        assert!((alloc.c[1] - alloc.c[2]).abs() < 1e-12);
        assert!((alloc.spent_bits(&grid, 2) - (10.0 - 2.0 * grid.entropy_bits())).abs() < 1e-9);
    }

    #[test]
    fn budget_identity_and_ordering() {
        let d = density(2, 2, 1e-4);
        let grid = d.quantile_grid(16).unwrap();
        for c in [8.5, 12.0, 40.0, 200.0] {
            let alloc = qci_waterfill(&grid, 2, c).unwrap();
            let spent = alloc.spent_bits(&grid, 2);
            assert!((spent - (c - 2.0 * grid.entropy_bits())).abs() < 1e-9, "C={c}: {spent}");
            assert!(alloc.c.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(*alloc.c.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn infeasible_budget_names_feedback_cost() {
        let grid = QuantGrid::from_parts(vec![1.0], vec![0.5, 0.5]).unwrap();
        match qci_waterfill(&grid, 2, 2.0) {
            Err(Error::InfeasibleBudget { feedback_bits, .. }) => assert!((feedback_bits - 2.0).abs() < 1e-12),
            other => panic!("expected infeasible budget, got {other:?}"),
        }
    }

    #[test]
    fn rate_examples() {
        let grid = QuantGrid::from_parts(vec![1.0], vec![0.5, 0.5]).unwrap();
        let zero = QciAllocation { log2_nu: 10.0, c: vec![0.0, 0.0], level_snrs: grid.level_snrs(), active_levels: 0 };
        assert_eq!(qci_rate(&grid, &zero, 2), 0.0);
        let one = QciAllocation { log2_nu: -1.0, c: vec![1.0, 0.0], level_snrs: grid.level_snrs(), active_levels: 1 };
        assert!((qci_rate(&grid, &one, 2) - (1.0 - 1.5f64.log2())).abs() < 1e-15);
    }

    #[test]
    fn rate_matches_active_levels_form() {
        let d = density(2, 2, 0.01);
        let j = 16;
        let grid = d.quantile_grid(j).unwrap();
        let alloc = qci_waterfill(&grid, 2, 40.0).unwrap();
        let rate = qci_rate(&grid, &alloc, 2);
        let log_nu = alloc.nu().ln_1p();
        let closed: f64 = alloc.level_snrs[..alloc.active_levels]
            .iter()
            .map(|rho| (2.0 / j as f64) * (rho.ln_1p() - log_nu) / LN_2)
            .sum();
        assert!((rate - closed).abs() < 1e-6, "{rate} vs {closed}");
    }

    #[test]
    fn active_set_is_unique() {
        let d = density(2, 3, 0.05);
        let grid = d.quantile_grid(16).unwrap();
        let snrs = grid.level_snrs();
        let per_stream = 20.0 / 2.0 - grid.entropy_bits();
        let alloc = qci_waterfill(&grid, 2, 20.0).unwrap();
        let mut hits = Vec::new();
        for l in 1..grid.levels() {
            let w: f64 = grid.pmf()[..l].iter().sum();
            let s: f64 = grid.pmf()[..l].iter().zip(&snrs).map(|(p, r)| p * r.log2()).sum();
            let log2_nu = (s - per_stream) / w;
            let last_active = snrs[l - 1].log2() > log2_nu;
            let next_inactive = snrs[l] == 0.0 || snrs[l].log2() <= log2_nu;
            if last_active && next_inactive {
                hits.push(l);
            }
        }
        assert_eq!(hits, vec![alloc.active_levels]);
    }

    #[test]
    fn quantile_rate_near_feasibility_boundary() {
        let cfg = ChannelConfig::from_snr_db(1, 2, 10.0, 1.0 + 1e-6).unwrap();
        let d = NoiseLevelDensity::for_config(&cfg, DofConvention::ComplexGamma).unwrap();
        let r = qci_quantile_rate(&cfg, 2, &d).unwrap();
        assert!(r > 0.0 && r < 1e-4, "{r}");
        let r2 = qci_quantile_rate(&cfg.with_capacity(1.01).unwrap(), 2, &d).unwrap();
        assert!(r2 > r && r2 < 0.02);
        assert!(qci_quantile_rate(&cfg.with_capacity(1.0).unwrap(), 2, &d).is_err());
    }

    #[test]
    fn quantile_rate_is_below_upper_bound() {
        let cfg = ChannelConfig::from_snr_db(2, 2, 40.0, 40.0).unwrap();
        let d = NoiseLevelDensity::for_config(&cfg, DofConvention::ComplexGamma).unwrap();
        let r = qci_quantile_rate(&cfg, 16, &d).unwrap();
        let ub = upper_bound(&cfg).unwrap();
        assert!(r > 0.0 && r < ub, "{r} vs {ub}");
    }

    #[test]
    fn mismatched_density_is_rejected() {
        let cfg = ChannelConfig::from_snr_db(2, 2, 10.0, 10.0).unwrap();
        let d = density(2, 3, cfg.sigma2);
        assert!(qci_quantile_rate(&cfg, 4, &d).is_err());
    }

    #[test]
    fn limit_for_square_channel() {
        // K = M = 2: 1/a = g / sigma^2 with g ~ Exp(1).
        let cfg = ChannelConfig::from_snr_db(2, 2, 10.0, 8.0).unwrap();
        let d = NoiseLevelDensity::for_config(&cfg, DofConvention::ComplexGamma).unwrap();
        let lim = qci_limit_rate(&cfg, &d).unwrap();
        let scalar = crate::bounds::capacity(&ChannelConfig::from_snr_db(1, 1, 10.0, 8.0).unwrap()).unwrap();
        assert!((lim.large_c - 2.0 * scalar).abs() < 1e-8);
        assert_eq!(lim.large_m_or_snr, 8.0);
        assert!(lim.large_c <= crate::bounds::capacity(&cfg).unwrap());
    }

    #[test]
    fn repr_fading_examples() {
        assert_eq!(repr_fading(1.0, 0.0).unwrap(), 0.0);
        assert!((repr_fading(1.0, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let big = repr_fading(0.3, 60.0).unwrap();
        assert!((big / (2f64.powi(60) / 1.3).sqrt() - 1.0).abs() < 1e-9);
        // The literal form agrees.
        let (b, r) = (0.7, 2.5);
        let literal = ((1.0 / b + 2f64.powf(r)) / (1.0 + b) - 1.0 / b).sqrt();
        assert!((repr_fading(b, r).unwrap() - literal).abs() < 1e-14);
        assert!(repr_fading(0.0, 1.0).is_err());
        assert!(repr_fading(1.0, -1.0).is_err());
    }
}
