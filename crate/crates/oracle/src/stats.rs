//! Compensated accumulators and the equal-mass histogram criterion.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and variance from compensated first and second moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    n: usize,
    s1: NeumaierSum,
    s2: NeumaierSum,
}

impl MeanVar {
    pub fn add(&mut self, x: f64) {
        self.n += 1;
        self.s1.add(x);
        self.s2.add(x * x);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        self.n += other.n;
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.s1.value() / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        ((self.s2.value() / n - m * m) * n / (n - 1.0)).max(0.0)
    }

    pub fn std_err(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

pub fn merge_all<'a, I: IntoIterator<Item = &'a MeanVar>>(parts: I) -> MeanVar {
    let mut total = MeanVar::default();
    for p in parts {
        total.merge(p);
    }
    total
}

/// Largest relative bin error tolerated by the per-bin criterion.
pub const BIN_REL_TOL: f64 = 0.05;
/// Bins with fewer expected counts are not judged.
pub const MIN_EXPECTED_COUNT: f64 = 500.0;
/// Expected counts per bin targeted by [`bin_count`].
pub const TARGET_BIN_COUNT: usize = 8000;

/// Number of equal-mass bins for `pooled` values: 50 at most, and few
/// enough that each bin holds about [`TARGET_BIN_COUNT`] values.
pub fn bin_count(pooled: usize) -> usize {
    (pooled / TARGET_BIN_COUNT).clamp(4, 50)
}

/// Width of statistical acceptance bands, in standard errors.
pub const SIGMA_BAND: f64 = 4.0;

/// Relative error allowed in a bin with `expected` counts: the fixed
/// [`BIN_REL_TOL`], or four Poisson standard errors when that is wider.
pub fn bin_tolerance(expected: f64) -> f64 {
    BIN_REL_TOL.max(SIGMA_BAND / expected.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalHistogram {
    /// `nbins + 1` increasing edges; the first is `0`, the last `+inf`.
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub n_samples: usize,
}

impl EmpiricalHistogram {
    /// Bins `values` into the cells `(edges[i], edges[i+1]]`.
    pub fn from_values(values: &[f64], edges: Vec<f64>) -> Self {
        let nbins = edges.len() - 1;
        let mut counts = vec![0usize; nbins];
        for &v in values {
            let i = edges[1..nbins].partition_point(|&e| e < v);
            counts[i] += 1;
        }
        let n = values.len();
        let masses = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self { edges, masses, n_samples: n }
    }

    pub fn counts(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m * self.n_samples as f64).collect()
    }
}

/// Comparison of a histogram against model bin probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinFit {
    pub max_rel_err: f64,
    pub judged_bins: usize,
    pub chi_square: f64,
    pub dof: usize,
    pub passed: bool,
}

pub fn fit_bins(hist: &EmpiricalHistogram, model_probs: &[f64]) -> BinFit {
    let n = hist.n_samples as f64;
    let mut max_rel_err: f64 = 0.0;
    let mut judged = 0;
    let mut chi = NeumaierSum::default();
    let mut within = true;
    for (obs, &p) in hist.counts().iter().zip(model_probs) {
        let expected = n * p;
        if expected > 0.0 {
            chi.add((obs - expected).powi(2) / expected);
        }
        if expected >= MIN_EXPECTED_COUNT {
            judged += 1;
            let rel = (obs - expected).abs() / expected;
            max_rel_err = max_rel_err.max(rel);
            within &= rel <= bin_tolerance(expected);
        }
    }
    BinFit {
        max_rel_err,
        judged_bins: judged,
        chi_square: chi.value(),
        dof: model_probs.len().saturating_sub(1),
        passed: judged > 0 && within,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn mean_var_of_known_values() {
        let mut a = MeanVar::default();
        let mut b = MeanVar::default();
        for x in [1.0, 2.0] {
            a.add(x);
        }
        for x in [3.0, 4.0] {
            b.add(x);
        }
        a.merge(&b);
        assert_eq!(a.mean(), 2.5);
        assert!((a.variance() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_masses_sum_to_one() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64 / 100.0).collect();
        let h = EmpiricalHistogram::from_values(&values, vec![0.0, 2.5, 5.0, f64::INFINITY]);
        assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h.counts(), vec![251.0, 250.0, 499.0]);
    }

    #[test]
    fn bin_tolerance_is_fixed_at_large_counts() {
        assert_eq!(bin_tolerance(8000.0), BIN_REL_TOL);
        assert!((bin_tolerance(2500.0) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn bin_count_is_clamped() {
        assert_eq!(bin_count(10), 4);
        assert_eq!(bin_count(100_000), 12);
        assert_eq!(bin_count(10_000_000), 50);
    }
}
