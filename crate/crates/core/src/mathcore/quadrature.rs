use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::compensated_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Gauss–Laguerre nodes on `[0, inf)` for the weight `e^{-x}`.
    GaussLaguerre,
    /// Globally adaptive Gauss–Kronrod (7/15) panels.
    AdaptiveInterval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-12, max_panels: 4000 }
    }
}

/// A quadrature rule: nodes and weights of the base formula plus the
/// tolerance used when the rule is applied adaptively.
///
/// For [`RuleKind::GaussLaguerre`] the nodes live on `[0, inf)`; for
/// [`RuleKind::AdaptiveInterval`] they are the Kronrod nodes mapped onto
/// `[0, 1]`, scaled to each panel at integration time.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: RuleKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // Adaptive: embedded Gauss weights (zero at Kronrod-only nodes).
    // Gauss–Laguerre: w_i e^{x_i}, used after the shift substitution.
    aux: Vec<f64>,
    tol: Tolerance,
}

// Kronrod 15-point abscissae on [-1, 1] (non-negative half) and weights,
// with the embedded 7-point Gauss weights at the odd positions.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

impl QuadratureRule {
    /// `n`-node Gauss–Laguerre rule, exact for polynomials of degree `2n - 1`
    /// against `e^{-x}`.
    pub fn gauss_laguerre(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Laguerre rule needs at least one node");
        let (nodes, weights) = laguerre_nodes(n);
        let aux = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| (w.ln() + x).exp())
            .collect();
        Self { kind: RuleKind::GaussLaguerre, nodes, weights, aux, tol: Tolerance::default() }
    }

    pub fn adaptive() -> Self {
        let mut nodes = Vec::with_capacity(15);
        let mut weights = Vec::with_capacity(15);
        let mut gauss = Vec::with_capacity(15);
        let gauss_weight = |i: usize| if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        for i in 0..7 {
            nodes.push(0.5 * (1.0 - XGK[i]));
            weights.push(0.5 * WGK[i]);
            gauss.push(0.5 * gauss_weight(i));
        }
        nodes.push(0.5);
        weights.push(0.5 * WGK[7]);
        gauss.push(0.5 * WG[3]);
        for i in (0..7).rev() {
            nodes.push(0.5 * (1.0 + XGK[i]));
            weights.push(0.5 * WGK[i]);
            gauss.push(0.5 * gauss_weight(i));
        }
        Self { kind: RuleKind::AdaptiveInterval, nodes, weights, aux: gauss, tol: Tolerance::default() }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    /// The same tolerance applied through the adaptive Kronrod rule.
    fn as_adaptive(&self) -> QuadratureRule {
        match self.kind {
            RuleKind::AdaptiveInterval => self.clone(),
            RuleKind::GaussLaguerre => QuadratureRule::adaptive().with_tolerance(self.tol),
        }
    }

    fn kronrod_panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> (f64, f64) {
        let h = b - a;
        let mut k = 0.0;
        let mut g = 0.0;
        for ((&x, &w), &wg) in self.nodes.iter().zip(&self.weights).zip(&self.aux) {
            let y = f(a + h * x);
            k += w * y;
            g += wg * y;
        }
        (k * h, g * h)
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_laguerre(64)
    }
}

/// Newton-refined Gauss–Laguerre nodes and weights (weight `e^{-x}`).
fn laguerre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
            }
        };
        let mut p_prev = 0.0;
        let mut deriv = 1.0;
        for _ in 0..200 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            deriv = nf * (p1 - p2) / z;
            p_prev = p2;
            let step = p1 / deriv;
            z -= step;
            if step.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (deriv * nf * p_prev);
    }
    (x, w)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn adaptive_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: &QuadratureRule) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let tol = rule.tol;
    let mut heap = BinaryHeap::new();
    let (k, g) = rule.kronrod_panel(f, a, b);
    heap.push(Panel { a, b, value: k, err: (k - g).abs() });
    let mut total = k;
    let mut total_err = (k - g).abs();
    let mut previous = f64::NAN;
    let mut frozen_value = 0.0;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= tol.max_panels {
            return Err(Error::NoConvergence { last: total, previous });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split any further in floating point.
            frozen_value += worst.value;
            total_err -= worst.err;
            continue;
        }
        let (kl, gl) = rule.kronrod_panel(f, worst.a, mid);
        let (kr, gr) = rule.kronrod_panel(f, mid, worst.b);
        let left = Panel { a: worst.a, b: mid, value: kl, err: (kl - gl).abs() };
        let right = Panel { a: mid, b: worst.b, value: kr, err: (kr - gr).abs() };
        previous = total;
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        if !total.is_finite() {
            return Err(Error::Domain { what: "integrand", value: total });
        }
    }
    let value = compensated_sum(heap.into_iter().map(|p| p.value)) + frozen_value;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what: "integrand", value })
    }
}

/// `int_lower^upper f`. An infinite `upper` is handled by the shift
/// `x = lower + u` for a Gauss–Laguerre rule, or by the map
/// `x = lower + t / (1 - t)` for the adaptive rule.
pub fn integrate<F>(f: F, lower: f64, upper: f64, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if lower.is_nan() || upper.is_nan() || lower.is_infinite() {
        return Err(Error::Domain { what: "integration limit", value: lower });
    }
    if upper < lower {
        return integrate(f, upper, lower, rule).map(|v| -v);
    }
    match (rule.kind, upper.is_infinite()) {
        (RuleKind::GaussLaguerre, true) => {
            let value = compensated_sum(
                rule.nodes.iter().zip(&rule.aux).map(|(&u, &w)| w * f(lower + u)),
            );
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::Domain { what: "integrand", value })
            }
        }
        (RuleKind::GaussLaguerre, false) => Err(Error::Unsupported(
            "a Gauss–Laguerre rule needs an infinite upper limit".into(),
        )),
        (RuleKind::AdaptiveInterval, false) => adaptive_finite(&f, lower, upper, rule),
        (RuleKind::AdaptiveInterval, true) => {
            let mapped = |t: f64| {
                let s = 1.0 - t;
                let y = f(lower + t / s);
                if y == 0.0 {
                    0.0
                } else {
                    y / (s * s)
                }
            };
            adaptive_finite(&mapped, 0.0, 1.0, rule)
        }
    }
}

/// Integrates piecewise over consecutive `breaks` (ascending; the last one
/// may be `+inf`). Finite pieces always use the adaptive rule; an infinite
/// final piece uses `rule` itself.
pub fn integrate_pieces<F>(f: F, breaks: &[f64], rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let adaptive = rule.as_adaptive();
    let mut parts = Vec::with_capacity(breaks.len());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        let piece_rule = if b.is_infinite() { rule } else { &adaptive };
        parts.push(integrate(&f, a, b, piece_rule)?);
    }
    Ok(compensated_sum(parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }

    #[test]
    fn exponential_integrals() {
        for rule in [QuadratureRule::default(), QuadratureRule::adaptive()] {
            let one = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &rule).unwrap();
            assert!((one - 1.0).abs() < 1e-12, "{:?}", rule.kind());
            let mean = integrate(|x| x * (-x).exp(), 0.0, f64::INFINITY, &rule).unwrap();
            assert!((mean - 1.0).abs() < 1e-12);
            let tail = integrate(|x| (-x).exp(), 2.0, f64::INFINITY, &rule).unwrap();
            assert!((tail - (-2.0_f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn laguerre_exactness_on_monomials() {
        let rule = QuadratureRule::gauss_laguerre(32);
        for k in 0..=20 {
            let got = integrate(|x| x.powi(k as i32) * (-x).exp(), 0.0, f64::INFINITY, &rule).unwrap();
            let want = factorial(k);
            assert!((got - want).abs() <= 1e-10 * want, "k = {k}: {got} vs {want}");
        }
    }

    #[test]
    fn laguerre_64_weights_sum_to_one() {
        let rule = QuadratureRule::gauss_laguerre(64);
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "{sum:e}");
        let first_moment: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| x * w).sum();
        assert!((first_moment - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rule_invariants() {
        for rule in [
            QuadratureRule::gauss_laguerre(8),
            QuadratureRule::gauss_laguerre(64),
            QuadratureRule::adaptive(),
        ] {
            assert_eq!(rule.nodes().len(), rule.weights().len());
            assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            assert!(rule.nodes().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn kronrod_is_exact_to_degree_22() {
        let rule = QuadratureRule::adaptive();
        for d in 0..=22 {
            let (k, _) = rule.kronrod_panel(&|x: f64| x.powi(d), 0.0, 1.0);
            assert!((k - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "degree {d}");
        }
        for d in 0..=13 {
            let (_, g) = rule.kronrod_panel(&|x: f64| x.powi(d), 0.0, 1.0);
            assert!((g - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "gauss degree {d}");
        }
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        // int_0^1 ln x dx = -1
        let v = integrate(|x: f64| x.ln(), 0.0, 1.0, &QuadratureRule::adaptive()).unwrap();
        assert!((v + 1.0).abs() < 1e-10);
    }

    #[test]
    fn kink_split_matches_closed_form() {
        // int_0^3 |x - 1| dx = 0.5 + 2
        let f = |x: f64| (x - 1.0).abs();
        let v = integrate_pieces(f, &[0.0, 1.0, 3.0], &QuadratureRule::adaptive()).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn pieces_with_infinite_tail() {
        let f = |x: f64| x * x * (-x).exp();
        for rule in [QuadratureRule::default(), QuadratureRule::adaptive()] {
            let v = integrate_pieces(f, &[0.0, 0.5, 3.0, f64::INFINITY], &rule).unwrap();
            assert!((v - 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn laguerre_rejects_finite_upper_limit() {
        let err = integrate(|x| x, 0.0, 1.0, &QuadratureRule::default()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn non_convergence_reports_estimates() {
        let tight = QuadratureRule::adaptive()
            .with_tolerance(Tolerance { abs: 0.0, rel: 0.0, max_panels: 8 });
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &tight).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }
}
