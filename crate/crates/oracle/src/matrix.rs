//! Randomized checks of the determinant, trace and majorization
//! inequalities for positive-definite matrices and their diagonal parts.

use rand::Rng;

use crate::linalg::{hermitian_eigenvalues, identity, inverse_hpd, ln_det_hpd, scaled_identity};
use crate::report::{format_sig, Report};
use crate::sampler::{complex_gaussian_matrix, map_chunks, CMatrix};

pub const INEQUALITY_SLACK: f64 = 1e-10;
/// Ridge added to `A A^H` so every draw is safely positive definite.
pub const RIDGE: f64 = 0.05;

const SALT_MATRIX: u32 = 7;

/// Diagonal part `N (.) I`.
pub fn diagonal_part(n: &CMatrix) -> CMatrix {
    CMatrix::from_diagonal(&n.diagonal())
}

/// `log det(I + N) - log det(N)`.
pub fn gain(n: &CMatrix) -> f64 {
    let k = n.nrows();
    ln_det_hpd(&(identity(k) + n)).unwrap() - ln_det_hpd(n).unwrap()
}

/// Margins of the three inequalities on `n`; negative beyond the slack
/// means a violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// `gain(N) - gain(N_1)`.
    pub determinant: f64,
    /// `tr(N^{-1}) - tr(N_1^{-1})`.
    pub trace: f64,
    /// Smallest `sum_{i<=l} theta_i - sum_{i<=l} o_i` over `l`, with both
    /// sorted decreasingly, and the total sums compared as well.
    pub majorization: f64,
    /// Magnitude used to scale the slack.
    pub scale: f64,
}

pub fn margins(n: &CMatrix) -> Margins {
    let n1 = diagonal_part(n);
    let determinant = gain(n) - gain(&n1);
    let tr_inv = |m: &CMatrix| inverse_hpd(m).unwrap().trace().re;
    let trace = tr_inv(n) - tr_inv(&n1);

    let mut diag: Vec<f64> = n.diagonal().iter().map(|d| d.re).collect();
    let mut eig = hermitian_eigenvalues(n, n.norm()).unwrap();
    diag.sort_by(|a, b| b.total_cmp(a));
    eig.sort_by(|a, b| b.total_cmp(a));
    let (mut sd, mut se) = (0.0, 0.0);
    let mut majorization = f64::INFINITY;
    for (d, e) in diag.iter().zip(&eig) {
        sd += d;
        se += e;
        majorization = majorization.min(se - sd);
    }
    majorization = majorization.min(-(se - sd).abs());
    let scale = 1.0f64.max(tr_inv(n)).max(se.abs());
    Margins { determinant, trace, majorization, scale }
}

/// `W = A A^H + ridge I`, scaled by a random factor in `[1e-2, 1e2]`.
pub fn random_positive_definite<R: Rng + ?Sized>(rng: &mut R, k: usize) -> CMatrix {
    let a = complex_gaussian_matrix(rng, k, k);
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    (&a * a.adjoint() + scaled_identity(k, RIDGE)) * nalgebra::Complex::from(scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCheck {
    pub k: usize,
    pub trials: usize,
    pub determinant_violations: usize,
    pub trace_violations: usize,
    pub majorization_violations: usize,
    pub worst: Margins,
    pub passed: bool,
}

impl MatrixCheck {
    pub fn report(&self) -> Report {
        Report::new(format!("matrix inequalities k={}", self.k))
            .value("trials", self.trials)
            .value("determinant_violations", self.determinant_violations)
            .value("trace_violations", self.trace_violations)
            .value("majorization_violations", self.majorization_violations)
            .value("min_determinant_margin", format_sig(self.worst.determinant))
            .value("min_trace_margin", format_sig(self.worst.trace))
            .value("min_majorization_margin", format_sig(self.worst.majorization))
            .check("no_violations", self.determinant_violations + self.trace_violations + self.majorization_violations == 0)
    }
}

fn violated(margin: f64, scale: f64) -> bool {
    margin < -INEQUALITY_SLACK * scale
}

pub fn check_matrix_inequalities(k: usize, trials: usize, seed: u64) -> MatrixCheck {
    let chunks = map_chunks(seed, SALT_MATRIX, trials, |rng, count| {
        (0..count).map(|_| margins(&random_positive_definite(rng, k))).collect::<Vec<_>>()
    });
    let all: Vec<Margins> = chunks.into_iter().flatten().collect();
    let count = |f: fn(&Margins) -> f64| all.iter().filter(|m| violated(f(m), m.scale)).count();
    let determinant_violations = count(|m| m.determinant);
    let trace_violations = count(|m| m.trace);
    let majorization_violations = count(|m| m.majorization);
    let fold = |f: fn(&Margins) -> f64| all.iter().map(f).fold(f64::INFINITY, f64::min);
    let worst = Margins {
        determinant: fold(|m| m.determinant),
        trace: fold(|m| m.trace),
        majorization: fold(|m| m.majorization),
        scale: all.iter().map(|m| m.scale).fold(0.0, f64::max),
    };
    let passed = determinant_violations + trace_violations + majorization_violations == 0;
    MatrixCheck { k, trials, determinant_violations, trace_violations, majorization_violations, worst, passed }
}
