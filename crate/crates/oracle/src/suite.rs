//! The full battery of oracle checks at a chosen sample size.

use std::fmt;

use ibrelay_core::spectra::{DofConvention, NoiseLevelDensity};
use ibrelay_core::{ChannelConfig, ChannelDims, Result};

use crate::covariance::check_covariance_identities;
use crate::matrix::check_matrix_inequalities;
use crate::qci_chain::simulate_qci_chain;
use crate::report::{Report, CSV_HEADER};
use crate::spectral::{empirical_capacity, empirical_eig_check, empirical_noise_levels, empirical_upper_bound};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteLevel {
    Quick,
    Full,
}

impl SuiteLevel {
    pub fn samples(self) -> usize {
        match self {
            SuiteLevel::Quick => 10_000,
            SuiteLevel::Full => 100_000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SuiteLevel::Quick => "quick",
            SuiteLevel::Full => "full",
        }
    }
}

impl std::str::FromStr for SuiteLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(SuiteLevel::Quick),
            "full" => Ok(SuiteLevel::Full),
            other => Err(format!("unknown suite level '{other}' (expected quick or full)")),
        }
    }
}

pub const MATRIX_TRIALS: usize = 1000;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub level: SuiteLevel,
    pub seed: u64,
    pub reports: Vec<Report>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.passed).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.reports {
            out.push_str(&r.csv_rows());
        }
        out
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "oracle suite: level={} seed={}", self.level.name(), self.seed)?;
        for r in &self.reports {
            write!(f, "{r}")?;
        }
        writeln!(
            f,
            "{} of {} checks passed",
            self.reports.len() - self.failures(),
            self.reports.len()
        )
    }
}

fn dims(k: usize, m: usize) -> ChannelDims {
    ChannelDims::new(k, m).expect("suite dimensions are positive")
}

fn or_error(name: &str, r: Result<Report>) -> Report {
    r.unwrap_or_else(|e| {
        let mut rep = Report::new(name).value("error", e);
        rep.passed = false;
        rep
    })
}

pub fn run_suite(level: SuiteLevel, seed: u64) -> SuiteReport {
    let n = level.samples();
    let mut reports = Vec::new();

    for (k, m) in [(1, 1), (1, 2), (2, 2), (2, 4), (4, 2)] {
        reports.push(or_error("eigenvalue density", empirical_eig_check(dims(k, m), n, seed).map(|c| c.report())));
    }
    for (k, m) in [(1, 2), (2, 2), (2, 4)] {
        reports.push(or_error(
            "noise-level density",
            empirical_noise_levels(dims(k, m), 0.1, n, seed).map(|c| c.report()),
        ));
    }
    for db in [0.0, 10.0, 20.0] {
        let cfg = ChannelConfig::from_snr_db(2, 2, db, 1.0).expect("valid suite configuration");
        reports.push(or_error("ergodic capacity", empirical_capacity(&cfg, n, seed).map(|c| c.report())));
    }
    for (k, m, db, c) in [(2, 2, 40.0, 40.0), (2, 2, 10.0, 8.0), (4, 2, 20.0, 20.0)] {
        let cfg = ChannelConfig::from_snr_db(k, m, db, c).expect("valid suite configuration");
        reports.push(or_error("informed-receiver bound", empirical_upper_bound(&cfg, n, seed).map(|c| c.report())));
    }
    for (k, m) in [(2, 2), (2, 4), (4, 2)] {
        reports.push(or_error(
            "mmse covariance identities",
            check_covariance_identities(dims(k, m), 0.1, n, seed).map(|c| c.report()),
        ));
    }
    for (k, m, j, c) in [(2, 2, 4, 12.0), (2, 4, 4, 12.0), (1, 3, 8, 6.0)] {
        let chain = ChannelConfig::from_snr_db(k, m, 10.0, c).and_then(|cfg| {
            let d = NoiseLevelDensity::for_config(&cfg, DofConvention::default())?;
            let grid = d.quantile_grid(j)?;
            simulate_qci_chain(&cfg, &grid, n, seed)
        });
        reports.push(or_error("qci chain", chain.map(|c| c.report())));
    }
    for k in [1, 2, 4, 8] {
        reports.push(check_matrix_inequalities(k, MATRIX_TRIALS, seed).report());
    }
    SuiteReport { level, seed, reports }
}
