//! Sweep specifications and their evaluation.

use std::fmt;
use std::str::FromStr;

use ibrelay_core::bounds::{capacity, upper_bound};
use ibrelay_core::mmse::{mmse_limits, mmse_rate};
use ibrelay_core::qci::{qci_limit_rate, qci_quantile_rate};
use ibrelay_core::spectra::{DofConvention, NoiseLevelDensity};
use ibrelay_core::{ChannelConfig, ChannelDims, Error as CoreError};
use ibrelay_oracle::empirical_upper_bound;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error("at {axis} = {value}: {source}")]
    Point {
        axis: Axis,
        value: f64,
        #[source]
        source: CoreError,
    },
}

fn invalid(msg: impl Into<String>) -> SweepError {
    SweepError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SnrDb,
    CapacityBits,
    AntennasM,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::SnrDb, Axis::CapacityBits, Axis::AntennasM];

    pub fn name(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::CapacityBits => "capacity_bits",
            Axis::AntennasM => "antennas_m",
        }
    }

    /// `(from, to, step)` used when a sweep names the axis but no range.
    pub fn default_range(self) -> (f64, f64, f64) {
        match self {
            Axis::SnrDb => (0.0, 50.0, 5.0),
            Axis::CapacityBits => (4.0, 200.0, 4.0),
            Axis::AntennasM => (2.0, 64.0, 2.0),
        }
    }

    /// `fixed` with this axis set to `value`.
    pub fn apply(self, fixed: &ChannelConfig, value: f64) -> ibrelay_core::Result<ChannelConfig> {
        match self {
            Axis::SnrDb => fixed.with_snr_db(value),
            Axis::CapacityBits => fixed.with_capacity(value),
            Axis::AntennasM => Ok(fixed.with_dims(ChannelDims::new(fixed.dims.k(), value as usize)?)),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().replace('-', "_").as_str() {
            "snr_db" | "snr" => Ok(Axis::SnrDb),
            "capacity_bits" | "capacity" | "c" => Ok(Axis::CapacityBits),
            "antennas_m" | "m" => Ok(Axis::AntennasM),
            other => Err(format!("unknown axis `{other}` (expected snr_db, capacity_bits or antennas_m)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    Ub,
    Qci,
    Mmse,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ub, Scheme::Qci, Scheme::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ub => "ub",
            Scheme::Qci => "qci",
            Scheme::Mmse => "mmse",
        }
    }

    /// Comma-separated list; `all` selects every scheme.
    pub fn parse_list(s: &str) -> Result<Vec<Scheme>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Scheme::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "ub" => Ok(Scheme::Ub),
            "qci" => Ok(Scheme::Qci),
            "mmse" => Ok(Scheme::Mmse),
            other => Err(format!("unknown scheme `{other}` (expected ub, qci, mmse or all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Snr,
    Budget,
    Antennas,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "snr" => Ok(Preset::Snr),
            "budget" => Ok(Preset::Budget),
            "antennas" => Ok(Preset::Antennas),
            other => Err(format!("unknown preset `{other}` (expected snr, budget or antennas)")),
        }
    }
}

impl Preset {
    pub fn spec(self) -> SweepSpec {
        let (axis, k, m, snr_db, c) = match self {
            Preset::Snr => (Axis::SnrDb, 2, 2, 0.0, 40.0),
            Preset::Budget => (Axis::CapacityBits, 4, 4, 40.0, 4.0),
            Preset::Antennas => (Axis::AntennasM, 2, 2, 40.0, 40.0),
        };
        let (from, to, step) = axis.default_range();
        SweepSpec {
            axis,
            axis_values: axis_range(from, to, step).expect("preset range"),
            fixed: ChannelConfig::from_snr_db(k, m, snr_db, c).expect("preset config"),
            schemes: Scheme::ALL.to_vec(),
            qci_bits: vec![4, 8],
            mc_samples: 0,
            seed: ibrelay_oracle::DEFAULT_SEED,
            limits: false,
        }
    }
}

/// `from, from + step, ...` up to `to` inclusive.
pub fn axis_range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, SweepError> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) {
        return Err(invalid("axis range must be finite"));
    }
    if step <= 0.0 {
        return Err(invalid("axis step must be positive"));
    }
    if to < from {
        return Err(invalid(format!("axis range is empty: from {from} > to {to}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(invalid(format!("axis range has {n} points")));
    }
    Ok((0..n).map(|i| from + i as f64 * step).collect())
}

/// Largest QCI resolution accepted; `2^16` quantile levels per stream.
pub const MAX_QCI_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub axis_values: Vec<f64>,
    /// The parameters that are not swept. The swept one is ignored.
    pub fixed: ChannelConfig,
    pub schemes: Vec<Scheme>,
    /// QCI resolutions `B`, each with `2^B` levels.
    pub qci_bits: Vec<u32>,
    /// Draws for the Monte Carlo upper-bound column; 0 disables it.
    pub mc_samples: usize,
    pub seed: u64,
    /// Adds the large-budget limit columns.
    pub limits: bool,
}

impl SweepSpec {
    pub fn has(&self, scheme: Scheme) -> bool {
        self.schemes.contains(&scheme)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axis_values.is_empty() {
            return Err(invalid("no axis values"));
        }
        if self.axis_values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("axis values must be finite"));
        }
        if !self.axis_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("axis values must be strictly increasing"));
        }
        if self.schemes.is_empty() {
            return Err(invalid("no schemes selected"));
        }
        if self.has(Scheme::Qci) && self.qci_bits.is_empty() {
            return Err(invalid("qci scheme needs at least one resolution"));
        }
        if let Some(b) = self.qci_bits.iter().find(|&&b| b == 0 || b > MAX_QCI_BITS) {
            return Err(invalid(format!("qci bits {b} outside 1..={MAX_QCI_BITS}")));
        }
        if self.axis == Axis::AntennasM {
            if let Some(v) = self.axis_values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                return Err(invalid(format!("antenna count {v} is not a positive integer")));
            }
        }
        for &v in &self.axis_values {
            self.axis.apply(&self.fixed, v).map_err(|e| invalid(format!("{} = {v}: {e}", self.axis)))?;
        }
        Ok(())
    }

    /// CSV header, in the order of [`SweepSpec::cells`].
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.axis.name().to_string()];
        cols.extend(self.scheme_columns());
        if self.limits {
            cols.extend(["limit_ub", "limit_qci", "limit_mmse"].map(String::from));
        }
        if self.mc_samples > 0 {
            cols.push("mc_ub".into());
        }
        cols
    }

    /// Names of the rate columns, one per plotted series.
    pub fn scheme_columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for s in &self.schemes {
            match s {
                Scheme::Qci => cols.extend(self.qci_bits.iter().map(|b| format!("qci_b{b}"))),
                other => cols.push(other.name().to_string()),
            }
        }
        cols
    }

    /// Row values aligned with [`SweepSpec::columns`]; `None` is NA.
    pub fn cells(&self, row: &SweepRow) -> Vec<Option<f64>> {
        let mut out = vec![Some(row.axis_value)];
        out.extend(self.scheme_cells(row));
        if self.limits {
            let l = row.limits.unwrap_or_default();
            out.extend([l.ub, l.qci, l.mmse]);
        }
        if self.mc_samples > 0 {
            out.push(row.mc_ub);
        }
        out
    }

    pub fn scheme_cells(&self, row: &SweepRow) -> Vec<Option<f64>> {
        let mut out = Vec::new();
        for s in &self.schemes {
            match s {
                Scheme::Ub => out.push(row.r_ub),
                Scheme::Qci => out.extend(row.r_qci.iter().copied()),
                Scheme::Mmse => out.push(row.r_mmse),
            }
        }
        out
    }
}

/// Large-budget limits at one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RowLimits {
    /// Ergodic capacity.
    pub ub: Option<f64>,
    /// Undefined when `K > M`.
    pub qci: Option<f64>,
    /// Undefined when `K > M`.
    pub mmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub r_ub: Option<f64>,
    /// One entry per `SweepSpec::qci_bits`; `None` when infeasible.
    pub r_qci: Vec<Option<f64>>,
    pub r_mmse: Option<f64>,
    pub limits: Option<RowLimits>,
    pub mc_ub: Option<f64>,
}

fn qci_cell(cfg: &ChannelConfig, bits: u32, density: Option<&NoiseLevelDensity>) -> ibrelay_core::Result<Option<f64>> {
    let Some(density) = density else { return Ok(None) };
    match qci_quantile_rate(cfg, 1usize << bits, density) {
        Ok(r) => Ok(Some(r)),
        Err(CoreError::InfeasibleBudget { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn evaluate(spec: &SweepSpec, value: f64) -> ibrelay_core::Result<SweepRow> {
    let cfg = spec.axis.apply(&spec.fixed, value)?;
    // The noise-level density only exists with K <= M.
    let density = match NoiseLevelDensity::for_config(&cfg, DofConvention::default()) {
        Ok(d) => Some(d),
        Err(CoreError::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };

    let r_ub = if spec.has(Scheme::Ub) { Some(upper_bound(&cfg)?) } else { None };
    let r_qci = if spec.has(Scheme::Qci) {
        spec.qci_bits.iter().map(|&b| qci_cell(&cfg, b, density.as_ref())).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let r_mmse = if spec.has(Scheme::Mmse) {
        match mmse_rate(&cfg) {
            Ok(r) => Some(r.bits),
            Err(CoreError::DegenerateBudget) => Some(0.0),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let limits = if spec.limits {
        Some(RowLimits {
            ub: Some(capacity(&cfg)?),
            qci: density.as_ref().map(|d| qci_limit_rate(&cfg, d)).transpose()?.map(|l| l.large_c),
            mmse: mmse_limits(&cfg)?.large_c,
        })
    } else {
        None
    };
    let mc_ub = if spec.mc_samples > 0 {
        Some(empirical_upper_bound(&cfg, spec.mc_samples, spec.seed)?.rate.mean())
    } else {
        None
    };
    Ok(SweepRow { axis_value: value, r_ub, r_qci, r_mmse, limits, mc_ub })
}

/// Evaluates every grid point, in parallel; rows come back in axis order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    spec.axis_values
        .par_iter()
        .map(|&v| evaluate(spec, v).map_err(|source| SweepError::Point { axis: spec.axis, value: v, source }))
        .collect()
}

/// All bounds and limits at one configuration, as a one-row sweep.
pub fn point_spec(cfg: ChannelConfig, qci_bits: Vec<u32>, mc_samples: usize, seed: u64) -> SweepSpec {
    SweepSpec {
        axis: Axis::CapacityBits,
        axis_values: vec![cfg.capacity_bits],
        fixed: cfg,
        schemes: Scheme::ALL.to_vec(),
        qci_bits,
        mc_samples,
        seed,
        limits: true,
    }
}
