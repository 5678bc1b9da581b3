//! `key = value` configuration files and layered sweep settings.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use ibrelay_core::{ChannelConfig, ChannelDims};

use crate::sweep::{axis_range, Axis, Preset, Scheme, SweepError, SweepSpec};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    Value { key: String, message: String },
}

pub type ConfigMap = BTreeMap<String, String>;

/// Keys are case-sensitive; `-` and `_` are interchangeable. `#` starts a
/// comment.
pub fn parse_config(text: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        };
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Duplicate { line: i + 1, key });
        }
    }
    Ok(map)
}

/// Every sweep setting, each optional so that layers can be merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOverrides {
    pub preset: Option<Preset>,
    pub axis: Option<Axis>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub step: Option<f64>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub snr_db: Option<f64>,
    pub capacity_bits: Option<f64>,
    pub schemes: Option<Vec<Scheme>>,
    pub qci_bits: Option<Vec<u32>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub limits: Option<bool>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::Value { key: key.to_string(), message: e.to_string() })
}

pub fn parse_bits_list(s: &str) -> Result<Vec<u32>, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(|p| p.parse().map_err(|e| format!("`{p}`: {e}"))).collect()
}

impl SweepOverrides {
    pub fn from_config(map: &ConfigMap) -> Result<Self, ConfigError> {
        let mut o = Self::default();
        for (key, v) in map {
            match key.as_str() {
                "preset" => o.preset = Some(parse(key, v)?),
                "axis" => o.axis = Some(parse(key, v)?),
                "from" => o.from = Some(parse(key, v)?),
                "to" => o.to = Some(parse(key, v)?),
                "step" => o.step = Some(parse(key, v)?),
                "k" => o.k = Some(parse(key, v)?),
                "m" => o.m = Some(parse(key, v)?),
                "snr_db" => o.snr_db = Some(parse(key, v)?),
                "capacity_bits" => o.capacity_bits = Some(parse(key, v)?),
                "scheme" | "schemes" => {
                    o.schemes = Some(
                        Scheme::parse_list(v).map_err(|message| ConfigError::Value { key: key.clone(), message })?,
                    )
                }
                "qci_bits" => {
                    o.qci_bits =
                        Some(parse_bits_list(v).map_err(|message| ConfigError::Value { key: key.clone(), message })?)
                }
                "samples" => o.samples = Some(parse(key, v)?),
                "seed" => o.seed = Some(parse(key, v)?),
                "limits" => o.limits = Some(parse(key, v)?),
                "out" => o.out = Some(PathBuf::from(v)),
                "svg" => o.svg = Some(PathBuf::from(v)),
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        Ok(o)
    }

    /// Fields set in `top` win.
    pub fn merge(self, top: Self) -> Self {
        Self {
            preset: top.preset.or(self.preset),
            axis: top.axis.or(self.axis),
            from: top.from.or(self.from),
            to: top.to.or(self.to),
            step: top.step.or(self.step),
            k: top.k.or(self.k),
            m: top.m.or(self.m),
            snr_db: top.snr_db.or(self.snr_db),
            capacity_bits: top.capacity_bits.or(self.capacity_bits),
            schemes: top.schemes.or(self.schemes),
            qci_bits: top.qci_bits.or(self.qci_bits),
            samples: top.samples.or(self.samples),
            seed: top.seed.or(self.seed),
            limits: top.limits.or(self.limits),
            out: top.out.or(self.out),
            svg: top.svg.or(self.svg),
        }
    }

    /// Starts from the preset (the snr sweep if none) and applies the rest.
    /// Naming a different axis resets the range to that axis's default.
    pub fn build_spec(&self) -> Result<SweepSpec, SweepError> {
        let mut spec = self.preset.unwrap_or(Preset::Snr).spec();
        let axis = self.axis.unwrap_or(spec.axis);
        let (mut from, mut to, mut step) = axis.default_range();
        if axis == spec.axis {
            from = spec.axis_values[0];
            to = spec.axis_values[spec.axis_values.len() - 1];
            step = if spec.axis_values.len() > 1 { spec.axis_values[1] - spec.axis_values[0] } else { 1.0 };
        }
        spec.axis = axis;
        spec.axis_values = axis_range(self.from.unwrap_or(from), self.to.unwrap_or(to), self.step.unwrap_or(step))?;

        let k = self.k.unwrap_or(spec.fixed.dims.k());
        let m = self.m.unwrap_or(spec.fixed.dims.m());
        let snr_db = self.snr_db.unwrap_or(spec.fixed.snr_db());
        let c = self.capacity_bits.unwrap_or(spec.fixed.capacity_bits);
        let bad = |e: ibrelay_core::Error| SweepError::Invalid(e.to_string());
        let dims = ChannelDims::new(k, m).map_err(bad)?;
        spec.fixed = ChannelConfig::new(dims, 10f64.powf(-snr_db / 10.0), c).map_err(bad)?;

        if let Some(s) = &self.schemes {
            spec.schemes = s.clone();
        }
        if let Some(b) = &self.qci_bits {
            spec.qci_bits = b.clone();
        }
        spec.mc_samples = self.samples.unwrap_or(spec.mc_samples);
        spec.seed = self.seed.unwrap_or(spec.seed);
        spec.limits = self.limits.unwrap_or(spec.limits);
        spec.validate()?;
        Ok(spec)
    }
}
