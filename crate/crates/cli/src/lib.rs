//! Parameter sweeps over the relay bounds, with CSV and SVG output.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{parse_config, ConfigError, ConfigMap, SweepOverrides};
pub use output::{emit_csv, emit_svg, to_csv, to_svg, OutputError, SvgStyle};
pub use sweep::{axis_range, point_spec, run_sweep, Axis, Preset, RowLimits, Scheme, SweepError, SweepRow, SweepSpec};
