//! CSV tables and SVG line charts of sweep rows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ibrelay_oracle::report::format_sig;

use crate::sweep::{SweepRow, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("no rows to write")]
    Empty,
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), format_sig)
}

pub fn to_csv(spec: &SweepSpec, rows: &[SweepRow]) -> Result<String, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(spec.columns())?;
    for row in rows {
        w.write_record(spec.cells(row).into_iter().map(cell))?;
    }
    let bytes = w.into_inner().map_err(|e| OutputError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write(path: &Path, text: &str) -> Result<(), OutputError> {
    fs::write(path, text).map_err(|source| OutputError::Io { path: path.to_path_buf(), source })
}

pub fn emit_csv(spec: &SweepSpec, rows: &[SweepRow], path: &Path) -> Result<(), OutputError> {
    write(path, &to_csv(spec, rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub title: Option<String>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self { width: 720.0, height: 480.0, title: None }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 52.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Ticks at 1, 2 or 5 times a power of ten covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// One `<g class="series">` per rate column, split into separate polylines
/// at NA cells, with a marker at every finite point.
pub fn to_svg(spec: &SweepSpec, rows: &[SweepRow], style: &SvgStyle) -> Result<String, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let names = spec.scheme_columns();
    let series: Vec<Vec<Option<f64>>> = {
        let per_row: Vec<Vec<Option<f64>>> = rows.iter().map(|r| spec.scheme_cells(r)).collect();
        (0..names.len()).map(|i| per_row.iter().map(|c| c[i].filter(|v| v.is_finite())).collect()).collect()
    };
    let xs: Vec<f64> = rows.iter().map(|r| r.axis_value).collect();

    let (x_lo, x_hi) = padded(xs[0], xs[xs.len() - 1]);
    let y_max = series.iter().flatten().flatten().fold(0.0f64, |a, &b| a.max(b));
    let (y_lo, y_hi) = padded(0.0, y_max * 1.05);

    let (w, h) = (style.width, style.height);
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if let Some(title) = &style.title {
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    }

    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}"/>"#
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    let bottom = MARGIN_TOP + plot_h;
    for t in nice_ticks(x_lo, x_hi, 8) {
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, bottom + 18.0, format_sig(t));
    }
    for t in nice_ticks(y_lo, y_hi, 6) {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 6.0, y + 4.0, format_sig(t));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 12.0,
        spec.axis.name()
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">rate (bits/complex dimension)</text>"#,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, (name, ys)) in names.iter().zip(&series).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-name="{}" stroke="{color}" fill="{color}">"#, escape(name));
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let flush = |seg: &mut Vec<(f64, f64)>, s: &mut String| {
            if seg.len() > 1 {
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            }
            seg.clear();
        };
        for (&x, y) in xs.iter().zip(ys) {
            match y {
                Some(y) => segment.push((px(x), py(*y))),
                None => flush(&mut segment, &mut s),
            }
        }
        flush(&mut segment, &mut s);
        for (&x, y) in xs.iter().zip(ys) {
            if let Some(y) = y {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, px(x), py(*y));
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, name) in names.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = MARGIN_LEFT + plot_w + 16.0;
        let y = MARGIN_TOP + 12.0 + 20.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, x + 24.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 30.0, y + 4.0, escape(name));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn emit_svg(spec: &SweepSpec, rows: &[SweepRow], path: &Path, style: &SvgStyle) -> Result<(), OutputError> {
    write(path, &to_svg(spec, rows, style)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 50.0, 5), vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(nice_ticks(0.0, 1.0, 4), vec![0.0, 0.5, 1.0]);
        assert_eq!(nice_ticks(2.0, 64.0, 8).first(), Some(&10.0));
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn na_cell_is_literal() {
        assert_eq!(cell(None), "NA");
        assert_eq!(cell(Some(26.438123)), "26.4381");
    }
}
