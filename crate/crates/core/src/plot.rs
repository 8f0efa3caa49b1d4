//! Static SVG figures from CSV traces.
//!
//! Output depends only on the input data: fixed 640×400 canvas, fixed
//! number formatting, no timestamps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Planar pseudo-orbit (`n, x1, x2`), drawn in asinh coordinates.
    Orbit2d,
    /// `log2` distance against `log2 ε` and, if present, `log2` tail bound.
    Slack,
    /// `log10` width of each feasibility-box coordinate per processed index.
    Boxwidth,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Orbit2d => "orbit2d",
            PlotKind::Slack => "slack",
            PlotKind::Boxwidth => "boxwidth",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orbit2d" => Ok(PlotKind::Orbit2d),
            "slack" => Ok(PlotKind::Slack),
            "boxwidth" => Ok(PlotKind::Boxwidth),
            other => Err(Error::Config(format!(
                "unknown plot kind `{other}` (expected orbit2d, slack or boxwidth)"
            ))),
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn parse(text: &str) -> Result<Table> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("malformed CSV: row {} has non-numeric cell `{c}`", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Config(format!("malformed CSV: row {} has {} cells", i + 1, row.len())));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Config("malformed CSV: no data rows".into()));
        }
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    fn require(&self, name: &str) -> Result<Vec<f64>> {
        self.column(name)
            .ok_or_else(|| Error::Config(format!("malformed CSV: missing column `{name}`")))
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    line: bool,
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            b.0 = b.0.min(x);
            b.1 = b.1.max(x);
            b.2 = b.2.min(y);
            b.3 = b.3.max(y);
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 - b.0 < 1e-12 {
        b.0 -= 0.5;
        b.1 += 0.5;
    }
    if b.3 - b.2 < 1e-12 {
        b.2 -= 0.5;
        b.3 += 0.5;
    }
    b
}

fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (v, x, anchor) in [(x0, PAD, "start"), (x1, W - PAD, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#,
            H - PAD + 14.0,
            num(v)
        );
    }
    for (v, y) in [(y0, H - PAD), (y1, PAD + 10.0)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            PAD - 4.0,
            num(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if ser.line {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        } else {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
            }
        }
        let ly = PAD + 16.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            PAD + 8.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn finite_pairs(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect()
}

/// SVG text for a CSV trace.
pub fn render_svg(kind: PlotKind, csv_text: &str) -> Result<String> {
    let t = Table::parse(csv_text)?;
    match kind {
        PlotKind::Orbit2d => {
            if t.header.len() != 3 {
                return Err(Error::Config("orbit2d needs planar data: columns n, x1, x2".into()));
            }
            let x: Vec<f64> = t.require("x1")?.iter().map(|v| v.asinh()).collect();
            let y: Vec<f64> = t.require("x2")?.iter().map(|v| v.asinh()).collect();
            Ok(render(
                "pseudo-orbit",
                "asinh x1",
                "asinh x2",
                &[Series {
                    label: "x_n".into(),
                    points: finite_pairs(&x, &y),
                    line: false,
                }],
            ))
        }
        PlotKind::Slack => {
            let n = t.require("n")?;
            let mut series = vec![
                Series {
                    label: "log2 d(f^n(y), x_n)".into(),
                    points: finite_pairs(&n, &t.require("log2_distance")?),
                    line: true,
                },
                Series {
                    label: "log2 epsilon(x_n)".into(),
                    points: finite_pairs(&n, &t.require("log2_epsilon")?),
                    line: true,
                },
            ];
            if let Some(tb) = t.column("log2_tail_bound") {
                series.push(Series {
                    label: "log2 tail bound".into(),
                    points: finite_pairs(&n, &tb),
                    line: true,
                });
            }
            Ok(render("shadowing slack", "n", "log2", &series))
        }
        PlotKind::Boxwidth => {
            let step = t.require("step")?;
            let series = t
                .header
                .iter()
                .filter(|h| h.starts_with("width_"))
                .map(|h| {
                    let w: Vec<f64> = t.require(h)?.iter().map(|v| v.log10()).collect();
                    Ok(Series {
                        label: format!("log10 {h}"),
                        points: finite_pairs(&step, &w),
                        line: true,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if series.is_empty() {
                return Err(Error::Config("malformed CSV: no width_ columns".into()));
            }
            Ok(render("feasibility box width", "constraint step (0, 1, -1, 2, -2, ...)", "log10 width", &series))
        }
    }
}

/// Reads `csv_path` and writes `<stem>.<kind>.svg` next to it.
pub fn emit_plot(csv_path: &Path, kind: PlotKind) -> Result<PathBuf> {
    let text = std::fs::read_to_string(csv_path)?;
    let svg = render_svg(kind, &text)?;
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let out = csv_path.with_file_name(format!("{stem}.{}.svg", kind.name()));
    std::fs::write(&out, svg)?;
    Ok(out)
}
