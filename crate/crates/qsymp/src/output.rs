//! Deterministic result emission: CSV tables (17 significant digits),
//! run manifests with config digests, machine-readable error records, and
//! small self-contained SVG plots.
//!
//! Determinism contract: a CSV's bytes are a pure function of the rows it
//! is given — fixed float formatting, fixed column order, `\n` line
//! endings — so identical (config, seed) runs produce identical digests.
//! Manifests carry wall-clock time and are exempt from that contract.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::QsympError;

/// Fixed float format: 17 significant digits, scientific.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => {
                debug_assert!(!s.contains([',', '\n', '"']), "cell needs no quoting: {s}");
                s.clone()
            }
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_csv())
    }
}

/// Hex SHA-256 of arbitrary bytes (config digests, CSV digests).
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Everything recorded about a completed run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub threads: Option<usize>,
    pub parallel: bool,
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), QsympError> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }
}

/// Machine-readable failure record written next to partial outputs.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub error: String,
    pub exit_code: i32,
}

pub fn write_error_record(dir: &Path, err: &QsympError) -> io::Result<()> {
    let record = ErrorRecord {
        error: err.to_string(),
        exit_code: err.exit_code(),
    };
    let mut json = serde_json::to_string_pretty(&record).unwrap_or_else(|_| "{}".to_string());
    json.push('\n');
    fs::write(dir.join("error.json"), json)
}

/// A labeled curve for [`svg_plot`].
#[derive(Clone, Debug)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw point markers in addition to the polyline.
    pub markers: bool,
}

const SVG_PALETTE: [&str; 5] = ["#1f6f8b", "#c0392b", "#2e8b57", "#8e44ad", "#b8860b"];

/// Self-contained SVG with axes, tick labels at the data extremes, and one
/// polyline per curve. Intentionally minimal: enough to eyeball a density
/// curve, a traced level set, or a ψ profile without external tooling.
pub fn svg_plot(curves: &[Curve], title: &str) -> String {
    let (width, height, margin) = (800.0, 520.0, 60.0);
    let all_points = curves.iter().flat_map(|c| c.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all_points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if x_hi - x_lo < 1e-300 {
        x_hi = x_lo + 1.0;
    }
    if y_hi - y_lo < 1e-300 {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| margin + (x - x_lo) / (x_hi - x_lo) * (width - 2.0 * margin);
    let sy = |y: f64| height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="28" font-family="monospace" font-size="16" text-anchor="middle">{title}</text>"##,
        width / 2.0
    );
    // Axes.
    let _ = writeln!(
        svg,
        r##"<path d="M {m} {t} L {m} {b} L {r} {b}" stroke="#333333" fill="none"/>"##,
        m = margin,
        t = margin,
        b = height - margin,
        r = width - margin,
    );
    for (value, x, y, anchor) in [
        (x_lo, sx(x_lo), height - margin + 18.0, "middle"),
        (x_hi, sx(x_hi), height - margin + 18.0, "middle"),
        (y_lo, margin - 6.0, sy(y_lo), "end"),
        (y_hi, margin - 6.0, sy(y_hi), "end"),
    ] {
        let _ = writeln!(
            svg,
            r##"<text x="{x:.1}" y="{y:.1}" font-family="monospace" font-size="11" text-anchor="{anchor}">{value:.4}</text>"##
        );
    }
    for (i, curve) in curves.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        if curve.points.len() > 1 {
            let coords: Vec<String> = curve
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
        }
        if curve.markers {
            for &(x, y) in &curve.points {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        }
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{color}">{}</text>"##,
            width - margin - 160.0,
            margin + 16.0 * (i + 1) as f64,
            curve.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Create `dir` (and parents) and return it as an owned path.
pub fn ensure_dir(dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
