//! Report emission: JSON document, CSV radial profiles, SVG log-log decay plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use extlab_core::grid::write_scalar;
use serde::Deserialize;

use crate::run::{DecayTable, ProfileRow, Report, RunOutput};
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const PROFILE_FILE: &str = "profiles.csv";
pub const PLOT_FILE: &str = "decay.svg";
pub const FIELD_FILE: &str = "u.field";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn profiles_csv(rows: &[ProfileRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["radius", "u_mean", "hessian_deviation", "expansion_residual", "k_max"]).expect("in-memory write");
    for r in rows {
        w.write_record(
            [r.radius, r.u_mean, r.hessian_deviation, r.expansion_residual, r.k_max].iter().map(|v| format!("{v:e}")),
        )
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Log-log plot of every decay table with its fitted slope in the legend.
pub fn decay_svg(tables: &[DecayTable]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = tables.iter().flat_map(|t| t.samples.iter().copied()).collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no decay samples</text>"#, w / 2.0, h / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min).floor();
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        }
    };
    let (x0, x1) = span(&lx);
    let (y0, y1) = span(&ly);
    let sx = |v: f64| m + (v.log10() - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |v: f64| h - m - (v.log10() - y0) / (y1 - y0) * (h - 2.0 * m);
    let _ = writeln!(
        svg,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    for k in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(k));
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">1e{k}</text>"#,
            h - m + 16.0
        );
    }
    for k in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(k));
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{y:.1}" font-size="11" text-anchor="end">1e{k}</text>"#, m - 6.0);
    }
    let _ =
        writeln!(svg, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">radius</text>"#, w / 2.0, h - 12.0);
    for (n, t) in tables.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let path: Vec<String> = t.samples.iter().map(|&(r, v)| format!("{:.2},{:.2}", sx(r), sy(v))).collect();
        if path.len() > 1 {
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        }
        for &(r, v) in &t.samples {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(r), sy(v));
        }
        let label = match t.exponent {
            Some(p) => format!("{} (p = {p:.3})", t.name),
            None => format!("{} (degenerate)", t.name),
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">{label}</text>"#,
            m + 8.0,
            m + 14.0 * (n as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the requested artifacts into `dir`; the JSON document and the field are always written.
pub fn write_run(dir: &Path, out: &RunOutput, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    let put = |name: &str, text: String, written: &mut Vec<PathBuf>| -> Result<(), CliError> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| io_err(&p, e))?;
        written.push(p);
        Ok(())
    };
    put(REPORT_FILE, to_json(&out.report), &mut written)?;
    let fp = dir.join(FIELD_FILE);
    let file = fs::File::create(&fp).map_err(|e| io_err(&fp, e))?;
    write_scalar(std::io::BufWriter::new(file), &out.field).map_err(|e| io_err(&fp, e))?;
    written.push(fp);
    if formats.contains(&Format::Csv) {
        put(PROFILE_FILE, profiles_csv(&out.report.profiles), &mut written)?;
    }
    if formats.contains(&Format::Svg) {
        put(PLOT_FILE, decay_svg(&out.report.decay_tables), &mut written)?;
    }
    Ok(written)
}

/// The parts of a stored report needed to re-render tables and plots.
#[derive(Deserialize)]
pub struct StoredReport {
    pub scenario: serde_json::Value,
    pub profiles: Vec<ProfileRow>,
    pub decay_tables: Vec<DecayTable>,
    pub assertions: Vec<crate::run::AssertionOutcome>,
    pub passed: bool,
}

pub fn load_report(dir: &Path) -> Result<(String, StoredReport), CliError> {
    let p = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
    let r = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    Ok((text, r))
}

/// Assertion table, one line per assertion.
pub fn assertion_table(name: &str, assertions: &[crate::run::AssertionOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {name}");
    for a in assertions {
        let _ = writeln!(
            s,
            "  [{}] {:<18} measured {:?} expected {:?} tol {:e} ({})",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.measured,
            a.expected,
            a.tolerance,
            a.context
        );
    }
    s
}
