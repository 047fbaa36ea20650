//! Minimal SVG rendering of diagnostic traces.

use std::fmt::Write;

use crate::energy::{DiagnosticsRecord, DiagnosticsSeries, CSV_HEADER};
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 40.0;

struct Trace<'a> {
    label: &'a str,
    color: &'a str,
    values: Vec<f64>,
}

fn finite_range(traces: &[Trace]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in traces.iter().flat_map(|t| t.values.iter()).filter(|v| v.is_finite()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-300_f64.max(1e-12 * hi.abs()) {
        let pad = if hi == 0.0 { 1.0 } else { 0.5 * hi.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn panel(out: &mut String, top: f64, title: &str, times: &[f64], traces: &[Trace]) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="13">{}</text>"#,
        MARGIN_L,
        top - 8.0,
        title
    );
    let (t0, t1) = match (times.first(), times.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (*a, *a + 1.0),
        _ => return,
    };
    let Some((lo, hi)) = finite_range(traces) else {
        return;
    };
    let sx = |t: f64| MARGIN_L + (t - t0) / (t1 - t0) * plot_w;
    let sy = |v: f64| top + PANEL_H - (v - lo) / (hi - lo) * PANEL_H;
    for (v, anchor) in [(hi, top + 4.0), (lo, top + PANEL_H)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.4e}</text>"#,
            MARGIN_L - 4.0,
            anchor,
            v
        );
    }
    for (k, tr) in traces.iter().enumerate() {
        let mut pts = String::new();
        for (t, v) in times.iter().zip(&tr.values) {
            if v.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(*t), sy(*v));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.3" points="{}"/>"#,
            tr.color,
            pts.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{}">{}</text>"#,
            WIDTH - MARGIN_R - 110.0 + 55.0 * k as f64,
            top + 14.0,
            tr.color,
            tr.label
        );
    }
}

/// Three stacked panels: free energy, second moment and log10 of the sup norms.
pub fn traces_svg(series: &DiagnosticsSeries) -> String {
    let recs = &series.records;
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let pick = |f: fn(&DiagnosticsRecord) -> f64| recs.iter().map(f).collect::<Vec<_>>();
    let height = MARGIN_T + 3.0 * PANEL_H + 2.0 * GAP + 40.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(
        &mut out,
        MARGIN_T,
        "free energy F",
        &times,
        &[Trace { label: "F", color: "#1f77b4", values: pick(|r| r.F) }],
    );
    panel(
        &mut out,
        MARGIN_T + PANEL_H + GAP,
        "second moment I",
        &times,
        &[Trace { label: "I", color: "#2ca02c", values: pick(|r| r.I) }],
    );
    panel(
        &mut out,
        MARGIN_T + 2.0 * (PANEL_H + GAP),
        "log10 sup norm",
        &times,
        &[
            Trace { label: "u", color: "#d62728", values: pick(|r| r.linf_u.log10()) },
            Trace { label: "w", color: "#9467bd", values: pick(|r| r.linf_w.log10()) },
        ],
    );
    if let (Some(a), Some(b)) = (times.first(), times.last()) {
        let y = height - 12.0;
        let _ = writeln!(out, r#"<text x="{MARGIN_L}" y="{y}" font-size="11">t = {a:.4e}</text>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" font-size="11" text-anchor="end">t = {b:.4e}</text>"#,
            WIDTH - MARGIN_R
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Reads a diagnostics CSV as written by [`DiagnosticsSeries::to_csv`].
pub fn parse_series_csv(text: &str) -> Result<DiagnosticsSeries> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut series = DiagnosticsSeries::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        if vals.len() != 11 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 11 columns, found {}", vals.len()),
            });
        }
        series.push(DiagnosticsRecord {
            t: vals[0],
            mass_u: vals[1],
            mass_w: vals[2],
            norm_u_m1: vals[3],
            norm_w_m2: vals[4],
            linf_u: vals[5],
            linf_w: vals[6],
            F: vals[7],
            I: vals[8],
            G: vals[9],
            D: vals[10],
        });
    }
    Ok(series)
}
