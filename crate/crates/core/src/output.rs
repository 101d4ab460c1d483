//! Result tables: CSV (canonical), JSON, and SVG line plots rendered from
//! the same rows.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::experiments::TrialSummary;

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 14] = [
    "figure",
    "instance",
    "embedding",
    "n",
    "d_or_basis",
    "ell",
    "trials",
    "mean",
    "stderr",
    "median",
    "theory",
    "z",
    "reference",
    "note",
];

/// Ten significant digits in scientific notation; empty for absent values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.9e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn note(row: &TrialSummary) -> String {
    match (&row.error, row.heavy_tail) {
        (Some(e), _) => format!("failed: {e}"),
        (None, true) => "heavy-tail".into(),
        (None, false) => String::new(),
    }
}

/// Write rows as CSV. `figure` fills the first column (empty when `None`).
pub fn write_csv<W: Write>(out: W, figure: Option<u8>, rows: &[TrialSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    let fig = figure.map(|f| f.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            fig.clone(),
            r.instance.clone(),
            r.embedding.name().to_string(),
            r.n.to_string(),
            r.d_or_basis.clone(),
            r.ell.to_string(),
            r.trials.to_string(),
            format_float(r.mean),
            format_float(r.stderr),
            format_float(r.median),
            opt(r.theory),
            opt(r.z_score),
            opt(r.reference),
            note(r),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// CSV as a string.
pub fn csv_string(figure: Option<u8>, rows: &[TrialSummary]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, figure, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Pretty-printed JSON array of rows.
pub fn json_string(rows: &[TrialSummary]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::Io(e.to_string()))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#ff7f0e", "#17becf", "#e377c2"];
const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 340.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;

struct Axes {
    x0: f64,
    y0: f64,
    xmin: f64,
    xmax: f64,
    lmin: f64,
    lmax: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let w = PANEL_W - MARGIN_L - MARGIN_R;
        self.x0 + MARGIN_L + (x - self.xmin) / (self.xmax - self.xmin).max(1e-300) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = PANEL_H - MARGIN_T - MARGIN_B;
        self.y0 + MARGIN_T + (self.lmax - y.log10()) / (self.lmax - self.lmin).max(1e-300) * h
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| span / s <= 8.0).unwrap_or(10.0 * mag)
}

fn polyline(out: &mut String, ax: &Axes, pts: &[(f64, f64)], color: &str, dash: &str, width: f64) {
    let coords: Vec<String> = pts
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|(x, y)| format!("{:.2},{:.2}", ax.px(*x), ax.py(*y)))
        .collect();
    if coords.len() > 1 {
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" stroke-dasharray="{dash}" points="{}"/>"#,
            coords.join(" ")
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained SVG: one panel per instance, mean against `ell` on a
/// logarithmic y axis, one line per embedding, theory curves dashed and the
/// optimal reference dotted.
pub fn svg_string(title: &str, rows: &[TrialSummary]) -> String {
    let mut instances: Vec<&str> = Vec::new();
    for r in rows {
        if !instances.contains(&r.instance.as_str()) {
            instances.push(&r.instance);
        }
    }
    let cols = instances.len().clamp(1, 2);
    let panel_rows = instances.len().div_ceil(2).max(1);
    let width = PANEL_W * cols as f64;
    let height = PANEL_H * panel_rows as f64 + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));

    for (pi, inst) in instances.iter().enumerate() {
        let panel: Vec<&TrialSummary> = rows.iter().filter(|r| r.instance == *inst && !r.failed()).collect();
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let ys: Vec<f64> = panel
            .iter()
            .flat_map(|r| [Some(r.mean), r.theory, r.reference])
            .flatten()
            .filter(|v| positive(*v))
            .collect();
        if ys.is_empty() {
            continue;
        }
        let (ymin, ymax) = ys.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &y| (a.min(y), b.max(y)));
        let lmin = ymin.log10().floor();
        let lmax = ymax.log10().ceil().max(lmin + 1.0);
        let xmax = panel.iter().map(|r| r.ell).max().unwrap_or(1) as f64;
        let ax = Axes {
            x0: PANEL_W * (pi % 2) as f64,
            y0: 30.0 + PANEL_H * (pi / 2) as f64,
            xmin: 0.0,
            xmax,
            lmin,
            lmax,
        };
        let (left, right) = (ax.px(0.0), ax.px(xmax));
        let (top, bottom) = (ax.py(10f64.powf(lmax)), ax.py(10f64.powf(lmin)));
        let _ = writeln!(out, r#"<g>"#);
        let _ = writeln!(
            out,
            r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            right - left,
            bottom - top
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#, (left + right) / 2.0, top - 8.0, escape(inst));
        let mut decade = lmin;
        while decade <= lmax {
            let y = ax.py(10f64.powf(decade));
            let _ = writeln!(out, r##"<line x1="{left:.2}" x2="{right:.2}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/>"##);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#, left - 4.0, y + 4.0, decade as i64);
            decade += 1.0;
        }
        let step = nice_step(xmax);
        let mut x = 0.0;
        while x <= xmax + 1e-9 {
            let px = ax.px(x);
            let _ = writeln!(out, r##"<line x1="{px:.2}" x2="{px:.2}" y1="{bottom:.2}" y2="{:.2}" stroke="#444"/>"##, bottom + 4.0);
            let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#, bottom + 16.0);
            x += step;
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">embedding dimension</text>"#, (left + right) / 2.0, bottom + 32.0);

        let mut kinds = Vec::new();
        for r in &panel {
            if !kinds.contains(&r.embedding) {
                kinds.push(r.embedding);
            }
        }
        let mut theory_curves: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut reference: Vec<(f64, f64)> = Vec::new();
        for (ki, kind) in kinds.iter().enumerate() {
            let series: Vec<&&TrialSummary> = panel.iter().filter(|r| r.embedding == *kind).collect();
            let color = PALETTE[ki % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series.iter().map(|r| (r.ell as f64, r.mean)).collect();
            polyline(&mut out, &ax, &pts, color, "none", 1.5);
            let theory: Vec<(f64, f64)> = series.iter().filter_map(|r| r.theory.map(|t| (r.ell as f64, t))).collect();
            if !theory.is_empty() && !theory_curves.contains(&theory) {
                theory_curves.push(theory);
            }
            if reference.is_empty() {
                reference = series.iter().filter_map(|r| r.reference.map(|t| (r.ell as f64, t))).collect();
            }
            let ly = top + 12.0 + 13.0 * ki as f64;
            let _ = writeln!(out, r#"<line x1="{:.2}" x2="{:.2}" y1="{ly:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, right - 110.0, right - 92.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, right - 88.0, ly + 4.0, kind.name());
        }
        for curve in &theory_curves {
            polyline(&mut out, &ax, curve, "#000", "6 3", 1.0);
        }
        polyline(&mut out, &ax, &reference, "#888", "2 2", 1.0);
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
