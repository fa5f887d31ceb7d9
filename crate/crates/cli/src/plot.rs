//! Standalone SVG line plots of logged columns against `t`.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 180.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const PANEL_GAP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Columns read from a log: `t` plus each requested series.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub t: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl Columns {
    fn get(&self, name: &str) -> &[f64] {
        &self.series.iter().find(|(n, _)| n == name).expect("requested column").1
    }
}

/// Splits `["psi", "x_x+x_d_x"]` into panels of overlaid columns.
pub fn parse_panels(columns: &[String]) -> Result<Vec<Vec<String>>, CliError> {
    let panels: Vec<Vec<String>> = columns
        .iter()
        .map(|p| p.split('+').map(|c| c.trim().to_string()).collect())
        .collect();
    if panels.is_empty() || panels.iter().flatten().any(|c| c.is_empty()) {
        return Err(CliError::Usage(
            "--columns: expected a comma-separated list of column names".into(),
        ));
    }
    Ok(panels)
}

pub fn read_columns(path: &Path, panels: &[Vec<String>]) -> Result<Columns, CliError> {
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(bad("empty CSV".into()));
    }
    let index = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column named `{name}`")))
    };
    let t_col = index("t")?;
    let mut wanted: Vec<(String, usize)> = Vec::new();
    for name in panels.iter().flatten() {
        if !wanted.iter().any(|(n, _)| n == name) {
            wanted.push((name.clone(), index(name)?));
        }
    }

    let mut cols = Columns {
        t: Vec::new(),
        series: wanted.iter().map(|(n, _)| (n.clone(), Vec::new())).collect(),
    };
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize, name: &str| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: `{name}` is not numeric", row + 2)))
        };
        cols.t.push(num(t_col, "t")?);
        for ((name, i), (_, values)) in wanted.iter().zip(cols.series.iter_mut()) {
            values.push(num(*i, name)?);
        }
    }
    if cols.t.is_empty() {
        return Err(bad("CSV has no data rows".into()));
    }
    Ok(cols)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-9);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Roughly five round-numbered ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{:.4e}", v);
    let parsed: f64 = s.parse().unwrap_or(v);
    if parsed != 0.0 && (parsed.abs() >= 1e5 || parsed.abs() < 1e-3) {
        format!("{parsed:e}")
    } else {
        format!("{parsed}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Keeps the first, lowest, highest and last sample of every pixel column,
/// in time order, so the drawn envelope matches the full series.
fn decimate(t: &[f64], v: &[f64], px: &dyn Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut bucket: Vec<usize> = Vec::new();
    let flush = |bucket: &mut Vec<usize>, out: &mut Vec<(f64, f64)>| {
        if bucket.is_empty() {
            return;
        }
        let lo = *bucket
            .iter()
            .min_by(|a, b| v[**a].total_cmp(&v[**b]))
            .expect("non-empty");
        let hi = *bucket
            .iter()
            .max_by(|a, b| v[**a].total_cmp(&v[**b]))
            .expect("non-empty");
        let mut keep = vec![bucket[0], lo, hi, bucket[bucket.len() - 1]];
        keep.sort_unstable();
        keep.dedup();
        out.extend(keep.into_iter().map(|i| (t[i], v[i])));
        bucket.clear();
    };
    let mut column = None;
    for (i, (ti, vi)) in t.iter().zip(v).enumerate() {
        if !vi.is_finite() {
            continue;
        }
        let c = px(*ti).floor() as i64;
        if column != Some(c) {
            flush(&mut bucket, &mut out);
            column = Some(c);
        }
        bucket.push(i);
    }
    flush(&mut bucket, &mut out);
    out
}

/// Renders stacked panels sharing the time axis.
pub fn render(data: &Columns, panels: &[Vec<String>]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let height = MARGIN_TOP + panels.len() as f64 * (PANEL_HEIGHT + PANEL_GAP) - PANEL_GAP + MARGIN_BOTTOM;
    let (t0, t1) = range(data.t.iter().copied());
    let px = |t: f64| MARGIN_LEFT + (t - t0) / (t1 - t0) * plot_w;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (p, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + p as f64 * (PANEL_HEIGHT + PANEL_GAP);
        let bottom = top + PANEL_HEIGHT;
        let (y0, y1) = range(panel.iter().flat_map(|c| data.get(c).iter().copied()));
        let py = |v: f64| bottom - (v - y0) / (y1 - y0) * PANEL_HEIGHT;

        let _ = writeln!(s, r#"<g class="panel">"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="black"/>"#
        );
        for v in ticks(y0, y1) {
            let y = py(v);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                MARGIN_LEFT - 4.0,
                MARGIN_LEFT - 6.0,
                y + 4.0,
                label(v)
            );
        }
        for v in ticks(t0, t1) {
            let x = px(v);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                bottom + 4.0,
                bottom + 16.0,
                label(v)
            );
        }

        for (i, name) in panel.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let points: Vec<String> = decimate(&data.t, data.get(name), &px)
                .into_iter()
                .map(|(t, v)| format!("{:.2},{:.2}", px(t), py(v)))
                .collect();
            let points = points.join(" ");
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{points}"/>"#
            );
            let ly = top + 14.0 + 14.0 * i as f64;
            let lx = MARGIN_LEFT + plot_w - 120.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 20.0,
                ly - 4.0,
                lx + 25.0,
                escape(name)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t [s]</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        height - 6.0
    );
    s.push_str("</svg>\n");
    s
}
