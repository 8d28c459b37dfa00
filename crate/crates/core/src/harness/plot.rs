//! Learning-curve plots rendered as standalone SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::metrics::smooth;
use crate::harness::runner::CSV_HEADER;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 44.0;
const MAX_POINTS: usize = 400;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Per-episode returns of one `(agent, user, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub agent: String,
    pub user: String,
    pub seed: u64,
    pub returns: Vec<f64>,
}

/// Parses an episodes CSV. Rows are grouped by `(agent, user, seed)` in order
/// of first appearance; episodes inside a group must be 1, 2, 3, ...
pub fn parse_csv(text: &str) -> Result<Vec<Curve>> {
    if text.trim().is_empty() {
        return Err(Error::Parse { line: 1, message: "empty CSV".into() });
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_error(e, 1))?;
    if header.iter().ne(CSV_HEADER.split(',')) {
        return Err(Error::Parse { line: 1, message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut curves: Vec<Curve> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| Error::Parse { line: line_no, message };
        let field = |i: usize| record.get(i).unwrap_or_default();
        let episode: usize = field(0).parse().map_err(|_| err(format!("bad episode {:?}", field(0))))?;
        let seed: u64 = field(3).parse().map_err(|_| err(format!("bad seed {:?}", field(3))))?;
        let ret: f64 = field(4).parse().map_err(|_| err(format!("bad return {:?}", field(4))))?;
        if !ret.is_finite() {
            return Err(err(format!("non-finite return {:?}", field(4))));
        }
        let (agent, user) = (field(1), field(2));
        let pos = curves
            .iter()
            .position(|c| c.agent == agent && c.user == user && c.seed == seed);
        let curve = match pos {
            Some(p) => &mut curves[p],
            None => {
                curves.push(Curve { agent: agent.into(), user: user.into(), seed, returns: Vec::new() });
                curves.last_mut().expect("just pushed")
            }
        };
        if episode != curve.returns.len() + 1 {
            return Err(err(format!("episode {episode} out of sequence (expected {})", curve.returns.len() + 1)));
        }
        curve.returns.push(ret);
    }
    if curves.is_empty() {
        return Err(Error::Parse { line: 2, message: "CSV has no data rows".into() });
    }
    Ok(curves)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    Error::Parse { line, message }
}

/// Log-spaced 0-based indices into a curve of length `len`, always including
/// the first and last episode.
pub fn sample_indices(len: usize) -> Vec<usize> {
    if len <= MAX_POINTS {
        return (0..len).collect();
    }
    let log_max = (len as f64).ln();
    let mut out: Vec<usize> = (0..MAX_POINTS)
        .map(|i| {
            let t = i as f64 / (MAX_POINTS - 1) as f64;
            ((t * log_max).exp().round() as usize).clamp(1, len) - 1
        })
        .collect();
    out.dedup();
    out
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn episode_label(e: u64) -> String {
    match e {
        e if e >= 1_000_000 && e % 1_000_000 == 0 => format!("{}M", e / 1_000_000),
        e if e >= 1_000 && e % 1_000 == 0 => format!("{}K", e / 1_000),
        e => e.to_string(),
    }
}

/// Renders one panel per user and one polyline per curve. The x axis is the
/// episode number on a log scale; the y axis is the trailing moving average of
/// the return over `window` episodes.
pub fn render_svg(curves: &[Curve], window: usize) -> String {
    let mut users: Vec<&str> = Vec::new();
    let mut agents: Vec<&str> = Vec::new();
    for c in curves {
        if !users.contains(&c.user.as_str()) {
            users.push(&c.user);
        }
        if !agents.contains(&c.agent.as_str()) {
            agents.push(&c.agent);
        }
    }
    let width = PANEL_W * users.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = fmt_num(width),
        h = fmt_num(PANEL_H)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (pi, user) in users.iter().enumerate() {
        let ox = pi as f64 * PANEL_W;
        let panel: Vec<(&Curve, Vec<(usize, f64)>)> = curves
            .iter()
            .filter(|c| c.user == *user)
            .map(|c| {
                let smoothed = smooth(&c.returns, window);
                let pts = sample_indices(smoothed.len()).into_iter().map(|i| (i + 1, smoothed[i])).collect();
                (c, pts)
            })
            .collect();
        let max_ep = panel.iter().map(|(c, _)| c.returns.len()).max().unwrap_or(1).max(2);
        let (mut lo, mut hi) = panel
            .iter()
            .flat_map(|(_, p)| p.iter().map(|&(_, v)| v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi - lo < 1e-9 {
            lo -= 1.0;
            hi += 1.0;
        }
        let pad = 0.05 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let x0 = ox + MARGIN_L;
        let x1 = ox + PANEL_W - MARGIN_R;
        let y0 = PANEL_H - MARGIN_B;
        let y1 = MARGIN_T;
        let log_max = (max_ep as f64).log10();
        let sx = |e: usize| x0 + (e as f64).log10() / log_max * (x1 - x0);
        let sy = |v: f64| y0 - (v - lo) / (hi - lo) * (y0 - y1);

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            fmt_num((x0 + x1) / 2.0),
            fmt_num(MARGIN_T - 12.0),
            escape(user)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            fmt_num(x0),
            fmt_num(y1),
            fmt_num(x1 - x0),
            fmt_num(y0 - y1)
        );
        let mut decade = 1u64;
        while decade as f64 <= max_ep as f64 {
            let x = sx(decade as usize);
            let _ = writeln!(
                svg,
                r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#dddddd"/><text x="{x}" y="{ty}" text-anchor="middle">{label}</text>"##,
                x = fmt_num(x),
                y0 = fmt_num(y0),
                y1 = fmt_num(y1),
                ty = fmt_num(y0 + 14.0),
                label = episode_label(decade)
            );
            decade *= 10;
        }
        for t in 0..=4 {
            let v = lo + (hi - lo) * t as f64 / 4.0;
            let y = sy(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#eeeeee"/><text x="{tx}" y="{ty}" text-anchor="end">{label}</text>"##,
                x0 = fmt_num(x0),
                x1 = fmt_num(x1),
                y = fmt_num(y),
                tx = fmt_num(x0 - 4.0),
                ty = fmt_num(y + 4.0),
                label = fmt_num(v)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">episode</text>"#,
            fmt_num((x0 + x1) / 2.0),
            fmt_num(PANEL_H - 8.0)
        );
        for (c, pts) in &panel {
            let color = PALETTE[agents.iter().position(|a| *a == c.agent).unwrap_or(0) % PALETTE.len()];
            let path: Vec<String> = pts.iter().map(|&(e, v)| format!("{},{}", fmt_num(sx(e)), fmt_num(sy(v)))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"><title>{} seed {}</title></polyline>"#,
                path.join(" "),
                escape(&c.agent),
                c.seed
            );
        }
        for (ai, agent) in agents.iter().enumerate() {
            if !panel.iter().any(|(c, _)| c.agent == *agent) {
                continue;
            }
            let y = y1 + 14.0 + 14.0 * ai as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
                fmt_num(x1 - 24.0),
                fmt_num(x1 - 8.0),
                PALETTE[ai % PALETTE.len()],
                fmt_num(x1 - 28.0),
                fmt_num(y + 4.0),
                escape(agent),
                y = fmt_num(y)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Reads `csv`, renders it and writes the SVG to `out`. Nothing is written if
/// parsing fails.
pub fn plot_file(csv: &Path, out: &Path, window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::Config("smoothing window must be at least 1".into()));
    }
    let text = fs::read_to_string(csv)?;
    let curves = parse_csv(&text)?;
    fs::write(out, render_svg(&curves, window))?;
    Ok(())
}
