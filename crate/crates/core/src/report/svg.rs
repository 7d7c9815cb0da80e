//! Static SVG line plots: one `<polyline>` per series on a fixed 800x500
//! canvas, each series scaled to its own range. Output is a pure function
//! of the data, so identical runs give identical bytes.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 640.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 460.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn unit(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Render the series; non-finite points are dropped. With `log_x` the
/// abscissa is plotted as `log10 x` (all `x` must be positive).
pub fn line_plot(title: &str, x_label: &str, series: &[Series], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let finite: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|&(x, y)| (tx(x), y))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect()
        })
        .collect();
    let x_range = range(finite.iter().flatten().map(|p| p.0));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    let _ = writeln!(out, r#"<text x="{LEFT}" y="25" font-size="16">{}</text>"#, escape(title));
    let x_text = if log_x { format!("log10 {x_label}") } else { x_label.to_string() };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="490" font-size="13" text-anchor="middle">{}</text>"#,
        0.5 * (LEFT + RIGHT),
        escape(&x_text)
    );
    if x_range.0.is_finite() {
        let _ = writeln!(out, r#"<text x="{LEFT}" y="478" font-size="11">{:.4}</text>"#, x_range.0);
        let _ = writeln!(
            out,
            r#"<text x="{RIGHT}" y="478" font-size="11" text-anchor="end">{:.4}</text>"#,
            x_range.1
        );
    }
    for (k, (s, pts)) in series.iter().zip(&finite).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let y_range = range(pts.iter().map(|p| p.1));
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let px = LEFT + (RIGHT - LEFT) * unit(x, x_range);
                let py = BOTTOM - (BOTTOM - TOP) * unit(y, y_range);
                format!("{px:.3},{py:.3}")
            })
            .collect();
        let name = escape(&s.name);
        let _ = writeln!(
            out,
            r#"<polyline id="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 16.0 * (k as f64 + 1.0);
        let label = if y_range.0.is_finite() {
            format!("{name} [{:.4e}, {:.4e}]", y_range.0, y_range.1)
        } else {
            format!("{name} (no data)")
        };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{color}">{label}</text>"#,
            RIGHT + 8.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Canvas coordinates of the polyline with the given `id`.
pub fn polyline_points(svg: &str, id: &str) -> Option<Vec<(f64, f64)>> {
    let tag_start = svg.find(&format!(r#"<polyline id="{}""#, escape(id)))?;
    let tag = &svg[tag_start..];
    let tag = &tag[..tag.find("/>")?];
    let body = tag.split(r#"points=""#).nth(1)?.split('"').next()?;
    body.split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',')?;
            Some((x.parse().ok()?, y.parse().ok()?))
        })
        .collect()
}
