//! Minimal SVG line charts read straight from result CSVs. Output is a pure
//! function of the input table, so charts diff cleanly between runs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x_column: String,
    pub columns: Vec<String>,
    pub log_y: bool,
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders the named columns of a table against `x_column`. Non-numeric
/// cells, and non-positive values on a log axis, are skipped.
pub fn render_chart(headers: &[String], rows: &[Vec<String>], spec: &ChartSpec) -> Result<String, CliError> {
    let find = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| CliError::MissingColumn(name.into()));
    let xi = find(&spec.x_column)?;
    let cols = spec.columns.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    let series: Vec<Series> = cols
        .iter()
        .zip(&spec.columns)
        .map(|(&ci, name)| {
            let points = rows
                .iter()
                .filter_map(|r| {
                    let x: f64 = r.get(xi)?.trim().parse().ok()?;
                    let y: f64 = r.get(ci)?.trim().parse().ok()?;
                    let ok = x.is_finite() && y.is_finite() && (!spec.log_y || y > 0.0);
                    ok.then(|| (x, if spec.log_y { y.log10() } else { y }))
                })
                .collect();
            Series { name: name.clone(), points }
        })
        .collect();

    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if spec.log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
        if y1 - y0 < 1.0 {
            y1 = y0 + 1.0;
        }
    } else if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="18" font-size="13" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, escape(&spec.title));
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );

    // x ticks
    let step = nice_step(x1 - x0, 6);
    let mut t = (x0 / step).ceil() * step;
    while t <= x1 + 1e-9 * step {
        let px = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 4.0,
            TOP + ph + 16.0,
            fmt_tick(t)
        );
        t += step;
    }
    // y ticks
    let ticks: Vec<f64> = if spec.log_y {
        let stride = (((y1 - y0) / 8.0).ceil() as i64).max(1);
        (y0 as i64..=y1 as i64).step_by(stride as usize).map(|e| e as f64).collect()
    } else {
        let step = nice_step(y1 - y0, 6);
        let mut v = Vec::new();
        let mut t = (y0 / step).ceil() * step;
        while t <= y1 + 1e-9 * step {
            v.push(t);
            t += step;
        }
        v
    };
    for t in ticks {
        let py = sy(t);
        let label = if spec.log_y { format!("1e{}", t as i64) } else { fmt_tick(t) };
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x_column)
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        match s.points.len() {
            0 => {}
            1 => {
                let (x, y) = s.points[0];
                let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, sx(x), sy(y));
            }
            _ => {
                let mut d = String::new();
                for (j, &(x, y)) in s.points.iter().enumerate() {
                    let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, sx(x), sy(y));
                }
                let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
            }
        }
        let ly = TOP + 14.0 * i as f64 + 6.0;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 16.0,
            lx + 20.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io { path: path.display().to_string(), message: e.to_string() },
        _ => CliError::from(e),
    })?;
    let headers = rdr.headers()?.iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
    Ok((headers, rows))
}

/// Reads a CSV and writes its chart as SVG.
pub fn emit_chart(csv_path: &Path, spec: &ChartSpec, out: &Path) -> Result<(), CliError> {
    let (headers, rows) = read_table(csv_path)?;
    let svg = render_chart(&headers, &rows, spec)?;
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))
}
