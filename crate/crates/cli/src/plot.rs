//! Small deterministic SVG charts. Every number is written with fixed
//! precision, so the same input always yields the same bytes.

use std::fmt::Write;

use anyhow::{bail, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
/// Series with at most this many points get a marker per point.
const MARKER_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Overlay,
    Heatmap,
    Profile,
}

pub struct Figure<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

impl<'a> Series<'a> {
    pub fn indexed(label: &'a str, start: f64, values: &[f64]) -> Self {
        Self {
            label,
            points: values
                .iter()
                .enumerate()
                .map(|(i, v)| (start + i as f64, *v))
                .collect(),
        }
    }
}

pub enum PlotData<'a> {
    Series(&'a [Series<'a>]),
    /// Rows top to bottom; NaN cells are drawn empty.
    Matrix {
        values: &'a [Vec<f64>],
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    },
}

pub fn emit_plot(kind: PlotKind, fig: &Figure, data: PlotData) -> Result<String> {
    match (kind, data) {
        (PlotKind::Line | PlotKind::Overlay, PlotData::Series(s)) => xy_chart(fig, s, false),
        (PlotKind::Profile, PlotData::Series(s)) => xy_chart(fig, s, true),
        (
            PlotKind::Heatmap,
            PlotData::Matrix {
                values,
                row_labels,
                col_labels,
            },
        ) => heatmap(fig, values, &row_labels, &col_labels),
        (kind, _) => bail!("{kind:?} plot given the wrong kind of data"),
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, fig: &Figure) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{}</text>
"#,
        WIDTH / 2.0,
        esc(fig.title)
    );
}

fn axis_labels(out: &mut String, fig: &Figure) {
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 20.0,
        esc(fig.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        esc(fig.y_label)
    );
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e6).contains(&a) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn xy_chart(fig: &Figure, series: &[Series], bars: bool) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        bail!("cannot plot `{}`: no data", fig.title);
    }
    let transform = |y: f64| if fig.log_y { y.log10() } else { y };
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| transform(p.1)))
        .chain(bars.then_some(0.0));
    let Some((y_lo, y_hi)) = range(ys) else {
        bail!("cannot plot `{}`: no finite values", fig.title);
    };
    let (x_lo, x_hi) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)))
        .expect("finite x present when y is");
    let (x_lo, x_hi) = if bars { (x_lo - 0.5, x_hi + 0.5) } else { (x_lo, x_hi) };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    header(&mut out, fig);
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    for t in ticks(x_lo, x_hi) {
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{b2:.2}" stroke="#444"/><text x="{x:.2}" y="{ty:.2}" text-anchor="middle">{}</text>"##,
            tick_label(t),
            x = sx(t),
            b = TOP + plot_h,
            b2 = TOP + plot_h + 5.0,
            ty = TOP + plot_h + 20.0,
        );
    }
    for t in ticks(y_lo, y_hi) {
        let label = if fig.log_y {
            format!("1e{}", tick_label(t))
        } else {
            tick_label(t)
        };
        let _ = writeln!(
            out,
            r##"<line x1="{l2:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#444"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{label}</text>"##,
            y = sy(t),
            l2 = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = sy(t) + 4.0,
        );
    }
    axis_labels(&mut out, fig);

    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && transform(p.1).is_finite())
            .map(|p| (sx(p.0), sy(transform(p.1))))
            .collect();
        if bars {
            let w = (plot_w / (x_hi - x_lo) * 0.8).max(1.0);
            let base = sy(0.0f64.clamp(y_lo, y_hi));
            for (x, y) in &pts {
                let _ = writeln!(
                    out,
                    r#"<rect class="bar" x="{:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{colour}"/>"#,
                    x - w / 2.0,
                    y.min(base),
                    (y - base).abs()
                );
            }
        } else {
            if pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
                    path.join(" ")
                );
            }
            if pts.len() <= MARKER_LIMIT {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{colour}"/>"#
                    );
                }
            }
        }
        if series.len() > 1 {
            let ly = TOP + 15.0 + 16.0 * k as f64;
            let lx = WIDTH - RIGHT - 160.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                esc(s.label)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn heatmap(fig: &Figure, values: &[Vec<f64>], rows: &[String], cols: &[String]) -> Result<String> {
    let n_rows = values.len();
    let n_cols = values.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        bail!("cannot plot `{}`: empty matrix", fig.title);
    }
    if values.iter().any(|r| r.len() != n_cols) || rows.len() != n_rows || cols.len() != n_cols {
        bail!("cannot plot `{}`: ragged matrix or labels", fig.title);
    }
    let (lo, hi) = range(values.iter().flatten().copied()).unwrap_or((0.0, 1.0));
    let plot_w = WIDTH - LEFT - RIGHT - 80.0;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let cw = plot_w / n_cols as f64;
    let ch = plot_h / n_rows as f64;

    let mut out = String::new();
    header(&mut out, fig);
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                shade((v - lo) / (hi - lo))
            } else {
                "#ffffff".to_string()
            };
            let _ = writeln!(
                out,
                r##"<rect class="cell" x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}" stroke="#fff"><title>{} {}: {}</title></rect>"##,
                LEFT + j as f64 * cw,
                TOP + i as f64 * ch,
                esc(&rows[i]),
                esc(&cols[j]),
                if v.is_finite() { format!("{v:.4}") } else { "failed".into() }
            );
        }
    }
    for (j, c) in cols.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (j as f64 + 0.5) * cw,
            TOP + plot_h + 18.0,
            esc(c)
        );
    }
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            TOP + (i as f64 + 0.5) * ch + 4.0,
            esc(r)
        );
    }
    let bar_x = LEFT + plot_w + 20.0;
    for k in 0..10 {
        let _ = writeln!(
            out,
            r#"<rect x="{bar_x:.1}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            TOP + plot_h * k as f64 / 10.0,
            plot_h / 10.0,
            shade(1.0 - (k as f64 + 0.5) / 10.0)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}">{}</text><text x="{:.1}" y="{:.1}">{}</text>"#,
        bar_x + 24.0,
        TOP + 10.0,
        tick_label(hi),
        bar_x + 24.0,
        TOP + plot_h,
        tick_label(lo)
    );
    axis_labels(&mut out, fig);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Dark (low) to light (high) blue.
fn shade(u: f64) -> String {
    let u = if u.is_finite() { u.clamp(0.0, 1.0) } else { 0.5 };
    let lerp = |a: f64, b: f64| (a + (b - a) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(8.0, 222.0), lerp(48.0, 235.0), lerp(107.0, 247.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> Figure<'static> {
        Figure {
            title: "t",
            x_label: "day index t (days)",
            y_label: "passengers",
            log_y: false,
        }
    }

    #[test]
    fn single_point_has_one_marker() {
        let s = [Series::indexed("x", 1.0, &[5.0])];
        let svg = emit_plot(PlotKind::Line, &fig(), PlotData::Series(&s)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("class=\"marker\"").count(), 1);
        assert!(svg.contains("passengers") && svg.contains("day index t (days)"));
    }

    #[test]
    fn heatmap_cells() {
        let m: Vec<Vec<f64>> = (0..10).map(|i| (0..10).map(|j| (i * j) as f64).collect()).collect();
        let labels: Vec<String> = (1..=10).map(|i| i.to_string()).collect();
        let svg = emit_plot(
            PlotKind::Heatmap,
            &fig(),
            PlotData::Matrix {
                values: &m,
                row_labels: labels.clone(),
                col_labels: labels,
            },
        )
        .unwrap();
        assert_eq!(svg.matches("class=\"cell\"").count(), 100);
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let s = [Series::indexed("x", 1.0, &[1.0, 3.0, 2.0])];
        let a = emit_plot(PlotKind::Overlay, &fig(), PlotData::Series(&s)).unwrap();
        let b = emit_plot(PlotKind::Overlay, &fig(), PlotData::Series(&s)).unwrap();
        assert_eq!(a, b);
        let empty: [Series; 0] = [];
        assert!(emit_plot(PlotKind::Line, &fig(), PlotData::Series(&empty)).is_err());
        let m: Vec<Vec<f64>> = Vec::new();
        assert!(emit_plot(
            PlotKind::Heatmap,
            &fig(),
            PlotData::Matrix {
                values: &m,
                row_labels: vec![],
                col_labels: vec![]
            }
        )
        .is_err());
    }

    #[test]
    fn tick_values_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(250_000.0), "250000");
        assert_eq!(tick_label(0.25), "0.25");
    }
}
