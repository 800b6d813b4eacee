use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::agents::Scheme;
use crate::error::{Error, Result};

use super::experiment::{ResultRow, Sweep};
use super::io::{fmt_num, read_reward_curve};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Tick step of 1, 2 or 5 times a power of ten giving about five ticks.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Axis range covering `[lo, hi]`, snapped outward to tick multiples.
pub fn axis_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    if !(hi > lo) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        lo -= pad;
        hi += pad;
    }
    let step = tick_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a multi-series line chart as SVG text.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |v: f64| v.is_finite();
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| finite(p.0) && finite(p.1));
    let xmin = pts().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = pts().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = pts().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (xmin, xmax, ymin, ymax) = if xmin.is_finite() {
        (xmin, xmax, ymin, ymax)
    } else {
        (0.0, 1.0, 0.0, 1.0)
    };
    let (x0, x1, xs) = axis_range(xmin, xmax);
    let (y0, y1, ys) = axis_range(ymin, ymax);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );

    let ticks = |lo: f64, hi: f64, step: f64| {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(move |i| lo + i as f64 * step)
    };
    for x in ticks(x0, x1, xs) {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#ddd"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"##,
            px(x),
            TOP,
            TOP + ph,
            TOP + ph + 16.0,
            fmt_num((x / xs).round() * xs)
        );
    }
    for y in ticks(y0, y1, ys) {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#ddd"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"##,
            LEFT,
            py(y),
            LEFT + pw,
            LEFT - 6.0,
            py(y) + 4.0,
            fmt_num((y / ys).round() * ys)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| finite(p.0) && finite(p.1))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        if ser.points.len() <= 50 {
            for p in &path {
                let (x, y) = p.split_once(',').expect("pair");
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Per-scheme mean of `metric` over seeds at each x value.
pub fn scheme_series(
    rows: &[ResultRow],
    sweep: Sweep,
    x: impl Fn(&ResultRow) -> f64,
    metric: impl Fn(&ResultRow) -> f64,
) -> Vec<Series> {
    let mut by_scheme: BTreeMap<Scheme, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.sweep == sweep) {
        let cell = by_scheme
            .entry(r.scheme)
            .or_default()
            .entry(x(r).to_bits())
            .or_insert((0.0, 0));
        cell.0 += metric(r);
        cell.1 += 1;
    }
    by_scheme
        .into_iter()
        .map(|(scheme, cells)| {
            let mut points: Vec<(f64, f64)> = cells
                .into_iter()
                .map(|(bits, (sum, n))| (f64::from_bits(bits), sum / n as f64))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                name: scheme.name().to_string(),
                points,
            }
        })
        .collect()
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::file(path, e))
}

/// Trailing mean over `window` points.
pub fn smooth(points: &[(f64, f64)], window: usize) -> Vec<(f64, f64)> {
    let mut sum = 0.0;
    points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            sum += y;
            if i >= window {
                sum -= points[i - window].1;
            }
            (x, sum / (i + 1).min(window) as f64)
        })
        .collect()
}

/// Seed-averaged reward curves read from `<dir>/<scheme>/<seed>/<file>`.
fn curve_series(dir: &Path, rows: &[ResultRow], file: &str, window: usize) -> Result<Vec<Series>> {
    let mut out = Vec::new();
    let mut schemes: Vec<Scheme> = rows.iter().filter(|r| r.sweep == Sweep::None).map(|r| r.scheme).collect();
    schemes.dedup();
    for scheme in schemes {
        let mut curves = Vec::new();
        for r in rows.iter().filter(|r| r.sweep == Sweep::None && r.scheme == scheme) {
            let path = dir.join(scheme.name()).join(r.seed.to_string()).join(file);
            if path.exists() {
                curves.push(smooth(&read_reward_curve(&path)?, window));
            }
        }
        let Some(len) = curves.iter().map(|c| c.len()).min() else {
            continue;
        };
        let points = (0..len)
            .map(|i| {
                let y = curves.iter().map(|c| c[i].1).sum::<f64>() / curves.len() as f64;
                (curves[0][i].0, y)
            })
            .collect();
        out.push(Series {
            name: scheme.name().to_string(),
            points,
        });
    }
    Ok(out)
}

/// Writes every figure the table has data for into `dir` and returns the
/// written paths.
pub fn emit_plots(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, svg: String| -> Result<()> {
        let path = dir.join(name);
        write_svg(&path, &svg)?;
        written.push(path);
        Ok(())
    };
    let has = |s: Sweep| rows.iter().any(|r| r.sweep == s);

    if has(Sweep::None) {
        let training = curve_series(dir, rows, "training.csv", 100)?;
        if !training.is_empty() {
            emit(
                "fig2a_training_reward.svg",
                line_chart("Training reward", "episode", "mean reward (100-episode average)", &training),
            )?;
        }
        let testing = curve_series(dir, rows, "testing.csv", 1)?;
        if !testing.is_empty() {
            emit(
                "fig2b_testing_reward.svg",
                line_chart("Testing reward", "episode", "mean reward", &testing),
            )?;
        }
    }
    if has(Sweep::TmtcdPerCluster) {
        let s = scheme_series(rows, Sweep::TmtcdPerCluster, |r| r.total_mtcds as f64, |r| r.aggregate_ee);
        emit(
            "fig3_ee_vs_mtcds.svg",
            line_chart("Energy efficiency vs MTCDs", "number of MTCDs", "EE (bit/s/Hz/W)", &s),
        )?;
    }
    if has(Sweep::PMaxDbm) {
        let s = scheme_series(rows, Sweep::PMaxDbm, |r| r.p_max_dbm, |r| r.aggregate_ee);
        emit(
            "fig4_ee_vs_pmax.svg",
            line_chart("Energy efficiency vs maximum power", "maximum transmit power (dBm)", "EE (bit/s/Hz/W)", &s),
        )?;
    }
    if has(Sweep::TolerableLinkCount) {
        let x = |r: &ResultRow| r.tolerable_links as f64;
        let sweep = Sweep::TolerableLinkCount;
        emit(
            "fig5_h2h_satisfaction.svg",
            line_chart(
                "H2H satisfaction vs tolerable links",
                "tolerable M2M links",
                "probability of satisfied H2H links",
                &scheme_series(rows, sweep, x, |r| r.h2h_satisfaction),
            ),
        )?;
        emit(
            "fig6_cmtcd_outage.svg",
            line_chart(
                "Critical-link outage vs tolerable links",
                "tolerable M2M links",
                "outage probability",
                &scheme_series(rows, sweep, x, |r| r.cmtcd_outage),
            ),
        )?;
        emit(
            "fig7_payload_success.svg",
            line_chart(
                "Payload success vs tolerable links",
                "tolerable M2M links",
                "payload delivery probability",
                &scheme_series(rows, sweep, x, |r| r.payload_success),
            ),
        )?;
    }
    Ok(written)
}
