//! Self-contained SVG chart of a convergence curve.

use std::fmt::Write as _;

use super::run::ExperimentResult;
use crate::error::{domain, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// TV and bound against `n` on a log-scaled y axis. Zero TV values sit on
/// the floor of the axis; non-finite bounds are left out. A result without
/// any bound gets the TV series only.
pub fn render_svg(result: &ExperimentResult) -> Result<String> {
    if result.rows.is_empty() {
        return domain("cannot plot an empty result");
    }
    let tv: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.point.n as f64, r.point.tv)).collect();
    let bound: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter_map(|r| r.point.bound.as_ref().map(|b| (r.point.n as f64, b.total)))
        .filter(|(_, y)| y.is_finite() && *y > 0.0)
        .collect();

    let positive = tv.iter().chain(&bound).map(|p| p.1).filter(|y| *y > 0.0);
    let (mut lo, mut hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !lo.is_finite() {
        (lo, hi) = (1e-3, 1.0);
    }
    let (dmin, dmax) = ((lo.log10().floor() - if lo == hi { 1.0 } else { 0.0 }), hi.log10().ceil().max(lo.log10().floor() + 1.0));
    let floor = 10f64.powf(dmin);

    let (xmin, xmax) = tv.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (xmin, xmax) = if xmin == xmax { (xmin - 1.0, xmax + 1.0) } else { (xmin, xmax) };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| TOP + (dmax - y.max(floor).log10()) / (dmax - dmin) * plot_h;

    let mut series = vec![Series {
        label: "TV",
        color: "#1f77b4",
        points: tv,
    }];
    if !bound.is_empty() {
        series.push(Series {
            label: "bound",
            color: "#d62728",
            points: bound,
        });
    }

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(&result.scenario)).unwrap();
    writeln!(
        s,
        "<desc>config_hash {} master_seed {}{}</desc>",
        result.config_hash,
        result.master_seed,
        if result.complete { "" } else { " incomplete" }
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for d in (dmin as i32)..=(dmax as i32) {
        let y = sy(10f64.powi(d));
        writeln!(
            s,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>",
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    for r in &result.rows {
        let x = sx(r.point.n as f64);
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            r.point.n
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{LEFT}" y="{:.2}">{} (log scale)</text>"#,
        TOP - 14.0,
        escape(&result.scenario)
    )
    .unwrap();
    for (i, se) in series.iter().enumerate() {
        let pts: Vec<String> = se.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(
            s,
            r#"<polyline class="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            se.label,
            se.color,
            pts.join(" ")
        )
        .unwrap();
        for &(x, y) in &se.points {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                sx(x),
                sy(y),
                se.color
            )
            .unwrap();
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            se.color,
            lx + 26.0,
            ly + 4.0,
            se.label
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}
