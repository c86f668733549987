//! Line chart of a sweep CSV as a standalone SVG: one line per scheme,
//! sweep value on x, mean learning error on y. Output depends only on the
//! CSV contents.

use std::fmt::Write as _;
use std::path::Path;

use nomafl_core::SchemeId;

use crate::error::{HarnessError, Result};
use crate::sweep::{read_csv, ResultRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub fn emit_plot(csv_path: &Path, out_path: &Path) -> Result<()> {
    let rows = read_csv(csv_path)?;
    let svg = render_svg(&rows);
    std::fs::write(out_path, svg).map_err(|e| HarnessError::io(out_path, e))
}

/// Schemes in report order, unknown names after them in order of
/// appearance.
fn series(rows: &[ResultRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        if !names.contains(&r.scheme) {
            names.push(r.scheme.clone());
        }
    }
    let rank = |n: &String| n.parse::<SchemeId>().map_or(usize::MAX, |s| s as usize);
    names.sort_by_key(|n| rank(n)); // stable: unknown names keep their order
    names
        .into_iter()
        .map(|name| {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.scheme == name)
                .map(|r| (r.sweep_value, r.mean_error))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (name, pts)
        })
        .collect()
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn render_svg(rows: &[ResultRow]) -> String {
    let lines = series(rows);
    let (x0, x1) = span(rows.iter().map(|r| r.sweep_value));
    let (y_lo, y_hi) = span(rows.iter().map(|r| r.mean_error));
    let pad = 0.05 * (y_hi - y_lo);
    let (y0, y1) = (y_lo - pad, y_hi + pad);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;
    let x_name = rows
        .first()
        .map_or("sweep value", |r| r.sweep_param.as_str());

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (x, y) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 20.0,
            label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_name}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">mean learning error</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (name, pts)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{name}</text>"#,
            lx + 25.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64, scheme: &str, e: f64) -> ResultRow {
        ResultRow {
            sweep_param: "bs_power_dbm".into(),
            sweep_value: v,
            scheme: scheme.into(),
            mean_error: e,
            feasible_frac: 1.0,
            mean_iters: 1.0,
            mean_energy_j: 0.5,
        }
    }

    #[test]
    fn empty_input_draws_axes_only() {
        let svg = render_svg(&[]);
        assert!(svg.starts_with("<svg"));
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn one_line_per_scheme_in_report_order() {
        let rows = vec![
            row(30.0, "fdma_aigc", 0.8),
            row(25.0, "noma_aigc", 0.7),
            row(25.0, "fdma_aigc", 0.9),
            row(30.0, "noma_aigc", 0.6),
        ];
        let svg = render_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.find(">noma_aigc<").unwrap() < svg.find(">fdma_aigc<").unwrap());
        assert_eq!(svg, render_svg(&rows));
    }

    #[test]
    fn labels_are_compact() {
        assert_eq!(label(35.0), "35");
        assert_eq!(label(0.7125), "0.713");
        assert_eq!(label(2e6), "2.00e6");
    }
}
