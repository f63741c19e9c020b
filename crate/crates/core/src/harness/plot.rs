//! Self-contained SVG learning curves.

use std::fmt::Write;

use super::NSummary;

const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 55.0;

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    points: Vec<(f64, f64)>,
}

fn decade_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return None;
    }
    let lo = lo.log10().floor();
    let hi = hi.log10().ceil().max(lo + 1.0);
    Some((lo, hi))
}

fn draw_panel(svg: &mut String, x0: f64, panel: &Panel, x_range: (f64, f64)) {
    let left = x0 + MARGIN;
    let top = 40.0;
    let width = PANEL_W - MARGIN - 15.0;
    let height = PANEL_H - 80.0;
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
        left + width / 2.0,
        panel.title
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{left:.1}" y="{top:.1}" width="{width:.1}" height="{height:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">episodes N</text>"#,
        left + width / 2.0,
        top + height + 38.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x0 + 14.0,
        top + height / 2.0,
        x0 + 14.0,
        top + height / 2.0,
        panel.y_label
    );
    let Some(y_range) = decade_range(panel.points.iter().map(|p| p.1)) else {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">no positive values</text>"#,
            left + width / 2.0,
            top + height / 2.0
        );
        return;
    };
    let sx = |x: f64| left + (x.log10() - x_range.0) / (x_range.1 - x_range.0) * width;
    let sy = |y: f64| top + height - (y.log10() - y_range.0) / (y_range.1 - y_range.0) * height;
    for d in x_range.0 as i32..=x_range.1 as i32 {
        let x = sx(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">1e{d}</text>"#,
            top + height,
            top + height + 5.0,
            top + height + 18.0
        );
    }
    for d in y_range.0 as i32..=y_range.1 as i32 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{left:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">1e{d}</text>"#,
            left - 5.0,
            left - 7.0,
            y + 3.0
        );
    }
    let path: Vec<String> = panel
        .points
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        path.join(" ")
    );
    for &(x, y) in &panel.points {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#1f77b4"/>"##,
            sx(x),
            sy(y)
        );
    }
}

/// Median parameter error and median regret against N, both on log-log
/// axes. Nonpositive medians are omitted.
pub fn learning_curve_svg(summary: &[NSummary]) -> String {
    let positive = |f: fn(&NSummary) -> Option<f64>| -> Vec<(f64, f64)> {
        summary
            .iter()
            .filter_map(|s| f(s).filter(|v| *v > 0.0).map(|v| (s.episodes as f64, v)))
            .collect()
    };
    let panels = [
        Panel {
            title: "Parameter error",
            y_label: "median max parameter error",
            points: positive(|s| s.median_max_param_error),
        },
        Panel {
            title: "Regret",
            y_label: "median regret",
            points: positive(|s| s.median_regret),
        },
    ];
    let x_range = decade_range(summary.iter().map(|s| s.episodes as f64)).unwrap_or((0.0, 1.0));
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" font-family="sans-serif">"#,
        2.0 * PANEL_W,
        PANEL_H
    );
    svg.push('\n');
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, i as f64 * PANEL_W, p, x_range);
    }
    svg.push_str("</svg>\n");
    svg
}
