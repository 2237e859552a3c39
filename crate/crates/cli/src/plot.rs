//! Minimal SVG line charts for emitted tables.
//!
//! The first column is the x axis; every other numeric column becomes a
//! polyline. Rows with an empty cell break the polyline into segments, so
//! partially defined columns (like the time-sharing cost outside its
//! window) plot only where they exist.

use crate::table::OutputTable;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Series {
    name: String,
    /// Segments of (x, y) points between gaps.
    segments: Vec<Vec<(f64, f64)>>,
}

fn collect_series(table: &OutputTable) -> Option<(String, Vec<Series>)> {
    if table.header.is_empty() || table.rows.is_empty() {
        return None;
    }
    let xs: Vec<Option<f64>> = table.rows.iter().map(|r| r[0].as_num()).collect();
    let mut series = Vec::new();
    for col in 1..table.header.len() {
        let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut current: Vec<(f64, f64)> = Vec::new();
        let mut any = false;
        for (row, x) in table.rows.iter().zip(&xs) {
            match (x, row[col].as_num()) {
                (Some(x), Some(y)) if y.is_finite() => {
                    current.push((*x, y));
                    any = true;
                }
                _ => {
                    if !current.is_empty() {
                        segments.push(std::mem::take(&mut current));
                    }
                }
            }
        }
        if !current.is_empty() {
            segments.push(current);
        }
        if any {
            series.push(Series {
                name: table.header[col].clone(),
                segments,
            });
        }
    }
    if series.is_empty() {
        None
    } else {
        Some((table.header[0].clone(), series))
    }
}

fn nice_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

/// Render the table as an SVG line chart, or `None` when it has no numeric
/// series to draw.
pub fn render_line_chart(table: &OutputTable, title: &str) -> Option<String> {
    let (x_name, series) = collect_series(table)?;

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &series {
        for seg in &s.segments {
            for &(x, y) in seg {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        return None;
    }
    if x_max == x_min {
        x_min -= 1.0;
        x_max += 1.0;
    }
    if y_max == y_min {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let to_px = |x: f64, y: f64| {
        (
            MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w,
            MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r##"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"##,
        WIDTH / 2.0,
        title
    ));
    svg.push('\n');

    // Axes with four ticks each.
    svg.push_str(&format!(
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
    ));
    svg.push('\n');
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let (px, _) = to_px(xv, y_min);
        let (_, py) = to_px(x_min, yv);
        svg.push_str(&format!(
            r##"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="#cccccc"/>"##,
            MARGIN_T,
            MARGIN_T + plot_h
        ));
        svg.push_str(&format!(
            r##"<text x="{px}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"##,
            MARGIN_T + plot_h + 18.0,
            nice_label(xv)
        ));
        svg.push_str(&format!(
            r##"<line x1="{}" y1="{py}" x2="{}" y2="{py}" stroke="#cccccc"/>"##,
            MARGIN_L,
            MARGIN_L + plot_w
        ));
        svg.push_str(&format!(
            r##"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"##,
            MARGIN_L - 6.0,
            py + 4.0,
            nice_label(yv)
        ));
        svg.push('\n');
    }
    svg.push_str(&format!(
        r##"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"##,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        x_name
    ));
    svg.push('\n');

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for seg in &s.segments {
            if seg.len() == 1 {
                let (px, py) = to_px(seg[0].0, seg[0].1);
                svg.push_str(&format!(
                    r##"<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>"##
                ));
                svg.push('\n');
                continue;
            }
            let points: Vec<String> = seg
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = to_px(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            svg.push_str(&format!(
                r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"##,
                points.join(" ")
            ));
            svg.push('\n');
        }
        // Legend entry.
        let ly = MARGIN_T + 16.0 + 18.0 * idx as f64;
        let lx = MARGIN_L + plot_w - 170.0;
        svg.push_str(&format!(
            r##"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"##,
            lx + 24.0
        ));
        svg.push_str(&format!(
            r##"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"##,
            lx + 30.0,
            ly + 4.0,
            s.name
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    Some(svg)
}
