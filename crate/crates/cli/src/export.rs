//! Curve files and SVG contact sheets.

use std::fmt::Write as _;

use beziergan::geometry::Point;

/// `x y` per line with six decimals.
pub fn dat_text(points: &[Point]) -> String {
    let mut s = String::with_capacity(points.len() * 24);
    for p in points {
        let _ = writeln!(s, "{:.6} {:.6}", p[0], p[1]);
    }
    s
}

/// One panel of a sheet.
pub struct Panel {
    pub row: usize,
    pub col: usize,
    pub label: String,
    pub points: Vec<Point>,
}

const CELL: f64 = 120.0;
const PAD: f64 = 10.0;

/// Lays panels out on a grid, all drawn with one shared scale so sizes are
/// comparable across the sheet.
pub fn svg_sheet(panels: &[Panel]) -> String {
    let rows = panels.iter().map(|p| p.row + 1).max().unwrap_or(1);
    let cols = panels.iter().map(|p| p.col + 1).max().unwrap_or(1);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in panels.iter().flat_map(|p| &p.points) {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (CELL - 2.0 * PAD) / span;
    let (w, h) = (cols as f64 * CELL, rows as f64 * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for panel in panels {
        let (ox, oy) = (panel.col as f64 * CELL, panel.row as f64 * CELL);
        let coords: Vec<String> = panel
            .points
            .iter()
            .map(|p| {
                // Centre the shared bounding box in the cell, y pointing up.
                let x = ox + CELL / 2.0 + (p[0] - (lo[0] + hi[0]) / 2.0) * scale;
                let y = oy + CELL / 2.0 - (p[1] - (lo[1] + hi[1]) / 2.0) * scale;
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(s, r#"<g><title>{}</title>"#, panel.label);
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1"/></g>"#,
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
