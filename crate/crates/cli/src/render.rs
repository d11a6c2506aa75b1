//! SVG drawing of a scenario map and a closed-loop trace.

use std::collections::BTreeSet;
use std::fmt::Write;

use kaw_core::grid::HyperRect;
use kaw_core::knowledge::KnowledgeError;
use kaw_core::{CellSet, Grid, Scenario, Trace};

/// Pixels per map unit.
const SCALE: f64 = 60.0;
const MARGIN: f64 = 20.0;

struct Canvas {
    out: String,
    x0: f64,
    y1: f64,
}

impl Canvas {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * SCALE
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN + (self.y1 - y) * SCALE
    }

    fn rect(&mut self, lower: [f64; 2], upper: [f64; 2], style: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
            self.px(lower[0]),
            self.py(upper[1]),
            (upper[0] - lower[0]) * SCALE,
            (upper[1] - lower[1]) * SCALE
        );
    }

    fn region(&mut self, r: &HyperRect, style: &str) {
        self.rect([r.lower[0], r.lower[1]], [r.upper[0], r.upper[1]], style);
    }

    fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            self.px(x),
            self.py(y),
            escape(text)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Planar rectangles of the cells in `set`, one per distinct planar position.
fn planar_cells(grid: &Grid, set: &CellSet) -> Vec<HyperRect> {
    let mut seen = BTreeSet::new();
    let mut rects = Vec::new();
    for c in set.iter() {
        let m = grid.multi_index(c).expect("cell in grid");
        if seen.insert((m[0], m[1])) {
            rects.push(grid.cell_rect(c).expect("cell in grid"));
        }
    }
    rects
}

/// Draws the map (obstacles, target, streets, signs), the detection zones of
/// the signs seen in `trace`, and the trajectory.
pub fn render_svg(scenario: &Scenario, trace: &Trace) -> Result<String, KnowledgeError> {
    let grid = scenario.grid_x();
    let bounds = grid.bounds();
    let interp = scenario.interpretation()?;
    let mut c = Canvas { out: String::new(), x0: bounds.lower[0], y1: bounds.upper[1] };
    let width = (bounds.upper[0] - bounds.lower[0]) * SCALE + 2.0 * MARGIN;
    let height = (bounds.upper[1] - bounds.lower[1]) * SCALE + 2.0 * MARGIN;
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(c.out, "<title>{}</title>", escape(&scenario.file.name));
    c.region(bounds, r##"fill="#ffffff" stroke="#000000" stroke-width="1""##);

    // detection zones of the signs that were actually seen
    let detected: BTreeSet<u32> = trace.steps.iter().flat_map(|s| s.detected.iter().map(|d| d.0)).collect();
    let obligations = interp.kb().obligations()?;
    for sign in interp.signs() {
        if !sign.cells.iter().any(|s| detected.contains(&s.0)) {
            continue;
        }
        let mut zone = CellSet::empty(grid.len());
        for ob in obligations.iter().filter(|o| o.watched == sign.concept) {
            for x in grid.cells() {
                if zone.contains(x) {
                    continue;
                }
                for s in sign.cells.iter() {
                    if interp.role_holds(&ob.role, x, s)? {
                        zone.insert(x);
                        break;
                    }
                }
            }
        }
        let _ = writeln!(c.out, r#"<g class="detection-zone" data-sign="{}">"#, escape(&sign.name));
        for r in planar_cells(grid, &zone) {
            c.region(&r, r##"fill="#ffd27f" fill-opacity="0.35" stroke="none""##);
        }
        let _ = writeln!(c.out, "</g>");
    }

    let map = scenario.map();
    for (name, boxes) in &map.concepts {
        let style = match name.as_str() {
            "Obstacle" => r##"fill="#7f7f7f" stroke="#404040""##,
            "Target" => r##"fill="#7fd87f" stroke="#2f8f2f""##,
            _ => r##"fill="#9fc5ff" fill-opacity="0.5" stroke="#4060a0""##,
        };
        let _ = writeln!(c.out, r#"<g class="concept" data-name="{}">"#, escape(name));
        for b in boxes {
            c.region(b, style);
        }
        let _ = writeln!(c.out, "</g>");
        if let Some(b) = boxes.first() {
            c.label(b.lower[0] + 0.05, b.upper[1] - 0.25, name);
        }
    }
    for sign in &map.signs {
        let _ = writeln!(c.out, r#"<g class="sign" data-name="{}">"#, escape(&sign.name));
        for b in &sign.street {
            c.region(b, r##"fill="#ff9f9f" fill-opacity="0.4" stroke="#c04040" stroke-dasharray="4 3""##);
        }
        for b in &sign.at {
            let (cx, cy) = ((b.lower[0] + b.upper[0]) / 2.0, (b.lower[1] + b.upper[1]) / 2.0);
            let _ = writeln!(
                c.out,
                r##"<circle cx="{:.2}" cy="{:.2}" r="7" fill="#d02020" stroke="#ffffff" stroke-width="2"/>"##,
                c.px(cx),
                c.py(cy)
            );
            c.label(cx + 0.15, cy - 0.1, &sign.name);
        }
        let _ = writeln!(c.out, "</g>");
    }

    if !trace.steps.is_empty() {
        let points: Vec<String> =
            trace.steps.iter().map(|s| format!("{:.2},{:.2}", c.px(s.state[0]), c.py(s.state[1]))).collect();
        let _ = writeln!(
            c.out,
            r##"<polyline class="trajectory" points="{}" fill="none" stroke="#1f3fbf" stroke-width="2"/>"##,
            points.join(" ")
        );
        for s in trace.steps.iter().filter(|s| s.resynthesized) {
            let _ = writeln!(
                c.out,
                r##"<circle class="resynthesis" cx="{:.2}" cy="{:.2}" r="5" fill="#ff8000"><title>step {}</title></circle>"##,
                c.px(s.state[0]),
                c.py(s.state[1]),
                s.step
            );
        }
        let first = &trace.steps[0];
        let last = &trace.steps[trace.steps.len() - 1];
        let _ = writeln!(
            c.out,
            r##"<circle class="start" cx="{:.2}" cy="{:.2}" r="5" fill="#000000"/>"##,
            c.px(first.state[0]),
            c.py(first.state[1])
        );
        let _ = writeln!(
            c.out,
            r##"<circle class="end" cx="{:.2}" cy="{:.2}" r="5" fill="none" stroke="#000000" stroke-width="2"/>"##,
            c.px(last.state[0]),
            c.py(last.state[1])
        );
        c.label(bounds.lower[0] + 0.1, bounds.lower[1] + 0.1, &format!("{} after {} steps", trace.outcome, last.step));
    }
    let _ = writeln!(c.out, "</svg>");
    Ok(c.out)
}
