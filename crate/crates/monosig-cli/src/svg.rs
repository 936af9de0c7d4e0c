//! Minimal SVG writer for path overlays: the unit square with one
//! polyline per path, drawn in plane coordinates (first two components),
//! y up. Output is deterministic — fixed precision, no timestamps.

use monosig::CandidatePath;

pub struct Polyline {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub const PALETTE: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

/// Plane trace of a path: cumulative sums of its increments at the grid
/// breakpoints. One-dimensional paths are drawn against their parameter.
pub fn trace(cp: &CandidatePath) -> Vec<(f64, f64)> {
    let d = cp.dim();
    let mut x = 0.0f64;
    let mut y = 0.0f64;
    let mut pts = Vec::with_capacity(cp.segments().len() + 1);
    if d == 1 {
        pts.push((cp.grid()[0], 0.0));
        for (seg, &q) in cp.segments().iter().zip(&cp.grid()[1..]) {
            y += seg[0];
            pts.push((q, y));
        }
    } else {
        pts.push((0.0, 0.0));
        for seg in cp.segments() {
            x += seg[0];
            y += seg[1];
            pts.push((x, y));
        }
    }
    pts
}

/// The unit square, a legend above it, and the given polylines; `comment`
/// becomes the provenance comment. Coordinates are flipped so larger y
/// draws upward.
pub fn overlay(lines: &[Polyline], comment: &str) -> String {
    let legend_rows = lines.len() as f64;
    let top = -0.08 - 0.08 * legend_rows;
    let height = 1.2 - top;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-0.1 {top:.3} 1.2 {height:.3}\" width=\"520\" height=\"{:.0}\">\n",
        520.0 * height / 1.2
    );
    s.push_str(&format!("<!-- {} -->\n", comment.replace("--", "-")));
    s.push_str(
        "<rect x=\"0\" y=\"0\" width=\"1\" height=\"1\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.003\"/>\n",
    );
    for (k, line) in lines.iter().enumerate() {
        let pts = line
            .points
            .iter()
            .map(|&(x, y)| format!("{x:.6},{:.6}", 1.0 - y))
            .collect::<Vec<_>>()
            .join(" ");
        s.push_str(&format!(
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.008\" stroke-linejoin=\"round\"/>\n",
            line.color
        ));
        let ly = -0.10 - 0.08 * (lines.len() - 1 - k) as f64;
        s.push_str(&format!(
            "<line x1=\"0\" y1=\"{ly:.3}\" x2=\"0.08\" y2=\"{ly:.3}\" stroke=\"{}\" stroke-width=\"0.012\"/>\n",
            line.color
        ));
        s.push_str(&format!(
            "<text x=\"0.11\" y=\"{:.3}\" font-size=\"0.05\" font-family=\"sans-serif\" fill=\"#333333\">{}</text>\n",
            ly + 0.018,
            line.label
        ));
    }
    s.push_str("</svg>\n");
    s
}
