//! Deterministic SVG frames: filled phases, stroked network, marked anchors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::IoError;
use crate::driver::Trajectory;
use crate::geometry::Vec2;
use crate::partition::{LabeledNetwork, VertexKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    /// Output width and height in pixels.
    pub size: f64,
    pub stroke_width: f64,
    pub anchor_radius: f64,
    /// Fill colors indexed by `label − 1`, cycled when there are more phases.
    pub palette: Vec<String>,
    pub domain_stroke: String,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            size: 512.0,
            stroke_width: 2.0,
            anchor_radius: 4.0,
            palette: ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            domain_stroke: "#555555".into(),
        }
    }
}

struct View {
    lo: Vec2,
    scale: f64,
    size: f64,
}

impl View {
    fn new(net: &LabeledNetwork, size: f64) -> Self {
        let (lo, hi) = net.domain.bounding_box();
        let span = (hi - lo).x.max((hi - lo).y);
        let pad = 0.05 * span;
        View { lo: lo - Vec2::new(pad, pad), scale: size / (span + 2.0 * pad), size }
    }

    /// SVG coordinates with `y` pointing down.
    fn map(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.lo.x) * self.scale, self.size - (p.y - self.lo.y) * self.scale)
    }
}

fn path_data(view: &View, pts: &[Vec2], close: bool) -> String {
    let mut d = String::new();
    for (i, &p) in pts.iter().enumerate() {
        let (x, y) = view.map(p);
        let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "M" } else { " L" });
    }
    if close {
        d.push_str(" Z");
    }
    d
}

/// One SVG document for a network; identical input gives byte-identical output.
pub fn render_svg(net: &LabeledNetwork, style: &Style) -> String {
    let view = View::new(net, style.size);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        style.size
    );
    // positively oriented faces, largest first, so nested faces paint over their surroundings
    let mut faces: Vec<_> = net.faces().into_iter().filter(|f| f.area > 0.0 && f.polygon.len() >= 3).collect();
    faces.sort_by(|a, b| b.area.total_cmp(&a.area).then(a.label.cmp(&b.label)));
    let _ = writeln!(s, r#"<g class="phases" stroke="none">"#);
    for f in &faces {
        let color = &style.palette[(f.label.max(1) as usize - 1) % style.palette.len()];
        let _ = writeln!(s, r#"<path class="phase" data-label="{}" fill="{color}" d="{}"/>"#, f.label, path_data(&view, &f.polygon, true));
    }
    let _ = writeln!(s, "</g>");
    let per = net.domain.boundary_period();
    let outline = net.domain.arc_points(0.0, per, 0.0);
    let _ = writeln!(
        s,
        r#"<path class="domain" fill="none" stroke="{}" stroke-width="1" d="{}"/>"#,
        style.domain_stroke,
        path_data(&view, &outline[..outline.len() - 1], true)
    );
    let _ = writeln!(s, r#"<g class="network" fill="none" stroke="black" stroke-width="{}">"#, style.stroke_width);
    for e in 0..net.edges.len() {
        let _ = writeln!(s, r#"<path class="edge" d="{}"/>"#, path_data(&view, &net.polyline(e), false));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="anchors" fill="black">"#);
    for v in net.vertices.iter().filter(|v| v.kind == VertexKind::Anchor) {
        let (x, y) = view.map(v.pos);
        let _ = writeln!(s, r#"<circle class="anchor" cx="{x:.3}" cy="{y:.3}" r="{}"/>"#, style.anchor_radius);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

/// Write `frame_00000.svg`, `frame_00001.svg`, ... one per stored snapshot.
pub fn render_trajectory(traj: &Trajectory, dir: &Path, style: &Style) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::Io { path: dir.display().to_string(), source: e })?;
    let width = traj.snapshots.len().saturating_sub(1).to_string().len().max(5);
    traj.snapshots
        .iter()
        .enumerate()
        .map(|(i, snap)| {
            let p = dir.join(format!("frame_{i:0width$}.svg"));
            fs::write(&p, render_svg(&snap.network, style)).map_err(|e| IoError::Io { path: p.display().to_string(), source: e })?;
            Ok(p)
        })
        .collect()
}
