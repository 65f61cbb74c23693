//! SVG figures of tessellations.

use deadleaves::dlm1d::Tessellation1D;
use deadleaves::dlm2d::{ArcGeometry, PlanarTessellation};
use deadleaves::geom::shapes::Shape2D;
use deadleaves::geom::vec2::Vec2;
use std::f64::consts::TAU;
use std::fmt::Write;

/// Circle arcs are drawn with this many segments per full turn.
pub const SEGMENTS_PER_TURN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Output width in pixels.
    pub width: f64,
    pub shade: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 800.0,
            shade: false,
        }
    }
}

fn header(out: &mut String, min: Vec2, w: f64, h: f64, px: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="{} {} {} {}">"#,
        px,
        px * h / w,
        min.x,
        min.y,
        w,
        h
    );
}

/// Deterministic pastel colour for a leaf id.
fn colour(id: u32) -> String {
    let h = id.wrapping_mul(2_654_435_761) % 360;
    format!("hsl({h},55%,78%)")
}

fn arc_points(g: &ArcGeometry) -> Vec<Vec2> {
    match *g {
        ArcGeometry::Circle {
            center,
            radius,
            start,
            end,
        } => {
            let n = (((end - start) / TAU * SEGMENTS_PER_TURN as f64).ceil() as usize).max(1);
            (0..=n)
                .map(|i| {
                    center + Vec2::from_angle(start + (end - start) * i as f64 / n as f64) * radius
                })
                .collect()
        }
        ArcGeometry::Segment { from, to } => vec![from, to],
    }
}

fn path_data(pts: &[Vec2], y0: f64) -> String {
    let mut d = String::new();
    for (i, p) in pts.iter().enumerate() {
        let _ = write!(
            d,
            "{}{:.6} {:.6}",
            if i == 0 { "M" } else { " L" },
            p.x,
            y0 - p.y
        );
    }
    d
}

/// Visible arcs as paths, branch points as dots, optional cell shading.
/// The y axis points up.
pub fn render_planar(t: &PlanarTessellation, opts: &RenderOptions) -> String {
    let w = t.window;
    let (ww, hh) = (w.width(), w.height());
    // flip y: world y maps to (min.y + max.y) - y
    let y0 = w.min.y + w.max.y;
    let stroke = ww.max(hh) / 400.0;
    let mut out = String::new();
    header(&mut out, w.min, ww, hh, opts.width);
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="window"><rect x="{}" y="{}" width="{ww}" height="{hh}"/></clipPath></defs>"#,
        w.min.x, w.min.y
    );
    if opts.shade {
        let _ = writeln!(out, r#"<g clip-path="url(#window)" stroke="none">"#);
        // painter's order: the first arrival is on top
        for l in t.leaves.iter().rev().filter(|l| l.area() > 0.0) {
            let fill = colour(l.id);
            match &l.shape {
                Shape2D::Disk(d) => {
                    let _ = writeln!(
                        out,
                        r#"<circle class="cell" cx="{:.6}" cy="{:.6}" r="{:.6}" fill="{fill}"/>"#,
                        d.center.x,
                        y0 - d.center.y,
                        d.radius
                    );
                }
                Shape2D::Polygon(p) => {
                    let mut pts = p.vertices().to_vec();
                    pts.push(pts[0]);
                    let _ = writeln!(
                        out,
                        r#"<path class="cell" d="{} Z" fill="{fill}"/>"#,
                        path_data(&pts, y0)
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(
        out,
        r#"<rect class="window" x="{}" y="{}" width="{ww}" height="{hh}" fill="none" stroke="black" stroke-width="{stroke}"/>"#,
        w.min.x, w.min.y
    );
    let _ = writeln!(
        out,
        r#"<g fill="none" stroke="black" stroke-width="{stroke}">"#
    );
    for a in t.arcs() {
        let _ = writeln!(
            out,
            r#"<path class="arc" d="{}"/>"#,
            path_data(&arc_points(&a.geometry), y0)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g fill="red" stroke="none">"#);
    for b in &t.branch_points {
        let _ = writeln!(
            out,
            r#"<circle class="branch" cx="{:.6}" cy="{:.6}" r="{}"/>"#,
            b.point.x,
            y0 - b.point.y,
            2.0 * stroke
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}

/// Space-time diagram: leaves as bars at their (reversed) arrival times,
/// thick when partly visible, and `η` as ticks along the bottom. Without a
/// recorded history only the cells and ticks are drawn.
pub fn render_line(t: &Tessellation1D, opts: &RenderOptions) -> String {
    let n = t.length;
    let height = n / 4.0;
    let tmax = t
        .history
        .iter()
        .map(|r| r.time)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let band = height * 0.9;
    let base = height;
    let thin = n / 2000.0;
    let mut out = String::new();
    header(&mut out, Vec2::new(0.0, 0.0), n, height * 1.1, opts.width);
    let _ = writeln!(
        out,
        r#"<rect class="window" x="0" y="0" width="{n}" height="{}" fill="none" stroke="black" stroke-width="{thin}"/>"#,
        height * 1.1
    );
    let _ = writeln!(out, r#"<g stroke-linecap="butt">"#);
    for r in t.history.iter().filter(|r| r.leaf) {
        let y = base - band * r.time / tmax;
        let width = if r.visible { 6.0 * thin } else { thin };
        let stroke = if r.visible { "black" } else { "gray" };
        for &(s, l) in r.shape.components() {
            let (a, b) = ((r.position + s).max(0.0), (r.position + s + l).min(n));
            if b > a {
                let _ = writeln!(
                    out,
                    r#"<line class="leaf" x1="{a:.6}" y1="{y:.6}" x2="{b:.6}" y2="{y:.6}" stroke="{stroke}" stroke-width="{width}"/>"#
                );
            }
        }
    }
    if opts.shade || t.history.is_empty() {
        for c in t.proper_cells() {
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{:.6}" y="{:.6}" width="{:.6}" height="{:.6}" fill="{}"/>"#,
                c.start,
                base,
                c.len(),
                height * 0.05,
                colour(c.leaf)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g stroke="red" stroke-width="{thin}">"#);
    for &x in &t.eta {
        let _ = writeln!(
            out,
            r#"<line class="eta" x1="{x:.6}" y1="{base:.6}" x2="{x:.6}" y2="{:.6}"/>"#,
            height * 1.1
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}
