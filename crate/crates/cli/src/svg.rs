//! SVG rendering of a planned motion.

use std::f64::consts::PI;
use std::fmt::Write as _;

use discpair::geom::{Instance, Point};
use discpair::motion::{motion_length, Motion, PathPrimitive, Trajectory, Turn};

const COLOR_A: &str = "#c0392b";
const COLOR_B: &str = "#2471a3";

/// World to screen: y grows downwards in SVG.
fn sx(p: Point) -> (f64, f64) {
    (p.x, -p.y)
}

fn path_data(t: &Trajectory) -> String {
    let (x, y) = sx(t.start);
    let mut d = format!("M {x} {y}");
    for p in &t.primitives {
        match *p {
            PathPrimitive::Segment { to, .. } => {
                let (x, y) = sx(to);
                let _ = write!(d, " L {x} {y}");
            }
            PathPrimitive::Arc {
                radius, direction, ..
            } => {
                let (x, y) = sx(p.end());
                let large = u8::from(p.sweep() > PI);
                // Mirroring the y-axis turns world ccw into the SVG
                // negative-angle direction.
                let sweep = u8::from(direction == Turn::Cw);
                let _ = write!(d, " A {radius} {radius} 0 {large} {sweep} {x} {y}");
            }
        }
    }
    d
}

fn bounds(inst: &Instance, m: &Motion, labels: &[(String, Point)]) -> (f64, f64, f64, f64) {
    let mut pts: Vec<Point> = inst.points().to_vec();
    for t in [&m.traj_a, &m.traj_b] {
        for p in &t.primitives {
            pts.push(p.start());
            pts.push(p.end());
            if matches!(p, PathPrimitive::Arc { .. }) {
                pts.extend((0..16).map(|k| p.point_at(p.length() * k as f64 / 15.0)));
            }
        }
    }
    pts.extend(labels.iter().map(|(_, p)| *p));
    let pad = inst.s;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        let (x, y) = sx(p);
        x0 = x0.min(x - pad);
        x1 = x1.max(x + pad);
        y0 = y0.min(y - pad);
        y1 = y1.max(y + pad);
    }
    let (w, h) = (x1 - x0, y1 - y0);
    (x0 - 0.1 * w, y0 - 0.1 * h, 1.2 * w, 1.2 * h)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One SVG document: both trajectories, robot outlines (radius s/2) at
/// `frames` evenly spaced times, dashed s-circles about B's endpoints, and
/// labelled construction points.
pub fn render(inst: &Instance, m: &Motion, labels: &[(String, Point)], frames: usize) -> String {
    let (vx, vy, vw, vh) = bounds(inst, m, labels);
    let stroke = inst.s / 25.0;
    let font = inst.s / 3.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{vx} {vy} {vw} {vh}">"#
    );
    for b in [inst.p0.b, inst.p1.b] {
        let (x, y) = sx(b);
        let _ = writeln!(
            out,
            r##"  <circle cx="{x}" cy="{y}" r="{}" fill="none" stroke="#888888" stroke-width="{stroke}" stroke-dasharray="{} {}"/>"##,
            inst.s,
            4.0 * stroke,
            3.0 * stroke
        );
    }
    for (t, color) in [(&m.traj_a, COLOR_A), (&m.traj_b, COLOR_B)] {
        if !t.primitives.is_empty() {
            let _ = writeln!(
                out,
                r#"  <path d="{}" fill="none" stroke="{color}" stroke-width="{}"/>"#,
                path_data(t),
                2.0 * stroke
            );
        }
    }
    let frames = if motion_length(m) == 0.0 {
        frames.min(1)
    } else {
        frames
    };
    for k in 0..frames {
        let tau = if frames == 1 {
            0.0
        } else {
            k as f64 / (frames - 1) as f64
        };
        let p = m.sample(tau);
        for (c, color) in [(p.a, COLOR_A), (p.b, COLOR_B)] {
            let (x, y) = sx(c);
            let _ = writeln!(
                out,
                r#"  <circle cx="{x}" cy="{y}" r="{}" fill="none" stroke="{color}" stroke-width="{stroke}" opacity="0.6"/>"#,
                inst.s / 2.0
            );
        }
    }
    for (name, p) in labels {
        let (x, y) = sx(*p);
        let _ = writeln!(
            out,
            r#"  <circle cx="{x}" cy="{y}" r="{}" fill="black"/>"#,
            1.5 * stroke
        );
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" font-size="{font}" font-family="sans-serif">{}</text>"#,
            x + 2.0 * stroke,
            y - 2.0 * stroke,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
