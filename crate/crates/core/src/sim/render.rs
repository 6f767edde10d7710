//! Top-down SVG of one tick: the map, social-cost contours, people,
//! groups, the robot and its predicted trajectory.

use std::fmt::Write;

use super::engine::TickLog;
use crate::geometry::Vec2;
use crate::nav::{CostField, FieldLayer};

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    /// Pixels per metre.
    pub scale: f64,
    /// Social-cost levels drawn as contour lines.
    pub levels: Vec<f64>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { scale: 100.0, levels: vec![0.2, 0.5, 0.8] }
    }
}

/// Line segments where a sampled field crosses `level`, by marching
/// squares over the cell centres. Saddles are split by the centre mean.
pub fn contour_segments(field: &CostField, layer: FieldLayer, level: f64) -> Vec<(Vec2, Vec2)> {
    let g = &field.grid;
    let v = field.layer(layer);
    let mut out = Vec::new();
    if g.width < 2 || g.height < 2 {
        return out;
    }
    for r in 0..g.height - 1 {
        for c in 0..g.width - 1 {
            // Corners counter-clockwise from bottom-left.
            let corners = [(c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)];
            let val = corners.map(|(cc, rr)| v[g.index(cc, rr)]);
            let pos = corners.map(|(cc, rr)| g.cell_center(cc, rr));
            let above = val.map(|x| x >= level);
            let crossing = |e: usize| {
                let (i, j) = (e, (e + 1) % 4);
                let t = ((level - val[i]) / (val[j] - val[i])).clamp(0.0, 1.0);
                pos[i] + (pos[j] - pos[i]) * t
            };
            let cut: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
            match cut.len() {
                2 => out.push((crossing(cut[0]), crossing(cut[1]))),
                4 => {
                    let centre_above = val.iter().sum::<f64>() / 4.0 >= level;
                    // Pair edges so the centre's side stays connected.
                    if centre_above == above[0] {
                        out.push((crossing(0), crossing(1)));
                        out.push((crossing(2), crossing(3)));
                    } else {
                        out.push((crossing(3), crossing(0)));
                        out.push((crossing(1), crossing(2)));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

struct Canvas {
    origin: Vec2,
    top: f64,
    scale: f64,
}

impl Canvas {
    fn x(&self, p: Vec2) -> f64 {
        (p.x - self.origin.x) * self.scale
    }

    fn y(&self, p: Vec2) -> f64 {
        (self.top - p.y) * self.scale
    }

    fn pt(&self, p: Vec2) -> String {
        format!("{:.2},{:.2}", self.x(p), self.y(p))
    }
}

pub fn render_svg(log: &TickLog, field: &CostField, opts: &RenderOptions) -> String {
    let g = &field.grid;
    let (lo, hi) = g.bounds();
    let cv = Canvas { origin: lo, top: hi.y, scale: opts.scale };
    let (w, h) = ((hi.x - lo.x) * opts.scale, (hi.y - lo.y) * opts.scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r#"<rect class="map" x="0" y="0" width="{w:.2}" height="{h:.2}" fill="white" stroke="black"/>"#);
    let cell = g.resolution * opts.scale;
    for r in 0..g.height {
        for c in 0..g.width {
            if g.occupied(c, r) {
                let p = g.cell_center(c, r) + Vec2::new(-g.resolution / 2.0, g.resolution / 2.0);
                let _ = writeln!(
                    s,
                    r#"<rect class="obstacle" x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="gray"/>"#,
                    cv.x(p),
                    cv.y(p)
                );
            }
        }
    }

    for &level in &opts.levels {
        let segs = contour_segments(field, FieldLayer::Social, level);
        if segs.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (a, b) in segs {
            let _ = write!(d, "M{}L{}", cv.pt(a), cv.pt(b));
        }
        let hue = (240.0 * (1.0 - level.clamp(0.0, 1.0))).round();
        let _ = writeln!(
            s,
            r#"<path class="contour" data-level="{level}" d="{d}" fill="none" stroke="hsl({hue},80%,45%)"/>"#
        );
    }

    let arrow = 0.4;
    for a in &log.truth {
        let p = a.pose.position();
        let tip = p + Vec2::new(a.pose.theta.cos(), a.pose.theta.sin()) * arrow;
        let _ = writeln!(
            s,
            r#"<g class="agent" data-id="{}"><circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="black"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/></g>"#,
            xml_escape(&a.id),
            cv.x(p),
            cv.y(p),
            0.2 * opts.scale,
            cv.x(p),
            cv.y(p),
            cv.x(tip),
            cv.y(tip)
        );
    }
    for grp in &log.snapshot.groups {
        let c = grp.center;
        let _ = writeln!(
            s,
            r#"<circle class="group" data-id="{}" cx="{:.2}" cy="{:.2}" r="4" fill="purple"/>"#,
            xml_escape(&grp.id.to_string()),
            cv.x(c),
            cv.y(c)
        );
    }

    let robot = log.snapshot.robot.pose;
    let rp = robot.position();
    let nose = rp + Vec2::new(robot.theta.cos(), robot.theta.sin()) * 0.3;
    let _ = writeln!(
        s,
        r#"<g class="robot"><circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="steelblue"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/></g>"#,
        cv.x(rp),
        cv.y(rp),
        0.25 * opts.scale,
        cv.x(rp),
        cv.y(rp),
        cv.x(nose),
        cv.y(nose)
    );
    if !log.plan.predicted.is_empty() {
        let pts: Vec<String> =
            std::iter::once(rp).chain(log.plan.predicted.iter().map(|q| q.position())).map(|p| cv.pt(p)).collect();
        let _ = writeln!(s, r#"<polyline class="plan" points="{}" fill="none" stroke="red"/>"#, pts.join(" "));
    }
    if let Some(goal) = log.plan.goal {
        let _ = writeln!(s, r#"<circle class="goal" cx="{:.2}" cy="{:.2}" r="5" fill="green"/>"#, cv.x(goal), cv.y(goal));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::nav::{build_cost_field, CostParams, OccupancyGrid, PersonState, SocialScene};

    #[test]
    fn circle_contour_has_the_right_radius() {
        let grid = OccupancyGrid::empty(40, 40, 0.1, Vec2::new(-2.0, -2.0));
        let mut params = CostParams::default();
        params.social.sigma_rear = params.social.sigma_front;
        let scene = SocialScene { persons: vec![PersonState::standing(Pose2::default())], groups: vec![] };
        let f = build_cost_field(&scene, &grid, &params);
        let segs = contour_segments(&f, FieldLayer::Social, 0.5);
        assert!(!segs.is_empty());
        let expected = 0.45 * (2.0 * 2f64.ln()).sqrt();
        for (a, b) in segs {
            for p in [a, b] {
                assert!((p.norm() - expected).abs() < 0.02, "{} vs {expected}", p.norm());
            }
        }
    }
}
