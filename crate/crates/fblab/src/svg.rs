//! Minimal SVG output: contour lines by marching squares, polylines, a frame.

use std::fmt::Write as _;

use fblab_core::geometry::{Chart, DomainSpec};
use fblab_core::grid::GridField;
use fblab_core::Vec2;

const SIZE: f64 = 560.0;
const MARGIN: f64 = 40.0;

/// A drawing in domain coordinates, `x₂` pointing up.
pub struct Plot {
    domain: DomainSpec,
    scale: f64,
    width: f64,
    height: f64,
    body: String,
}

impl Plot {
    pub fn new(domain: &DomainSpec, title: &str) -> Self {
        let (w, h) = (domain.x1_max - domain.x1_min, domain.x2_max - domain.x2_min);
        let scale = SIZE / w.max(h);
        let (width, height) = (w * scale + 2.0 * MARGIN, h * scale + 2.0 * MARGIN);
        let mut p = Self {
            domain: *domain,
            scale,
            width,
            height,
            body: String::new(),
        };
        let _ = writeln!(
            p.body,
            r##"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="#333" stroke-width="1"/>"##,
            w * scale,
            h * scale
        );
        let _ = writeln!(
            p.body,
            r#"<text x="{MARGIN}" y="{:.2}" font-family="sans-serif" font-size="14">{}</text>"#,
            MARGIN - 12.0,
            escape(title)
        );
        let d = *domain;
        for (x, label) in [(d.x1_min, d.x1_min), (d.x1_max, d.x1_max)] {
            let [px, py] = p.map([x, d.x2_min]);
            let _ = writeln!(
                p.body,
                r#"<text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
                py + 16.0
            );
        }
        for (y, label) in [(d.x2_min, d.x2_min), (d.x2_max, d.x2_max)] {
            let [px, py] = p.map([d.x1_min, y]);
            let _ = writeln!(
                p.body,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
                px - 6.0,
                py + 4.0
            );
        }
        p
    }

    fn map(&self, x: Vec2) -> [f64; 2] {
        [
            MARGIN + (x[0] - self.domain.x1_min) * self.scale,
            self.height - MARGIN - (x[1] - self.domain.x2_min) * self.scale,
        ]
    }

    pub fn polyline(&mut self, pts: &[Vec2], color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let mut attr = String::new();
        for (i, &x) in pts.iter().enumerate() {
            let [a, b] = self.map(x);
            if i > 0 {
                attr.push(' ');
            }
            let _ = write!(attr, "{a:.2},{b:.2}");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{attr}" fill="none" stroke="{color}" stroke-width="{width}"/>"#
        );
    }

    pub fn segments(&mut self, segs: &[[Vec2; 2]], color: &str, width: f64) {
        if segs.is_empty() {
            return;
        }
        let mut d = String::new();
        for s in segs {
            let ([a, b], [c, e]) = (self.map(s[0]), self.map(s[1]));
            let _ = write!(d, "M{a:.2} {b:.2}L{c:.2} {e:.2}");
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{width}"/>"#
        );
    }

    pub fn legend(&mut self, row: usize, color: &str, label: &str) {
        let x = self.width - MARGIN - 150.0;
        let y = MARGIN + 16.0 + 16.0 * row as f64;
        let _ = writeln!(
            self.body,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Segments of `{u = level}` by marching squares; saddles are split by the
/// cell average.
pub fn contour(u: &GridField, level: f64) -> Vec<[Vec2; 2]> {
    let d = *u.domain();
    let mut out = Vec::new();
    for j in 0..d.n2 - 1 {
        for i in 0..d.n1 - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v = corners.map(|(a, b)| u.at(a, b) - level);
            let p = corners.map(|(a, b)| [d.x1(a), d.x2(b)]);
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (v[a] > 0.0) != (v[b] > 0.0) {
                    let s = v[a] / (v[a] - v[b]);
                    cuts.push([
                        p[a][0] + s * (p[b][0] - p[a][0]),
                        p[a][1] + s * (p[b][1] - p[a][1]),
                    ]);
                }
            }
            match cuts.len() {
                2 => out.push([cuts[0], cuts[1]]),
                4 => {
                    let centre = v.iter().sum::<f64>() / 4.0;
                    // edges 0..3 run bottom, right, top, left; pair cuts so
                    // the centre's side stays connected
                    if (centre > 0.0) == (v[0] > 0.0) {
                        out.push([cuts[0], cuts[1]]);
                        out.push([cuts[2], cuts[3]]);
                    } else {
                        out.push([cuts[0], cuts[3]]);
                        out.push([cuts[1], cuts[2]]);
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Blue to yellow.
fn ramp(s: f64) -> String {
    let s = s.clamp(0.0, 1.0);
    let (a, b) = ([49.0, 54.0, 149.0], [240.0, 200.0, 40.0]);
    let c: Vec<u8> = (0..3)
        .map(|k| (a[k] + s * (b[k] - a[k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Contours of `u` at `levels` evenly spaced values below its maximum, with
/// the free-boundary polyline on top.
pub fn contour_plot(u: &GridField, levels: usize, boundary: &[Vec2], title: &str) -> String {
    let mut plot = Plot::new(u.domain(), title);
    let top = u.max();
    if top > 0.0 {
        for l in 1..=levels {
            let s = l as f64 / (levels + 1) as f64;
            plot.segments(&contour(u, s * top), &ramp(s), 1.0);
        }
    }
    plot.polyline(boundary, "#d62728", 2.0);
    plot.legend(0, &ramp(0.5), "contours of u");
    plot.legend(1, "#d62728", "free boundary");
    plot.finish()
}

/// Every `stride`-th chart orbit, with the free-boundary polyline.
pub fn orbit_fan(chart: &Chart, stride: usize, boundary: &[Vec2], title: &str) -> String {
    let mut plot = Plot::new(&chart.domain, title);
    for o in chart.orbits.iter().step_by(stride.max(1)) {
        plot.polyline(&o.points, "#7f7f7f", 0.8);
    }
    let seeds: Vec<Vec2> = chart.orbits.iter().map(|o| o.seed).collect();
    plot.polyline(&seeds, "#1f77b4", 1.5);
    plot.polyline(boundary, "#d62728", 2.0);
    plot.legend(0, "#7f7f7f", "orbits");
    plot.legend(1, "#1f77b4", "chart level");
    plot.legend(2, "#d62728", "free boundary");
    plot.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_of_a_plane_is_straight() {
        let d = DomainSpec::unit_square(11);
        let u = GridField::from_fn(d, |x| x[1]);
        let segs = contour(&u, 0.45);
        assert_eq!(segs.len(), 10);
        for s in &segs {
            assert!((s[0][1] - 0.45).abs() < 1e-12 && (s[1][1] - 0.45).abs() < 1e-12);
        }
    }

    #[test]
    fn plot_is_well_formed() {
        let d = DomainSpec::unit_square(9);
        let u = GridField::from_fn(d, |x| (0.5 - x[1]).max(0.0));
        let svg = contour_plot(&u, 4, &[[0.0, 0.5], [1.0, 0.5]], "u < & >");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt; &amp; &gt;"));
        assert_eq!(svg.matches("<path").count(), 4);
    }
}
