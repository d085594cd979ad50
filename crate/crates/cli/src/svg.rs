//! Minimal static SVG writer.

use std::fmt::Write as _;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg { width, height, body: String::new() }
    }

    pub fn line(&mut self, a: [f64; 2], b: [f64; 2], stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="{width}"/>"#,
            a[0], a[1], b[0], b[1]
        );
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], stroke: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            points(pts)
        );
    }

    pub fn polygon(&mut self, pts: &[[f64; 2]], fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="0.35" stroke="{stroke}" stroke-width="0.8"/>"#,
            points(pts)
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}"/>"#);
    }

    pub fn circle(&mut self, c: [f64; 2], r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{:.3}" cy="{:.3}" r="{r}" fill="{fill}"/>"#, c[0], c[1]);
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="monospace" font-size="12" fill="{fill}">{}</text>"#,
            escape(s)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn points(pts: &[[f64; 2]]) -> String {
    pts.iter().map(|p| format!("{:.3},{:.3}", p[0], p[1])).collect::<Vec<_>>().join(" ")
}

/// Affine map from a world rectangle onto the pixel canvas, y pointing up.
#[derive(Clone, Copy, Debug)]
pub struct View {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub pad: f64,
}

impl View {
    pub fn new(x: [f64; 2], y: [f64; 2], width: f64, height: f64) -> Self {
        View { x, y, width, height, pad: 20.0 }
    }

    /// Bounding view of a point cloud, grown by 5%.
    pub fn fit<'a>(pts: impl IntoIterator<Item = &'a [f64; 2]>, width: f64, height: f64) -> Self {
        let (mut x, mut y) = ([f64::INFINITY, f64::NEG_INFINITY], [f64::INFINITY, f64::NEG_INFINITY]);
        for p in pts {
            x = [x[0].min(p[0]), x[1].max(p[0])];
            y = [y[0].min(p[1]), y[1].max(p[1])];
        }
        if !x[0].is_finite() {
            return View::new([0.0, 1.0], [0.0, 1.0], width, height);
        }
        let gx = ((x[1] - x[0]) * 0.05).max(1e-9);
        let gy = ((y[1] - y[0]) * 0.05).max(1e-9);
        View::new([x[0] - gx, x[1] + gx], [y[0] - gy, y[1] + gy], width, height)
    }

    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        let u = (p[0] - self.x[0]) / (self.x[1] - self.x[0]);
        let v = (p[1] - self.y[0]) / (self.y[1] - self.y[0]);
        [self.pad + u * (self.width - 2.0 * self.pad), self.height - self.pad - v * (self.height - 2.0 * self.pad)]
    }

    pub fn map_all(&self, pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        pts.iter().map(|&p| self.map(p)).collect()
    }
}
