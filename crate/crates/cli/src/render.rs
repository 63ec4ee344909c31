//! Deterministic SVG rendering of curve tables.

use crate::error::{CliError, CliResult};
use expose_core::TOOL_VERSION;
use std::fmt::Write as _;

pub const CANVAS_WIDTH: f64 = 800.0;
pub const CANVAS_HEIGHT: f64 = 600.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 6] = ["#1f4e9c", "#c2410c", "#15803d", "#7e22ce", "#0f766e", "#b91c1c"];

/// A named planar polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Parses `index,re,im` or `curve,index,re,im` tables. Rows of one curve must be contiguous.
pub fn parse_curves(text: &str) -> CliResult<Vec<Curve>> {
    let mut curves: Vec<Curve> = Vec::new();
    let mut named = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields[0] == "index" || fields[0] == "curve" {
            named = Some(fields[0] == "curve");
            continue;
        }
        let is_named = *named.get_or_insert(fields.len() == 4);
        let expected = if is_named { 4 } else { 3 };
        if fields.len() != expected {
            return Err(CliError::input(format!("line {}: expected {expected} fields, got {}", line_no + 1, fields.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|e| CliError::input(format!("line {}: {e}: {s:?}", line_no + 1)))
        };
        let (name, re, im) = if is_named {
            (fields[0].to_string(), num(fields[2])?, num(fields[3])?)
        } else {
            ("curve".to_string(), num(fields[1])?, num(fields[2])?)
        };
        if !re.is_finite() || !im.is_finite() {
            continue;
        }
        match curves.last_mut() {
            Some(c) if c.name == name => c.points.push((re, im)),
            _ => curves.push(Curve { name, points: vec![(re, im)] }),
        }
    }
    if curves.iter().all(|c| c.points.is_empty()) {
        return Err(CliError::input("empty data: no points in the table"));
    }
    Ok(curves)
}

/// Placement of data coordinates on the canvas; the y axis points up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform {
    /// Pixels per data unit along each axis.
    pub scale: (f64, f64),
    /// Data point drawn at the canvas centre.
    pub center: (f64, f64),
}

impl Transform {
    pub fn to_pixel(&self, p: (f64, f64)) -> (f64, f64) {
        (
            CANVAS_WIDTH / 2.0 + self.scale.0 * (p.0 - self.center.0),
            CANVAS_HEIGHT / 2.0 - self.scale.1 * (p.1 - self.center.1),
        )
    }

    /// Fits the bounding box of all points and marks into the canvas minus a margin, with equal
    /// axis scales unless `stretch` is set.
    pub fn fit(curves: &[Curve], marks: &[(f64, f64)], stretch: bool) -> Self {
        let pts = curves.iter().flat_map(|c| c.points.iter()).chain(marks.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let w = (x1 - x0).max(1e-12);
        let h = (y1 - y0).max(1e-12);
        let sx = (CANVAS_WIDTH - 2.0 * MARGIN) / w;
        let sy = (CANVAS_HEIGHT - 2.0 * MARGIN) / h;
        let scale = if stretch { (sx, sy) } else { (sx.min(sy), sx.min(sy)) };
        Transform { scale, center: ((x0 + x1) / 2.0, (y0 + y1) / 2.0) }
    }
}

/// Rendering controls.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RenderOptions {
    /// Fixed pixels per unit on both axes; fitted to the data when absent.
    pub scale: Option<f64>,
    /// Fit each axis separately, for profiles much flatter than they are wide.
    pub stretch: bool,
    /// Data point at the canvas centre; the data centre when absent.
    pub center: Option<(f64, f64)>,
    /// Points drawn as dots.
    pub marks: Vec<(f64, f64)>,
    /// Label recorded in the metadata comment.
    pub source: String,
}

/// Whether the curve reads as closed: its ends are within 5% of its bounding-box diagonal.
pub fn is_closed(c: &Curve) -> bool {
    if c.points.len() < 3 {
        return false;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &c.points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let diag = (x1 - x0).hypot(y1 - y0);
    let (a, b) = (c.points[0], c.points[c.points.len() - 1]);
    (a.0 - b.0).hypot(a.1 - b.1) < 0.05 * diag
}

/// Resolves the transform for `curves` under `opts`.
pub fn transform_for(curves: &[Curve], opts: &RenderOptions) -> Transform {
    let fitted = Transform::fit(curves, &opts.marks, opts.stretch);
    Transform { scale: opts.scale.map(|s| (s, s)).unwrap_or(fitted.scale), center: opts.center.unwrap_or(fitted.center) }
}

/// SVG document with one path per curve and one dot per mark.
pub fn render_svg(curves: &[Curve], opts: &RenderOptions) -> CliResult<String> {
    if curves.iter().all(|c| c.points.is_empty()) {
        return Err(CliError::input("empty data: nothing to render"));
    }
    if let Some(s) = opts.scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::input(format!("scale must be positive, got {s}")));
        }
    }
    let t = transform_for(curves, opts);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = CANVAS_WIDTH,
        h = CANVAS_HEIGHT
    );
    let _ = writeln!(
        out,
        "<!-- expose-lab {TOOL_VERSION} render: source={}; scale=({:.9e}, {:.9e}) px/unit; center=({:.9e}, {:.9e}) at ({}, {}); y up -->",
        opts.source.replace("--", "-"),
        t.scale.0,
        t.scale.1,
        t.center.0,
        t.center.1,
        CANVAS_WIDTH / 2.0,
        CANVAS_HEIGHT / 2.0
    );
    let _ = writeln!(out, r#"<rect width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" fill="white"/>"#);
    for (k, c) in curves.iter().enumerate() {
        if c.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, &p) in c.points.iter().enumerate() {
            let (x, y) = t.to_pixel(p);
            let _ = write!(d, "{}{:.3} {:.3}", if i == 0 { "M" } else { " L" }, x, y);
        }
        if is_closed(c) {
            d.push_str(" Z");
        }
        let _ = writeln!(
            out,
            r#"<path data-curve="{}" d="{d}" fill="none" stroke="{}" stroke-width="1"/>"#,
            escape(&c.name),
            PALETTE[k % PALETTE.len()]
        );
    }
    for &m in &opts.marks {
        let (x, y) = t.to_pixel(m);
        let _ = writeln!(out, r##"<circle data-mark="1" cx="{x:.3}" cy="{y:.3}" r="3" fill="#000000"/>"##);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Pixel polylines of the paths in an SVG produced by [`render_svg`].
pub fn parse_svg_paths(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    for line in svg.lines().filter(|l| l.starts_with("<path")) {
        let attr = |key: &str| {
            let start = line.find(&format!("{key}=\""))? + key.len() + 2;
            let end = start + line[start..].find('"')?;
            Some(line[start..end].to_string())
        };
        let (Some(name), Some(d)) = (attr("data-curve"), attr("d")) else { continue };
        let pts = d
            .split(['M', 'L'])
            .filter_map(|seg| {
                let mut it = seg.trim().trim_end_matches('Z').split_whitespace();
                Some((it.next()?.parse().ok()?, it.next()?.parse().ok()?))
            })
            .collect();
        out.push((name, pts));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_layouts() {
        let a = parse_curves("index,re,im\n0,1,2\n1,3,4\n").unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].points, vec![(1.0, 2.0), (3.0, 4.0)]);
        let b = parse_curves("curve,index,re,im\nx,0,1,2\nx,1,1,3\ny,0,0,0\n").unwrap();
        assert_eq!(b.len(), 2);
        assert!(parse_curves("index,re,im\n").is_err());
        assert!(parse_curves("index,re,im\n0,a,1\n").is_err());
    }

    #[test]
    fn fixed_scale_places_points() {
        let c = vec![Curve { name: "c".into(), points: vec![(1.0, 0.0), (0.0, 1.0)] }];
        let opts = RenderOptions { scale: Some(100.0), center: Some((0.0, 0.0)), ..Default::default() };
        let t = transform_for(&c, &opts);
        assert_eq!(t.to_pixel((1.0, 0.0)), (500.0, 300.0));
        assert_eq!(t.to_pixel((0.0, 1.0)), (400.0, 200.0));
        let svg = render_svg(&c, &opts).unwrap();
        let paths = parse_svg_paths(&svg);
        assert_eq!(paths[0].1, vec![(500.0, 300.0), (400.0, 200.0)]);
    }
}
