//! Dependency-free SVG plotting: trajectory fans colored by skill,
//! statistic scatters, and per-seed curve bundles with a mean trace.

use crate::analysis::TrajectoryRecord;
use crate::Result;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

/// Fixed palette: `n` evenly spaced hues at 70% saturation, 45%
/// lightness. The same skill index always maps to the same color.
pub fn skill_palette(n: usize) -> Vec<String> {
    (0..n.max(1))
        .map(|i| {
            let h = 360.0 * i as f64 / n.max(1) as f64;
            let (r, g, b) = hsl_to_rgb(h, 0.70, 0.45);
            format!("#{r:02x}{g:02x}{b:02x}")
        })
        .collect()
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    (
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    )
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_bounds(mut x_min: f64, mut x_max: f64, mut y_min: f64, mut y_max: f64) -> Self {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            x_min = 0.0;
            x_max = 1.0;
        }
        if !(y_min.is_finite() && y_max.is_finite()) || y_min >= y_max {
            y_min = 0.0;
            y_max = 1.0;
        }
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn document(body: &str, title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let axis = format!(
        concat!(
            "<rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#444\"/>",
            "<text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>",
            "<text x=\"{cx}\" y=\"{xy}\" text-anchor=\"middle\" font-size=\"12\">{xl}</text>",
            "<text x=\"14\" y=\"{cy}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {cy})\">{yl}</text>",
            "<text x=\"{m}\" y=\"{bx}\" font-size=\"10\">{x0:.3}</text>",
            "<text x=\"{xr}\" y=\"{bx}\" text-anchor=\"end\" font-size=\"10\">{x1:.3}</text>",
            "<text x=\"{lx}\" y=\"{yb}\" text-anchor=\"end\" font-size=\"10\">{y0:.3}</text>",
            "<text x=\"{lx}\" y=\"{yt}\" text-anchor=\"end\" font-size=\"10\">{y1:.3}</text>",
        ),
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN,
        cx = WIDTH / 2.0,
        cy = HEIGHT / 2.0,
        ty = MARGIN - 16.0,
        xy = HEIGHT - 10.0,
        bx = HEIGHT - MARGIN + 14.0,
        xr = WIDTH - MARGIN,
        lx = MARGIN - 4.0,
        yb = HEIGHT - MARGIN,
        yt = MARGIN + 8.0,
        title = title,
        xl = x_label,
        yl = y_label,
        x0 = frame.x_min,
        x1 = frame.x_max,
        y0 = frame.y_min,
        y1 = frame.y_max,
    );
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>{axis}{body}</svg>"
    )
}

/// Trajectory fan: every record drawn as a polyline per agent, colored
/// by skill; start points marked.
pub fn trajectory_fan_svg(records: &[TrajectoryRecord], k_max: usize, title: &str) -> String {
    let frame = Frame::from_bounds(-1.05, 1.05, -1.05, 1.05);
    let palette = skill_palette(k_max.max(1));
    let mut body = String::new();
    for r in records {
        let color = &palette[r.skill % palette.len()];
        for path in &r.positions {
            if path.is_empty() {
                continue;
            }
            let pts: Vec<String> = path
                .iter()
                .map(|p| format!("{:.2},{:.2}", frame.px(p[0]), frame.py(p[1])))
                .collect();
            body.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" opacity=\"0.75\"/>",
                pts.join(" ")
            ));
            body.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"{color}\"/>",
                frame.px(path[0][0]),
                frame.py(path[0][1])
            ));
        }
    }
    document(&body, title, "x", "y", &frame)
}

/// Scatter of (x, y) points colored by skill.
pub fn scatter_svg(
    points: &[(usize, f64, f64)],
    k_max: usize,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(_, x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad_x = (x1 - x0).abs().max(1e-9) * 0.05;
    let pad_y = (y1 - y0).abs().max(1e-9) * 0.05;
    let frame = Frame::from_bounds(x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y);
    let palette = skill_palette(k_max.max(1));
    let mut body = String::new();
    for &(skill, x, y) in points {
        body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" opacity=\"0.8\"/>",
            frame.px(x),
            frame.py(y),
            palette[skill % palette.len()]
        ));
    }
    document(&body, title, x_label, y_label, &frame)
}

/// One named curve: (x, y) samples.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub emphasis: bool,
}

/// Curve bundle (per-seed traces thin, means thick).
pub fn curves_svg(curves: &[Curve], title: &str, x_label: &str, y_label: &str) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for &(x, y) in &c.points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    let pad_y = (y1 - y0).abs().max(1e-9) * 0.05;
    let frame = Frame::from_bounds(x0, x1, y0 - pad_y, y1 + pad_y);
    let mut body = String::new();
    let mut legend_y = MARGIN + 14.0;
    for c in curves {
        if c.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let (width, opacity) = if c.emphasis { (2.5, 1.0) } else { (1.0, 0.45) };
        body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\" opacity=\"{opacity}\"/>",
            pts.join(" "),
            c.color
        ));
        if c.emphasis {
            body.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-size=\"11\" fill=\"{}\">{}</text>",
                MARGIN + 8.0,
                c.color,
                c.label
            ));
            legend_y += 14.0;
        }
    }
    document(&body, title, x_label, y_label, &frame)
}

pub fn write_svg(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_colors_distinct() {
        let colors = skill_palette(30);
        assert_eq!(colors.len(), 30);
        let mut unique = colors.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 30, "30 skills need 30 distinct colors");
        assert!(colors.iter().all(|c| c.len() == 7 && c.starts_with('#')));
    }

    #[test]
    fn empty_inputs_yield_valid_svg() {
        let fan = trajectory_fan_svg(&[], 8, "empty");
        assert!(fan.starts_with("<svg") && fan.ends_with("</svg>"));
        let sc = scatter_svg(&[], 8, "empty", "a", "b");
        assert!(sc.starts_with("<svg") && sc.ends_with("</svg>"));
        let cu = curves_svg(&[], "empty", "x", "y");
        assert!(cu.starts_with("<svg") && cu.ends_with("</svg>"));
    }

    #[test]
    fn curves_render_points() {
        let c = Curve {
            label: "mean".into(),
            points: vec![(0.0, 0.0), (10.0, 1.0)],
            color: "#336699".into(),
            emphasis: true,
        };
        let svg = curves_svg(&[c], "mi", "episode", "bits");
        assert!(svg.contains("polyline"));
        assert!(svg.contains("mean"));
    }
}
