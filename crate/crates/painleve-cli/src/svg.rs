//! Minimal self-contained SVG rendering: line charts and category rasters.
//! CSV is the authoritative output; these exist so results can be eyeballed
//! without leaving the terminal's working directory.

use std::fmt::Write;

const W: f64 = 840.0;
const H: f64 = 520.0;
const ML: f64 = 72.0; // margins
const MR: f64 = 24.0;
const MT: f64 = 40.0;
const MB: f64 = 56.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
    pub color: &'a str,
    pub dashed: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

struct Mapper {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    axes: Axes,
}

impl Mapper {
    fn tx(&self, x: f64) -> f64 {
        let (a, b, v) = if self.axes.log_x {
            (self.x0.ln(), self.x1.ln(), x.ln())
        } else {
            (self.x0, self.x1, x)
        };
        ML + (W - ML - MR) * (v - a) / (b - a)
    }
    fn ty(&self, y: f64) -> f64 {
        let (a, b, v) = if self.axes.log_y {
            (self.y0.ln(), self.y1.ln(), y.ln())
        } else {
            (self.y0, self.y1, y)
        };
        H - MB - (H - MT - MB) * (v - a) / (b - a)
    }
}

/// Render series into one chart. Non-finite points break the polyline, so
/// NaN gaps in sweep data render as gaps rather than artifacts.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    axes: Axes,
) -> String {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for s in series {
        for p in s.points.iter().filter(finite) {
            if axes.log_x && p.0 <= 0.0 || axes.log_y && p.1 <= 0.0 {
                continue;
            }
            x0 = x0.min(p.0);
            x1 = x1.max(p.0);
            y0 = y0.min(p.1);
            y1 = y1.max(p.1);
        }
    }
    if !(x0 < x1) {
        x1 = x0 + 1.0;
    }
    if !(y0 < y1) {
        y1 = y0 + 1.0;
    }
    if !axes.log_y {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let m = Mapper { x0, x1, y0, y1, axes };

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        esc(title)
    );

    // frame and ticks
    let _ = write!(
        out,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        W - ML - MR,
        H - MT - MB
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = if axes.log_x {
            (x0.ln() + (x1.ln() - x0.ln()) * f).exp()
        } else {
            x0 + (x1 - x0) * f
        };
        let yv = if axes.log_y {
            (y0.ln() + (y1.ln() - y0.ln()) * f).exp()
        } else {
            y0 + (y1 - y0) * f
        };
        let px = m.tx(xv);
        let py = m.ty(yv);
        let _ = write!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{}\" x2=\"{px:.1}\" y2=\"{}\" stroke=\"#888\"/>\n\
             <text x=\"{px:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            H - MB,
            H - MB + 5.0,
            H - MB + 20.0,
            fmt_tick(xv)
        );
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{py:.1}\" x2=\"{ML}\" y2=\"{py:.1}\" stroke=\"#888\"/>\n\
             <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            ML - 5.0,
            ML - 9.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0,
        esc(x_label),
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        esc(y_label)
    );

    // data
    for s in series {
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let mut path = String::new();
        let mut pen_up = true;
        for p in s.points {
            if !(p.0.is_finite() && p.1.is_finite())
                || (axes.log_x && p.0 <= 0.0)
                || (axes.log_y && p.1 <= 0.0)
            {
                pen_up = true;
                continue;
            }
            let cmd = if pen_up { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", m.tx(p.0), m.ty(p.1));
            pen_up = false;
        }
        let _ = write!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n",
            path.trim_end(),
            s.color
        );
    }

    // legend
    for (i, s) in series.iter().enumerate() {
        let y = MT + 16.0 + 18.0 * i as f64;
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n\
             <text x=\"{}\" y=\"{:.1}\">{}</text>\n",
            W - MR - 150.0,
            W - MR - 120.0,
            s.color,
            W - MR - 112.0,
            y + 4.0,
            esc(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A marker cross with a label, drawn on top of a raster.
pub struct Marker<'a> {
    pub x: f64,
    pub y: f64,
    pub label: &'a str,
}

/// Render a categorical raster (cell centers on a uniform grid) with overlay
/// curves and markers. `cell` returns a fill color per `(ix, iy)`.
#[allow(clippy::too_many_arguments)]
pub fn category_raster(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    cell: impl Fn(usize, usize) -> &'static str,
    legend: &[(&str, &str)],
    overlays: &[Series],
    markers: &[Marker],
) -> String {
    assert!(xs.len() > 1 && ys.len() > 1);
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let (y0, y1) = (ys[0], ys[ys.len() - 1]);
    let m = Mapper {
        x0,
        x1,
        y0,
        y1,
        axes: Axes::default(),
    };
    let cw = (W - ML - MR) / (xs.len() - 1) as f64;
    let ch = (H - MT - MB) / (ys.len() - 1) as f64;

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        esc(title)
    );
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let _ = write!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                m.tx(x) - cw / 2.0,
                m.ty(y) - ch / 2.0,
                cw + 0.5,
                ch + 0.5,
                cell(i, j)
            );
        }
    }
    let (xlo, xhi) = (x0.min(x1), x0.max(x1));
    let (ylo, yhi) = (y0.min(y1), y0.max(y1));
    for s in overlays {
        let mut path = String::new();
        let mut pen_up = true;
        for p in s.points {
            // lift the pen outside the plotted window instead of drawing
            // into the margins
            if !(p.0.is_finite() && p.1.is_finite())
                || p.0 < xlo
                || p.0 > xhi
                || p.1 < ylo
                || p.1 > yhi
            {
                pen_up = true;
                continue;
            }
            let cmd = if pen_up { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", m.tx(p.0), m.ty(p.1));
            pen_up = false;
        }
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = write!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>\n",
            path.trim_end(),
            s.color
        );
    }
    for mk in markers {
        let (px, py) = (m.tx(mk.x), m.ty(mk.y));
        let _ = write!(
            out,
            "<path d=\"M{:.1} {py:.1} L{:.1} {py:.1} M{px:.1} {:.1} L{px:.1} {:.1}\" \
             stroke=\"black\" stroke-width=\"1.5\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-weight=\"bold\">{}</text>\n",
            px - 6.0,
            px + 6.0,
            py - 6.0,
            py + 6.0,
            px + 8.0,
            py - 8.0,
            esc(mk.label)
        );
    }
    // frame, ticks, labels
    let _ = write!(
        out,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        W - ML - MR,
        H - MT - MB
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = x0 + (x1 - x0) * f;
        let yv = y0 + (y1 - y0) * f;
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            m.tx(xv),
            H - MB + 20.0,
            fmt_tick(xv),
            ML - 9.0,
            m.ty(yv) + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0,
        esc(x_label),
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        esc(y_label)
    );
    for (i, (name, color)) in legend.iter().enumerate() {
        let y = MT + 16.0 + 18.0 * i as f64;
        let _ = write!(
            out,
            "<rect x=\"{}\" y=\"{:.1}\" width=\"14\" height=\"14\" fill=\"{}\" stroke=\"#444\"/>\n\
             <text x=\"{}\" y=\"{:.1}\">{}</text>\n",
            W - MR - 150.0,
            y - 10.0,
            color,
            W - MR - 130.0,
            y + 2.0,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_data_and_labels() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)];
        let gap = [(0.0, 1.0), (f64::NAN, f64::NAN), (2.0, 2.0)];
        let svg = line_chart(
            "demo",
            "x",
            "y",
            &[
                Series { label: "a", points: &pts, color: "#1f77b4", dashed: false },
                Series { label: "b", points: &gap, color: "#d62728", dashed: true },
            ],
            Axes::default(),
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("demo"));
        assert!(svg.contains("stroke-dasharray"));
        // the NaN row lifts the pen: second path has two move commands
        let second = svg.split("<path").nth(2).unwrap();
        assert_eq!(second.matches('M').count(), 2);
    }

    #[test]
    fn log_axes_skip_nonpositive_points() {
        let pts = [(1e-3, 1.0), (1e-2, 0.1), (0.0, 5.0), (1e-1, 0.01)];
        let svg = line_chart(
            "log",
            "x",
            "y",
            &[Series { label: "c", points: &pts, color: "#000", dashed: false }],
            Axes { log_x: true, log_y: true },
        );
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn raster_marks_cells_and_markers() {
        let xs = [0.0, 0.5, 1.0];
        let ys = [0.0, 1.0];
        let svg = category_raster(
            "regions",
            "x",
            "y",
            &xs,
            &ys,
            |i, _| if i == 0 { "#eee" } else { "#ccc" },
            &[("low", "#eee"), ("high", "#ccc")],
            &[],
            &[Marker { x: 0.5, y: 0.5, label: "P" }],
        );
        assert!(svg.matches("<rect").count() >= 6 + 2);
        assert!(svg.contains(">P</text>"));
    }
}
