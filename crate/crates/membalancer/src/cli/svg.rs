//! Minimal self-contained SVG scatter plots: fixed viewbox, circles per
//! point, an optional fitted curve, no external dependencies. Axes follow the
//! sweep presentation: heap usage horizontal, GC time vertical.

use super::logcsv::fmt_num;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// One labeled point set.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [(f64, f64)],
}

struct Scale {
    min: f64,
    span: f64,
    pixel_origin: f64,
    pixel_span: f64,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>, pixel_origin: f64, pixel_span: f64) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        let pad = ((hi - lo) * 0.05).max(1e-9);
        let min = lo - pad;
        let span = (hi - lo) + 2.0 * pad;
        Self {
            min,
            span,
            pixel_origin,
            pixel_span,
        }
    }

    fn project(&self, v: f64) -> f64 {
        self.pixel_origin + (v - self.min) / self.span * self.pixel_span
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| self.min + self.span * i as f64 / 4.0)
            .collect()
    }
}

fn px(v: f64) -> String {
    format!("{:.2}", v)
}

/// Renders the scatter plot as a complete SVG document.
pub fn scatter_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
    curve: Option<&[(f64, f64)]>,
) -> String {
    let all_points = series
        .iter()
        .flat_map(|s| s.points.iter())
        .chain(curve.unwrap_or(&[]).iter());
    let xs = Scale::fit(
        all_points.clone().map(|p| p.0),
        MARGIN_LEFT,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
    );
    let ys = Scale::fit(
        all_points.map(|p| p.1),
        HEIGHT - MARGIN_BOTTOM,
        -(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM),
    );

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        px(WIDTH / 2.0),
        title
    ));

    // axes
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    out.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(x0),
        px(y0),
        px(x1),
        px(y0)
    ));
    out.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(x0),
        px(y0),
        px(x0),
        px(y1)
    ));
    for t in xs.ticks() {
        let x = xs.project(t);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            px(x),
            px(y0),
            px(x),
            px(y0 + 5.0)
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            px(x),
            px(y0 + 20.0),
            fmt_num(super::logcsv::round_sig(t, 4))
        ));
    }
    for t in ys.ticks() {
        let y = ys.project(t);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            px(x0 - 5.0),
            px(y),
            px(x0),
            px(y)
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            px(x0 - 8.0),
            px(y + 4.0),
            fmt_num(super::logcsv::round_sig(t, 4))
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        px((x0 + x1) / 2.0),
        px(HEIGHT - 10.0),
        x_label
    ));
    out.push_str(&format!(
        "  <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        px((y0 + y1) / 2.0),
        px((y0 + y1) / 2.0),
        y_label
    ));

    if let Some(curve) = curve {
        let pts: Vec<String> = curve
            .iter()
            .map(|&(x, y)| format!("{},{}", px(xs.project(x)), px(ys.project(y))))
            .collect();
        out.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n",
            pts.join(" ")
        ));
    }

    for (i, s) in series.iter().enumerate() {
        for &(x, y) in s.points {
            out.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\" fill-opacity=\"0.8\"/>\n",
                px(xs.project(x)),
                px(ys.project(y)),
                s.color
            ));
        }
        let legend_y = MARGIN_TOP + 14.0 * i as f64;
        out.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>\n",
            px(x1 - 120.0),
            px(legend_y),
            s.color
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">{}</text>\n",
            px(x1 - 110.0),
            px(legend_y + 4.0),
            s.label
        ));
    }

    out.push_str("</svg>\n");
    out
}
