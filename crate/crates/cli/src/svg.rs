//! Minimal self-contained SVG line plots for trajectory norms.
//!
//! The renderer emits a fixed-size standalone SVG with axes, tick
//! labels, a legend, and one polyline per series. When every plotted
//! value is strictly positive the y axis switches to log scale, which
//! is the natural view for exponential convergence.

/// One curve to draw.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    /// Legend label.
    pub label: &'a str,
    /// Sample times (x values).
    pub times: &'a [f64],
    /// Values (y values), same length as `times`.
    pub values: &'a [f64],
    /// Draw dashed instead of solid.
    pub dashed: bool,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;
const COLORS: [&str; 4] = ["#3572a5", "#d9662c", "#3c8a4e", "#8a4e9c"];

fn format_tick(value: f64) -> String {
    let magnitude = value.abs();
    if value == 0.0 {
        "0".to_string()
    } else if (1e-3..1e4).contains(&magnitude) {
        let text = format!("{value:.3}");
        let trimmed = text.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        format!("{value:.1e}")
    }
}

/// Renders the series as a standalone SVG document.
///
/// Series must be nonempty and hold at least one point; callers
/// validate that.
pub fn render(title: &str, series: &[Series<'_>]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.times.iter().copied()).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.values.iter().copied()).collect();
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_y = ys.iter().all(|&y| y > 0.0);
    let map_y = |y: f64| if log_y { y.log10() } else { y };
    let y_min = ys.iter().map(|&y| map_y(y)).fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().map(|&y| map_y(y)).fold(f64::NEG_INFINITY, f64::max);

    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |t: f64, y: f64| -> (f64, f64) {
        let px = MARGIN_LEFT + (t - x_min) / x_span * plot_w;
        let py = MARGIN_TOP + (y_max - map_y(y)) / y_span * plot_h;
        (px, py)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"26\" font-size=\"16\" fill=\"#222222\">{}</text>\n",
        MARGIN_LEFT,
        escape(title)
    ));

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#888888\"/>\n"
    ));

    // X ticks.
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let t = x_min + frac * x_span;
        let x = MARGIN_LEFT + frac * plot_w;
        let y0 = MARGIN_TOP + plot_h;
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{y0:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#888888\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#222222\" \
             text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            format_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" fill=\"#222222\" \
         text-anchor=\"middle\">t (s)</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));

    // Y ticks (5 even divisions of the mapped range).
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let mapped = y_max - frac * y_span;
        let value = if log_y { 10f64.powf(mapped) } else { mapped };
        let y = MARGIN_TOP + frac * plot_h;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.1}\" \
             stroke=\"#888888\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#222222\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 9.0,
            y + 4.0,
            format_tick(value)
        ));
    }
    if log_y {
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" font-size=\"13\" fill=\"#222222\" \
             transform=\"rotate(-90 18 {:.1})\" text-anchor=\"middle\">|z_T| (log)</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0
        ));
    }

    // Curves.
    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let dash = if s.dashed { " stroke-dasharray=\"7 5\"" } else { "" };
        let mut points = String::new();
        for (&t, &v) in s.times.iter().zip(s.values.iter()) {
            if log_y && v <= 0.0 {
                continue;
            }
            let (x, y) = to_px(t, v);
            points.push_str(&format!("{x:.2},{y:.2} "));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash} \
             points=\"{}\"/>\n",
            points.trim_end()
        ));

        // Legend entry.
        let ly = MARGIN_TOP + 16.0 + idx as f64 * 18.0;
        let lx = WIDTH - MARGIN_RIGHT - 170.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>\n",
            lx + 28.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#222222\">{}</text>\n",
            lx + 34.0,
            ly + 4.0,
            escape(s.label)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
