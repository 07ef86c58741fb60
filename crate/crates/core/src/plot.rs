//! Minimal deterministic SVG charts for stats and benchmark reports.
//! Hand-rolled on purpose: the outputs are simple bar/line figures and the
//! files must be byte-stable across runs.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_BOTTOM: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_RIGHT: f64 = 20.0;

fn header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = WIDTH / 2.0,
        title = escape(title),
    )
}

fn axes(x_label: &str, y_label: &str, y_max: f64) -> String {
    let plot_bottom = HEIGHT - MARGIN_BOTTOM;
    let mut out = format!(
        concat!(
            "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
            "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
            "<text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\" font-size=\"12\">{x_label}</text>\n",
            "<text x=\"16\" y=\"{cy}\" text-anchor=\"middle\" font-size=\"12\" ",
            "transform=\"rotate(-90 16 {cy})\">{y_label}</text>\n"
        ),
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = plot_bottom,
        r = WIDTH - MARGIN_RIGHT,
        cx = (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        xl = HEIGHT - 12.0,
        cy = (MARGIN_TOP + plot_bottom) / 2.0,
        x_label = escape(x_label),
        y_label = escape(y_label),
    );
    for i in 0..=4 {
        let value = y_max * i as f64 / 4.0;
        let y = plot_bottom - (plot_bottom - MARGIN_TOP) * i as f64 / 4.0;
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y:.1}\" text-anchor=\"end\" font-size=\"10\">{value:.2}</text>\n",
            x = MARGIN_LEFT - 6.0,
        ));
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let y_max = bars.iter().map(|(_, v)| *v).fold(0.0, f64::max).max(1e-9);
    let mut svg = header(title) + &axes(x_label, y_label, y_max);
    let plot_bottom = HEIGHT - MARGIN_BOTTOM;
    let plot_width = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let slot = plot_width / bars.len().max(1) as f64;

    for (i, (label, value)) in bars.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + slot * 0.15;
        let bar_height = (plot_bottom - MARGIN_TOP) * value / y_max;
        let y = plot_bottom - bar_height;
        svg.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"#4878a8\"/>\n",
            w = slot * 0.7,
            h = bar_height,
        ));
        let label_x = MARGIN_LEFT + slot * (i as f64 + 0.5);
        svg.push_str(&format!(
            concat!(
                "<text x=\"{x:.1}\" y=\"{y}\" text-anchor=\"end\" font-size=\"10\" ",
                "transform=\"rotate(-35 {x:.1} {y})\">{label}</text>\n"
            ),
            x = label_x,
            y = plot_bottom + 14.0,
            label = escape(label),
        ));
    }
    svg + "</svg>\n"
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let y_max = points.iter().map(|(_, y)| *y).fold(0.0, f64::max).max(1e-9);
    let x_min = points.first().map(|(x, _)| *x).unwrap_or(0.0);
    let x_max = points.last().map(|(x, _)| *x).unwrap_or(1.0).max(x_min + 1e-9);
    let mut svg = header(title) + &axes(x_label, y_label, y_max);
    let plot_bottom = HEIGHT - MARGIN_BOTTOM;
    let plot_width = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;

    let project = |(x, y): (f64, f64)| {
        (
            MARGIN_LEFT + plot_width * (x - x_min) / (x_max - x_min),
            plot_bottom - (plot_bottom - MARGIN_TOP) * y / y_max,
        )
    };
    let path: Vec<String> = points
        .iter()
        .map(|&p| {
            let (x, y) = project(p);
            format!("{x:.1},{y:.1}")
        })
        .collect();
    if !path.is_empty() {
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#b0413e\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
    }
    for &point in points {
        let (x, y) = project(point);
        svg.push_str(&format!("<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"#b0413e\"/>\n"));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{ly}\" text-anchor=\"middle\" font-size=\"10\">{label}</text>\n",
            ly = plot_bottom + 14.0,
            label = point.0,
        ));
    }
    svg + "</svg>\n"
}
