use std::fmt::Write;

use crate::analysis::CkaReport;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#393b79", "#637939",
];

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 130.0;

pub struct Series {
    pub name: String,
    /// One value per x label; `None` breaks the line.
    pub values: Vec<Option<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick step: 1, 2 or 5 times a power of ten.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Line chart with categorical x labels. At most twelve series get distinct
/// colors; later ones reuse the palette.
pub fn line_chart(title: &str, y_label: &str, x_labels: &[String], series: &[Series]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_max = series
        .iter()
        .flat_map(|s| s.values.iter().flatten())
        .fold(0.0f64, |a, &b| a.max(b));
    let step = tick_step(if y_max > 0.0 { y_max } else { 1.0 });
    let top = (y_max / step).ceil().max(1.0) * step;
    let n = x_labels.len().max(1);
    let x = |i: usize| LEFT + if n == 1 { plot_w / 2.0 } else { plot_w * i as f64 / (n - 1) as f64 };
    let y = |v: f64| TOP + plot_h * (1.0 - v / top);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let mut t = 0.0;
    while t <= top + step * 1e-9 {
        let yy = y(t);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            yy + 4.0,
            format!("{t:.*}", if step < 1.0 { 2 } else { 0 })
        );
        t += step;
    }
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/><line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    for (i, label) in x_labels.iter().enumerate() {
        let (xx, yy) = (x(i), TOP + plot_h + 12.0);
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{xx:.1}" y="{yy:.1}" text-anchor="end" transform="rotate(-45 {xx:.1} {yy:.1})">{}</text>"#,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (i, v) in s.values.iter().enumerate().take(n) {
            match v {
                Some(v) => runs.last_mut().expect("non-empty").push((x(i), y(*v))),
                None => runs.push(Vec::new()),
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let points: Vec<String> = run.iter().map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            );
            for (a, b) in run {
                let _ = writeln!(out, r#"<circle cx="{a:.1}" cy="{b:.1}" r="2.5" fill="{color}"/>"#);
            }
        }
        let ly = TOP + 16.0 * si as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Linear white-to-blue ramp over [0, 1].
fn ramp(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Heatmap of a CKA report: rows are layers of model A, columns layers of B.
pub fn cka_heatmap(report: &CkaReport) -> String {
    let cell = 36.0;
    let (rows, cols) = (report.layers_a.len(), report.layers_b.len());
    let left = 140.0;
    let top = 50.0;
    let width = left + cell * cols as f64 + 20.0;
    let height = top + cell * rows as f64 + 130.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="24" font-size="14">frame CKA: {} vs {}</text>"#,
        escape(&report.model_a),
        escape(&report.model_b)
    );
    for (i, la) in report.layers_a.iter().enumerate() {
        let yy = top + cell * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            yy + cell / 2.0 + 4.0,
            escape(&la.layer_name)
        );
        for (j, value) in report.cka[i].iter().enumerate() {
            let xx = left + cell * j as f64;
            let (fill, label) = match value {
                Some(v) => (ramp(*v), format!("{v:.2}")),
                None => ("#bdbdbd".to_string(), "n/a".to_string()),
            };
            let ink = if value.is_some_and(|v| v > 0.6) { "white" } else { "black" };
            let _ = writeln!(
                out,
                r#"<rect class="cell" data-tap-a="{}" data-tap-b="{}" x="{xx:.1}" y="{yy:.1}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9" fill="{ink}">{label}</text>"#,
                la.layer_index,
                report.layers_b[j].layer_index,
                xx + cell / 2.0,
                yy + cell / 2.0 + 3.0
            );
        }
    }
    for (j, lb) in report.layers_b.iter().enumerate() {
        let (xx, yy) = (left + cell * j as f64 + cell / 2.0, top + cell * rows as f64 + 12.0);
        let _ = writeln!(
            out,
            r#"<text x="{xx:.1}" y="{yy:.1}" text-anchor="end" transform="rotate(-45 {xx:.1} {yy:.1})">{}</text>"#,
            escape(&lb.layer_name)
        );
    }
    out.push_str("</svg>\n");
    out
}
