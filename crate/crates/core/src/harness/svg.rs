//! Minimal deterministic SVG bar charts.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;

pub const PALETTE: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#9c755f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Index into [`PALETTE`], wrapping.
    pub series: usize,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders bars left to right with heights scaled to the largest value.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let base = TOP + plot_h;
    let max = bars.iter().map(|b| b.value).fold(0.0, f64::max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{base:.2}" stroke="#333333"/>"##
    );
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#333333"/>"##,
        WIDTH - RIGHT
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        LEFT - 6.0,
        TOP + 4.0,
        fmt_value(max)
    );

    if !bars.is_empty() {
        let slot = plot_w / bars.len() as f64;
        let bw = slot * 0.7;
        for (i, b) in bars.iter().enumerate() {
            let h = if max > 0.0 {
                b.value / max * plot_h
            } else {
                0.0
            };
            let x = LEFT + slot * i as f64 + (slot - bw) / 2.0;
            let cx = x + bw / 2.0;
            let _ = writeln!(
                s,
                r#"<rect class="bar" x="{x:.2}" y="{:.2}" width="{bw:.2}" height="{h:.2}" fill="{}"><title>{}: {}</title></rect>"#,
                base - h,
                PALETTE[b.series % PALETTE.len()],
                escape(&b.label),
                fmt_value(b.value)
            );
            let _ = writeln!(
                s,
                r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
                base - h - 4.0,
                fmt_value(b.value)
            );
            let _ = writeln!(
                s,
                r#"<text x="{cx:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10" transform="rotate(-40 {cx:.2} {:.2})">{}</text>"#,
                base + 14.0,
                base + 14.0,
                escape(&b.label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_value(v: f64) -> String {
    format!("{v:.3}")
}
