//! Static SVG convergence plots: `log10(gap)` against inner queries.
//!
//! [`render_svg`] is a pure function of the trace rows, so plots can be
//! rebuilt from CSV files alone.

use std::fmt::Write;

use crate::trace::TraceRow;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Points `(queries, log10 gap)` of one series, skipping rows whose gap is
/// not a positive finite number.
fn points(rows: &[TraceRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.gap.is_finite() && r.gap > 0.0)
        .map(|r| (r.queries as f64, r.gap.log10()))
        .collect()
}

/// Renders one plot with a line per `(label, rows)` series.
pub fn render_svg(title: &str, series: &[(String, Vec<TraceRow>)]) -> String {
    let data: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(label, rows)| (label.as_str(), points(rows)))
        .collect();
    let all = data.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x_max, mut y_min, mut y_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let empty = !y_min.is_finite();
    if empty {
        y_min = -1.0;
        y_max = 0.0;
    }
    let y_lo = y_min.floor();
    let mut y_hi = y_max.ceil();
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    if x_max <= 0.0 {
        x_max = 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let decades = (y_hi - y_lo) as i64;
    let stride = (decades / 10 + 1).max(1);
    let mut d = y_lo as i64;
    while d <= y_hi as i64 {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
        d += stride;
    }
    for k in 0..=4 {
        let q = x_max * k as f64 / 4.0;
        let x = sx(q);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{q:.3e}</text>"#,
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">inner queries</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">objective gap</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    if empty {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no positive gaps to plot</text>"#,
            LEFT + pw / 2.0,
            TOP + ph / 2.0
        );
    }

    for (k, (label, pts)) in data.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        } else if let Some(&(x, y)) = pts.first() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(q: u64, gap: f64) -> TraceRow {
        TraceRow {
            iter: q,
            queries: q,
            objective: gap,
            gap,
            grad_est_sq: f64::NAN,
            ms: 0.0,
            coupling: f64::NAN,
        }
    }

    #[test]
    fn renders_series_and_legend() {
        let series = vec![
            (
                "a<b".to_string(),
                vec![row(0, 1.0), row(10, 1e-3), row(20, 0.0)],
            ),
            ("c".to_string(), vec![row(0, f64::NAN)]),
        ];
        let svg = render_svg("t", &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("1e-3"));
        assert_eq!(svg, render_svg("t", &series));
    }

    #[test]
    fn empty_plot_has_note() {
        let svg = render_svg("t", &[("x".into(), vec![row(0, f64::NAN)])]);
        assert!(svg.contains("no positive gaps"));
    }
}
