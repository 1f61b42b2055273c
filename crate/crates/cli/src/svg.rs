use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Self-contained SVG line chart; x is the sample index.
pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let (w, h, pad) = (800.0, 420.0, 56.0);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(2);
    let all = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0) };
    let x = |i: usize| pad + (w - 2.0 * pad) * i as f64 / (n - 1) as f64;
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    for (v, anchor_y) in [(lo, h - pad), (hi, pad)] {
        let _ = writeln!(out, r#"<text x="{}" y="{anchor_y}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.3}</text>"#, pad - 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{} (0..{})</text>"#, w / 2.0, h - 16.0, escape(x_label), n - 1);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        // at most about one point per horizontal pixel
        let stride = (s.values.len() / (w as usize)).max(1);
        let mut d = String::new();
        for (i, v) in s.values.iter().enumerate().step_by(stride).filter(|(_, v)| v.is_finite()) {
            let _ = write!(d, "{}{:.1} {:.1} ", if d.is_empty() { "M" } else { "L" }, x(i), y(*v));
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1"/>"#, d.trim_end());
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#, w - pad - 120.0, pad + 16.0 * k as f64, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
