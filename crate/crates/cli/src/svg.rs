//! Histogram overlay written as plain SVG text. White bars are the
//! minimum-l1 estimator, black bars least squares.

use std::fmt::Write;

use crate::io::SCHEMA_VERSION;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// `edges` has one more entry than each count vector.
pub fn histogram_overlay(title: &str, edges: &[f64], counts_d: &[usize], counts_ls: &[usize]) -> String {
    let bins = counts_d.len();
    assert_eq!(counts_ls.len(), bins);
    assert_eq!(edges.len(), bins + 1);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let max = counts_d.iter().chain(counts_ls).copied().max().unwrap_or(0).max(1) as f64;
    let bin_w = plot_w / bins.max(1) as f64;
    let y_of = |c: usize| TOP + plot_h * (1.0 - c as f64 / max);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, "<!-- l1dom histogram, schema_version {SCHEMA_VERSION} -->");
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-schema-version="{SCHEMA_VERSION}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for k in 0..bins {
        let x = LEFT + k as f64 * bin_w;
        let half = bin_w / 2.0;
        let yd = y_of(counts_d[k]);
        let yl = y_of(counts_ls[k]);
        let _ = writeln!(
            s,
            r#"<rect class="d" x="{x:.2}" y="{yd:.2}" width="{half:.2}" height="{:.2}" fill="white" stroke="black" stroke-width="0.8"/>"#,
            TOP + plot_h - yd
        );
        let _ = writeln!(
            s,
            r#"<rect class="ls" x="{:.2}" y="{yl:.2}" width="{half:.2}" height="{:.2}" fill="black" stroke="black" stroke-width="0.8"/>"#,
            x + half,
            TOP + plot_h - yl
        );
    }
    let base = TOP + plot_h;
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{base}" x2="{:.1}" y2="{base}" stroke="black"/>"#, LEFT + plot_w);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#);
    let ticks = 5.min(bins.max(1));
    for t in 0..=ticks {
        let i = t * bins / ticks;
        let x = LEFT + i as f64 * bin_w;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.3}</text>"#,
            base + 16.0,
            edges[i]
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end" dx="-4">{}</text>"#,
        TOP + 4.0,
        max as usize
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">relative error</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let lx = WIDTH - RIGHT - 170.0;
    let _ = writeln!(s, r#"<rect x="{lx:.1}" y="{TOP}" width="12" height="12" fill="white" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">minimum l1 (D)</text>"#,
        lx + 18.0,
        TOP + 11.0
    );
    let _ = writeln!(s, r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="black"/>"#, TOP + 18.0);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">least squares (LS)</text>"#,
        lx + 18.0,
        TOP + 29.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
