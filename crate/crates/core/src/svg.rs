//! Static SVG rendering of a [`Report`].

use std::fmt::Write;

use crate::report::Report;

pub const PLOT_SIZE: f64 = 640.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 30.0;
const STRIP_GAP: f64 = 40.0;
const STRIP_HEIGHT: f64 = 80.0;
const LEGEND_WIDTH: f64 = 300.0;

pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#393b79", "#637939",
];

fn px(v: f64) -> f64 {
    MARGIN_LEFT + v * PLOT_SIZE
}

fn py(v: f64) -> f64 {
    MARGIN_TOP + (1.0 - v) * PLOT_SIZE
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Square reliability plot with a dashed diagonal, one polyline per binned
/// curve, step paths (and bands) for learned curves, a density strip below
/// and a legend with ECE values.
pub fn render_svg(report: &Report) -> String {
    let width = MARGIN_LEFT + PLOT_SIZE + LEGEND_WIDTH;
    let strip_top = MARGIN_TOP + PLOT_SIZE + STRIP_GAP;
    let height = strip_top + STRIP_HEIGHT + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{PLOT_SIZE}" height="{PLOT_SIZE}" fill="none" stroke="#333"/>"##
    );
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"##,
            px(v),
            MARGIN_TOP + PLOT_SIZE + 16.0,
            MARGIN_LEFT - 6.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">predicted probability</text>"#,
        px(0.5),
        MARGIN_TOP + PLOT_SIZE + 32.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">observed frequency</text>"#,
        py(0.5),
        py(0.5)
    );
    let _ = writeln!(
        s,
        r##"<line class="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="6 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );

    let max_density = report
        .curves
        .iter()
        .flat_map(|c| c.binned.density.counts.iter().copied())
        .max()
        .unwrap_or(0)
        .max(1) as f64;

    for (i, curve) in report.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(lrd) = &curve.lrd {
            if lrd.grid.iter().all(|g| g.lo.is_some()) {
                let mut pts: Vec<String> = lrd
                    .grid
                    .iter()
                    .map(|g| format!("{:.2},{:.2}", px(g.x), py(g.hi.unwrap_or(g.f))))
                    .collect();
                pts.extend(
                    lrd.grid
                        .iter()
                        .rev()
                        .map(|g| format!("{:.2},{:.2}", px(g.x), py(g.lo.unwrap_or(g.f)))),
                );
                let _ = writeln!(
                    s,
                    r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
            let mut d = String::new();
            let base = lrd.base_logit;
            for (b, w) in lrd.cut_points.windows(2).enumerate() {
                let f = crate::lrd::sigmoid(base + lrd.piece_logits[b]);
                let cmd = if b == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2},{:.2} H{:.2} ", px(w[0]), py(f), px(w[1]));
            }
            let _ = writeln!(
                s,
                r#"<path class="lrd" d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                d.trim_end()
            );
        }
        let pts: Vec<String> = curve
            .binned
            .diagram
            .bins
            .iter()
            .map(|b| format!("{:.2},{:.2}", px(b.conf), py(b.acc)))
            .collect();
        let dash = if curve.lrd.is_some() { r#" stroke-dasharray="2 2""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline class="binned" points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
        for b in &curve.binned.diagram.bins {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(b.conf),
                py(b.acc)
            );
        }

        let density = &curve.binned.density;
        for (k, &c) in density.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let h = c as f64 / max_density * STRIP_HEIGHT;
            let x0 = px(density.edges[k]);
            let x1 = px(density.edges[k + 1]);
            let _ = writeln!(
                s,
                r#"<rect class="density" x="{x0:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{color}" fill-opacity="0.35"/>"#,
                strip_top + STRIP_HEIGHT - h,
                x1 - x0
            );
        }

        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let lx = MARGIN_LEFT + PLOT_SIZE + 20.0;
        let mut label = format!("{} {}", curve.binned.curve.model, curve.binned.curve.mode);
        if let Some(g) = &curve.binned.curve.subgroup {
            let _ = write!(label, " [{g}]");
        }
        let _ = write!(label, " ECE {:.4}", curve.binned.metrics.ece);
        if let Some(lrd) = &curve.lrd {
            let _ = write!(label, " LRD {:.4}", lrd.lrd_expected_error);
        }
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
            ly - 10.0,
            lx + 18.0,
            ly,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333"/>"##,
        strip_top + STRIP_HEIGHT,
        px(1.0),
        strip_top + STRIP_HEIGHT
    );
    s.push_str("</svg>\n");
    s
}
