//! Box plots of per-replication efficiencies as standalone SVG.
//!
//! One pair of boxes (strong, weak) per procedure. Whiskers reach the most
//! extreme values within 1.5 IQR of the box; points beyond are drawn as
//! outliers. Infinite efficiencies (zero realized error) are left out of the
//! statistics and counted in the `data-infinite` attribute.

use std::fmt::Write;

use spectral_stop::mc::{Procedure, ReplicationRecord, Summary};

const STRONG: &str = "#3b6ea5";
const WEAK: &str = "#d9773b";
const PANEL_HEIGHT: f64 = 320.0;
const TOP: f64 = 50.0;
const LEFT: f64 = 70.0;
const GROUP_WIDTH: f64 = 150.0;
const BOX_WIDTH: f64 = 40.0;

struct BoxStats {
    summary: Summary,
    lower_whisker: f64,
    upper_whisker: f64,
    outliers: Vec<f64>,
    infinite: usize,
    count: usize,
}

fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let summary = Summary::of(&finite)?;
    let iqr = summary.q3 - summary.q1;
    let (lo, hi) = (summary.q1 - 1.5 * iqr, summary.q3 + 1.5 * iqr);
    let inside = finite.iter().copied().filter(|v| (lo..=hi).contains(v));
    let lower_whisker = inside.clone().fold(f64::INFINITY, f64::min);
    let upper_whisker = inside.fold(f64::NEG_INFINITY, f64::max);
    let mut outliers: Vec<f64> = finite.iter().copied().filter(|v| !(lo..=hi).contains(v)).collect();
    outliers.sort_by(f64::total_cmp);
    Some(BoxStats {
        summary,
        lower_whisker,
        upper_whisker,
        outliers,
        infinite: values.len() - finite.len(),
        count: finite.len(),
    })
}

fn tick_step(top: f64) -> f64 {
    let raw = top / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// Renders the efficiency box plot for the records of a `mc` run.
pub fn render(records: &[ReplicationRecord], title: &str) -> String {
    let procedures: Vec<Procedure> =
        Procedure::ALL.into_iter().filter(|p| records.iter().any(|r| r.procedure == *p)).collect();
    let groups: Vec<(Procedure, [Option<BoxStats>; 2])> = procedures
        .iter()
        .map(|&p| {
            let rows = records.iter().filter(|r| r.procedure == p);
            let strong: Vec<f64> = rows.clone().map(|r| r.eff_strong).collect();
            let weak: Vec<f64> = rows.map(|r| r.eff_weak).collect();
            (p, [box_stats(&strong), box_stats(&weak)])
        })
        .collect();

    let data_max = groups
        .iter()
        .flat_map(|(_, b)| b.iter().flatten())
        .map(|b| b.outliers.last().copied().unwrap_or(b.upper_whisker).max(b.summary.max))
        .fold(1.0, f64::max);
    let step = tick_step(data_max * 1.05);
    let y_top = (data_max * 1.05 / step).ceil() * step;
    let y = |v: f64| TOP + PANEL_HEIGHT * (1.0 - (v / y_top).clamp(0.0, 1.0));

    let width = LEFT + GROUP_WIDTH * groups.len().max(1) as f64 + 30.0;
    let height = TOP + PANEL_HEIGHT + 90.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, escape(title));

    let _ = writeln!(s, r#"<g class="axis">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#,
        TOP + PANEL_HEIGHT
    );
    let mut k = 0;
    loop {
        let v = k as f64 * step;
        if v > y_top + 1e-9 * step {
            break;
        }
        let yy = y(v);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{yy:.2}" x2="{LEFT}" y2="{yy:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, yy + 4.0, trim(v));
        k += 1;
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">relative efficiency</text>"#,
        TOP + PANEL_HEIGHT / 2.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        y(1.0),
        width - 30.0
    );
    let _ = writeln!(s, "</g>");

    for (gi, (p, boxes)) in groups.iter().enumerate() {
        let center = LEFT + GROUP_WIDTH * (gi as f64 + 0.5);
        for (bi, (stats, norm, color)) in
            boxes.iter().zip([("strong", STRONG), ("weak", WEAK)]).map(|(b, (n, c))| (b, n, c)).enumerate()
        {
            let Some(b) = stats else { continue };
            let cx = center + if bi == 0 { -0.6 } else { 0.6 } * BOX_WIDTH;
            let x0 = cx - BOX_WIDTH / 2.0;
            let m = &b.summary;
            let _ = writeln!(
                s,
                r#"<g class="box" data-procedure="{}" data-norm="{norm}" data-count="{}" data-infinite="{}" data-q1="{}" data-median="{}" data-q3="{}" data-whisker-low="{}" data-whisker-high="{}">"#,
                p.name(),
                b.count,
                b.infinite,
                m.q1,
                m.median,
                m.q3,
                b.lower_whisker,
                b.upper_whisker
            );
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
                y(b.lower_whisker),
                y(b.upper_whisker)
            );
            for w in [b.lower_whisker, b.upper_whisker] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="{color}"/>"#,
                    cx - BOX_WIDTH / 4.0,
                    y(w),
                    cx + BOX_WIDTH / 4.0
                );
            }
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{:.2}" width="{BOX_WIDTH}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#,
                y(m.q3),
                (y(m.q1) - y(m.q3)).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line class="median" x1="{x0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{1:.2}" stroke="black" stroke-width="2"/>"#,
                x0 + BOX_WIDTH,
                y(m.median)
            );
            for o in &b.outliers {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx:.2}" cy="{:.2}" r="2" fill="none" stroke="{color}"/>"#,
                    y(*o)
                );
            }
            let _ = writeln!(s, "</g>");
        }
        let _ = writeln!(
            s,
            r#"<text x="{center:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + PANEL_HEIGHT + 20.0,
            p.name()
        );
    }

    let ly = TOP + PANEL_HEIGHT + 55.0;
    for (i, (label, color)) in [("strong norm", STRONG), ("weak norm", WEAK)].iter().enumerate() {
        let lx = LEFT + 130.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="14" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#,
            ly - 11.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{label}</text>"#, lx + 20.0);
    }
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let t = format!("{v:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
