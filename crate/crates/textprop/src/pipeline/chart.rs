//! Standalone SVG 1.1 grouped bar charts for stage comparisons.
//!
//! One chart (plus a CSV dump of the plotted values) per metric. The y axis
//! is fixed to [0, 1] with gridlines every 0.2, so a metric value of 1.0
//! reaches the top gridline exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::Stage;
use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

const STAGE_ORDER: [Stage; 4] = [
    Stage::Baseline,
    Stage::LpSsl,
    Stage::Full,
    Stage::FullySupervised,
];

fn stage_color(stage: Stage) -> &'static str {
    match stage {
        Stage::Baseline => "#4285f4",
        Stage::LpSsl => "#a0c4ff",
        Stage::Full => "#34a853",
        Stage::FullySupervised => "#fbbc05",
    }
}

fn stage_label(stage: Stage) -> &'static str {
    match stage {
        Stage::Baseline => "baseline",
        Stage::LpSsl => "lp-ssl",
        Stage::Full => "label propagation",
        Stage::FullySupervised => "fully supervised",
    }
}

/// One plotted value: the x group (e.g. a sweep value), the stage, and the
/// metric value (`None` bars are skipped but still listed in the CSV).
#[derive(Debug, Clone)]
pub struct ChartPoint {
    pub group: String,
    pub stage: Stage,
    pub value: Option<f64>,
}

fn y_of(value: f64) -> String {
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    format!("{:.2}", MARGIN_TOP + (1.0 - value) * plot_h)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render one metric chart and its CSV. Returns the two paths written.
pub fn emit_chart(
    points: &[ChartPoint],
    metric: &str,
    axis_name: &str,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let mut groups: Vec<&str> = Vec::new();
    for p in points {
        if !groups.contains(&p.group.as_str()) {
            groups.push(&p.group);
        }
    }
    let stages: Vec<Stage> = STAGE_ORDER
        .into_iter()
        .filter(|s| points.iter().any(|p| p.stage == *s))
        .collect();

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / stages.len().max(1) as f64;

    let mut svg = String::new();
    writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{} by {}</text>"#,
        WIDTH / 2.0,
        xml_escape(metric),
        xml_escape(axis_name)
    )
    .unwrap();

    // horizontal gridlines every 0.2, labeled on the left
    for i in 0..=5 {
        let v = i as f64 * 0.2;
        let y = y_of(v);
        writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y}" x2="{:.2}" y2="{y}" stroke="#cccccc" stroke-width="1"/>"##,
            WIDTH - MARGIN_RIGHT
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{y}" font-family="sans-serif" font-size="12" text-anchor="end" dy="4">{v:.1}</text>"#,
            MARGIN_LEFT - 8.0
        )
        .unwrap();
    }

    // bars
    let baseline_y = y_of(0.0);
    for (gi, group) in groups.iter().enumerate() {
        let group_left = MARGIN_LEFT + gi as f64 * group_w + group_w * 0.1;
        for (si, stage) in stages.iter().enumerate() {
            let Some(point) = points
                .iter()
                .find(|p| p.group == *group && p.stage == *stage)
            else {
                continue;
            };
            let Some(value) = point.value else { continue };
            let v = value.clamp(0.0, 1.0);
            let x = group_left + si as f64 * bar_w;
            let y = y_of(v);
            let height = (v * plot_h).max(0.0);
            writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{y}" width="{:.2}" height="{height:.2}" fill="{}"/>"#,
                bar_w * 0.92,
                stage_color(*stage)
            )
            .unwrap();
        }
        // group tick label
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + gi as f64 * group_w + group_w / 2.0,
            HEIGHT - MARGIN_BOTTOM + 20.0,
            xml_escape(group)
        )
        .unwrap();
    }

    // axis lines and labels
    writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{baseline_y}" stroke="black" stroke-width="1"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" y1="{baseline_y}" x2="{:.2}" y2="{baseline_y}" stroke="black" stroke-width="1"/>"#,
        WIDTH - MARGIN_RIGHT
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 18.0,
        xml_escape(axis_name)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(metric)
    )
    .unwrap();

    // legend, top-left inside the plot
    for (si, stage) in stages.iter().enumerate() {
        let lx = MARGIN_LEFT + 10.0;
        let ly = MARGIN_TOP + 8.0 + si as f64 * 18.0;
        writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{ly:.2}" width="12" height="12" fill="{}"/>"#,
            stage_color(*stage)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 18.0,
            ly + 10.0,
            stage_label(*stage)
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();

    let svg_path = out_dir.join(format!("chart_{metric}.svg"));
    std::fs::write(&svg_path, &svg)?;

    // the CSV next to the SVG carries exactly the plotted values
    let mut csv = String::from("group,stage,value\n");
    for group in &groups {
        for stage in &stages {
            if let Some(point) = points
                .iter()
                .find(|p| p.group == *group && p.stage == *stage)
            {
                let value = point.value.map(|v| v.to_string()).unwrap_or_default();
                writeln!(csv, "{},{},{}", group, stage, value).unwrap();
            }
        }
    }
    let csv_path = out_dir.join(format!("chart_{metric}.csv"));
    std::fs::write(&csv_path, csv)?;
    Ok((svg_path, csv_path))
}
