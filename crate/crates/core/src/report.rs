//! Tables and SVG figures. Renderers only format values they are given.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageRecord;
use crate::matching::Matcher;
use crate::stats::{BootstrapResult, Condition, ConfusionMatrix, GroupSummary};

/// Placeholder for a missing table cell.
pub const MISSING: &str = "\u{2014}";

/// Machine-readable bundle of one evaluation run (`summary.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub k: usize,
    pub matchers: Vec<Matcher>,
    pub n_eval: usize,
    pub n_scored: usize,
    pub n_parse_failures: usize,
    pub n_skipped: usize,
    pub llm_accuracy: Option<f64>,
    pub groups: Vec<GroupSummary>,
    pub bootstrap: Vec<BootstrapResult>,
    /// Statistics that could not be computed, with the reason.
    pub bootstrap_skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub instance_id: String,
    pub x: f64,
    pub y: f64,
    pub correct: bool,
    pub matcher: Matcher,
}

/// Points for one matcher; records with either coverage absent are omitted.
pub fn scatter_points(records: &[CoverageRecord], matcher: Matcher) -> Vec<ScatterPoint> {
    records
        .iter()
        .filter(|r| r.matcher == matcher)
        .filter_map(|r| {
            Some(ScatterPoint {
                instance_id: r.instance_id.clone(),
                x: r.support_cov?,
                y: r.contradict_cov?,
                correct: r.correct,
                matcher,
            })
        })
        .collect()
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| format!("{x:.3}"))
}

const TABLE_HEADER: [&str; 8] = [
    "dataset",
    "condition",
    "support_token",
    "support_exact",
    "support_edit",
    "contradict_token",
    "contradict_exact",
    "contradict_edit",
];

/// Rows of the coverage table: dataset x condition, then support and
/// contradict means for token/exact/edit, rounded to 3 decimals.
pub fn coverage_table_rows(summaries: &[GroupSummary]) -> Vec<[String; 8]> {
    let mut keys: Vec<(String, Condition)> = Vec::new();
    for s in summaries {
        let key = (s.dataset.clone(), s.condition);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dataset, condition)| {
            let cell = |m: Matcher, support: bool| {
                let s = summaries
                    .iter()
                    .find(|s| s.dataset == dataset && s.condition == condition && s.matcher == m);
                fmt3(s.and_then(|s| {
                    if support {
                        s.mean_support_cov
                    } else {
                        s.mean_contradict_cov
                    }
                }))
            };
            [
                dataset.clone(),
                condition.to_string(),
                cell(Matcher::Token, true),
                cell(Matcher::Exact, true),
                cell(Matcher::Edit, true),
                cell(Matcher::Token, false),
                cell(Matcher::Exact, false),
                cell(Matcher::Edit, false),
            ]
        })
        .collect()
}

pub fn coverage_table_csv(summaries: &[GroupSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).unwrap();
    for row in coverage_table_rows(summaries) {
        w.write_record(&row).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Fixed-width text rendering of the coverage table.
pub fn coverage_table_text(summaries: &[GroupSummary]) -> String {
    let rows = coverage_table_rows(summaries);
    let mut widths: Vec<usize> = TABLE_HEADER.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            if i < 2 {
                s.push_str(c);
                s.extend(std::iter::repeat_n(' ', pad));
            } else {
                s.extend(std::iter::repeat_n(' ', pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(&TABLE_HEADER);
    out.push('\n');
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&line(&cells));
        out.push('\n');
    }
    out
}

/// Bootstrap results, one row per (statistic, matcher).
pub fn bootstrap_table_csv(dataset: &str, results: &[BootstrapResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "statistic",
        "matcher",
        "estimate",
        "ci_low",
        "ci_high",
        "significant",
        "side_proportion",
        "n_resamples",
        "seed",
    ])
    .unwrap();
    for r in results {
        w.write_record([
            dataset.to_string(),
            r.statistic.to_string(),
            r.matcher.to_string(),
            format!("{:.3}", r.estimate),
            format!("{:.3}", r.ci_low),
            format!("{:.3}", r.ci_high),
            r.significant.to_string(),
            format!("{:.3}", r.side_proportion),
            r.n_resamples.to_string(),
            r.seed.to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["gold\\predicted".to_string()];
    header.extend(cm.labels.iter().cloned());
    w.write_record(&header).unwrap();
    for (label, row) in cm.labels.iter().zip(&cm.counts) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// White-to-blue ramp, `t` in [0, 1].
fn blue(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(247.0, 8.0),
        lerp(251.0, 48.0),
        lerp(255.0, 107.0)
    )
}

/// Heatmap of a confusion matrix: rows are gold labels, columns predictions.
pub fn render_heatmap(cm: &ConfusionMatrix, title: &str) -> String {
    let n = cm.labels.len();
    let cell = 48.0;
    let left = 140.0;
    let top = 60.0;
    let width = left + cell * n as f64 + 30.0;
    let height = top + cell * n as f64 + 130.0;
    let max = cm.max_count();
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    )
    .unwrap();
    for (i, row) in cm.counts.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            let t = if max == 0 {
                0.0
            } else {
                count as f64 / max as f64
            };
            let x = left + j as f64 * cell;
            let y = top + i as f64 * cell;
            let ink = if t > 0.5 { "white" } else { "black" };
            writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{}" stroke="#cccccc" data-gold="{}" data-pred="{}" data-count="{count}"/>"##,
                blue(t),
                escape(&cm.labels[i]),
                escape(&cm.labels[j])
            )
            .unwrap();
            writeln!(
                s,
                r#"<text class="count" x="{}" y="{}" font-size="13" text-anchor="middle" fill="{ink}">{count}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 5.0
            )
            .unwrap();
        }
    }
    for (i, label) in cm.labels.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
            left - 8.0,
            top + i as f64 * cell + cell / 2.0 + 4.0,
            escape(label)
        )
        .unwrap();
        let cx = left + i as f64 * cell + cell / 2.0;
        let cy = top + n as f64 * cell + 10.0;
        writeln!(
            s,
            r#"<text x="{cx}" y="{cy}" font-size="12" text-anchor="end" transform="rotate(-45 {cx} {cy})">{}</text>"#,
            escape(label)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">LLM prediction</text>"#,
        left + cell * n as f64 / 2.0,
        height - 12.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">Gold label</text>"#,
        top + cell * n as f64 / 2.0,
        top + cell * n as f64 / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

/// Support (x) vs contradiction (y) coverage on fixed [0, 1] axes.
pub fn render_scatter(points: &[ScatterPoint], title: &str) -> String {
    let (w, h) = (420.0, 420.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + x.clamp(0.0, 1.0) * pw;
    let py = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * ph;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    )
    .unwrap();
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        writeln!(
            s,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#eeeeee"/><text x="{0}" y="{3}" font-size="11" text-anchor="middle">{4:.1}</text>"##,
            px(v),
            top,
            top + ph,
            top + ph + 16.0,
            v
        )
        .unwrap();
        writeln!(
            s,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#eeeeee"/><text x="{3}" y="{4}" font-size="11" text-anchor="end">{5:.1}</text>"##,
            left,
            py(v),
            left + pw,
            left - 6.0,
            py(v) + 4.0,
            v
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<rect class="axes" x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">Support coverage</text>"#,
        left + pw / 2.0,
        h - 18.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{0}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {0})">Contradiction coverage</text>"#,
        top + ph / 2.0
    )
    .unwrap();
    for p in points {
        let (x, y) = (px(p.x), py(p.y));
        if p.correct {
            writeln!(
                s,
                r##"<circle class="point correct" cx="{x:.2}" cy="{y:.2}" r="4" fill="#1f77b4" fill-opacity="0.6" data-id="{}"/>"##,
                escape(&p.instance_id)
            )
            .unwrap();
        } else {
            writeln!(
                s,
                r##"<path class="point incorrect" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="#d62728" stroke-width="2" data-id="{}"/>"##,
                x - 4.0,
                y - 4.0,
                x + 4.0,
                y + 4.0,
                x - 4.0,
                y + 4.0,
                x + 4.0,
                y - 4.0,
                escape(&p.instance_id)
            )
            .unwrap();
        }
    }
    let lx = left + pw - 110.0;
    let ly = top + 12.0;
    writeln!(
        s,
        r##"<g class="legend"><rect x="{}" y="{}" width="104" height="42" fill="white" stroke="#999999"/><circle cx="{}" cy="{}" r="4" fill="#1f77b4"/><text x="{}" y="{}" font-size="11">correct</text><path d="M{},{}L{},{}M{},{}L{},{}" stroke="#d62728" stroke-width="2"/><text x="{}" y="{}" font-size="11">incorrect</text></g>"##,
        lx - 4.0,
        ly - 10.0,
        lx + 6.0,
        ly + 2.0,
        lx + 16.0,
        ly + 6.0,
        lx + 2.0,
        ly + 16.0,
        lx + 10.0,
        ly + 24.0,
        lx + 2.0,
        ly + 24.0,
        lx + 10.0,
        ly + 16.0,
        lx + 16.0,
        ly + 24.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
