//! Report documents and their plain-text renderings.
//!
//! JSON reports hold no timestamps or host details, so identical inputs give
//! byte-identical reports. An undefined rate is `null`.

use std::fmt::Write as _;

use diarkit_core::sweep::{Phase2Report, SweepConfig, SweepResult};
use diarkit_core::text::NormalizationProfile;
use diarkit_core::{DerBreakdown, DerOptions, WerBreakdown};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerRow {
    pub recording_id: String,
    #[serde(flatten)]
    pub breakdown: DerBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerReport {
    pub metric: &'static str,
    pub options: DerOptions,
    pub recordings: Vec<DerRow>,
    pub aggregate: DerBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WerRow {
    pub recording_id: String,
    #[serde(flatten)]
    pub breakdown: WerBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WerReport {
    pub metric: &'static str,
    pub normalization: NormalizationProfile,
    pub recordings: Vec<WerRow>,
    pub aggregate: WerBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase1Section {
    pub best_threshold: f64,
    #[serde(flatten)]
    pub result: SweepResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase1: Option<Phase1Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase2: Option<Phase2Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase3: Option<SweepResult>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn rate(r: Option<f64>) -> String {
    r.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

/// Left-aligned first column, right-aligned others, two-space gutters.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            let pad = w - cell.chars().count();
            if i == 0 {
                text.push_str(cell);
                text.push_str(&" ".repeat(pad));
            } else {
                text.push_str("  ");
                text.push_str(&" ".repeat(pad));
                text.push_str(cell);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

fn der_cells(label: String, b: &DerBreakdown) -> Vec<String> {
    vec![
        label,
        format!("{:.3}", b.missed),
        format!("{:.3}", b.false_alarm),
        format!("{:.3}", b.confusion),
        format!("{:.3}", b.total_reference),
        rate(b.der),
    ]
}

const DER_HEADER: [&str; 6] = ["recording", "missed", "false_alarm", "confusion", "total", "der"];

pub fn der_table(report: &DerReport) -> String {
    let mut rows: Vec<Vec<String>> = report
        .recordings
        .iter()
        .map(|r| der_cells(r.recording_id.clone(), &r.breakdown))
        .collect();
    rows.push(der_cells("TOTAL".into(), &report.aggregate));
    render_table(&DER_HEADER, &rows)
}

fn wer_cells(label: String, b: &WerBreakdown) -> Vec<String> {
    vec![
        label,
        b.substitutions.to_string(),
        b.deletions.to_string(),
        b.insertions.to_string(),
        b.reference_tokens.to_string(),
        rate(b.wer),
    ]
}

pub fn wer_table(report: &WerReport) -> String {
    let mut rows: Vec<Vec<String>> = report
        .recordings
        .iter()
        .map(|r| wer_cells(r.recording_id.clone(), &r.breakdown))
        .collect();
    rows.push(wer_cells("TOTAL".into(), &report.aggregate));
    render_table(&["recording", "sub", "del", "ins", "ref_tokens", "wer"], &rows)
}

/// One row per configuration; the selected one is marked with `*`.
pub fn sweep_table(result: &SweepResult) -> String {
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mark = if i == result.best { "* " } else { "  " };
            let label = match row.config {
                SweepConfig::Threshold { threshold } => format!("{mark}threshold={threshold}"),
                SweepConfig::Postprocess(_) => format!("{mark}{}", row.config),
            };
            match &row.breakdown {
                Some(b) => der_cells(label, b),
                None => {
                    let mut cells = vec![label];
                    cells.extend(std::iter::repeat_n("-".to_string(), 4));
                    cells.push(format!("failed: {}", row.error.as_deref().unwrap_or("unknown")));
                    cells
                }
            }
        })
        .collect();
    let mut header = DER_HEADER;
    header[0] = "config";
    render_table(&header, &rows)
}

pub fn sweep_text(report: &SweepReport) -> String {
    let mut out = String::new();
    if let Some(p1) = &report.phase1 {
        let _ = writeln!(out, "phase 1: threshold sweep (best threshold {})", p1.best_threshold);
        out.push_str(&sweep_table(&p1.result));
    }
    if let Some(p2) = &report.phase2 {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "phase 2: cached raw predictions at threshold {} (digest {}): {} fetched, {} reused, {} failed",
            p2.threshold,
            p2.digest,
            p2.fetched,
            p2.reused,
            p2.failures.len()
        );
        for f in &p2.failures {
            let _ = writeln!(out, "  {}: {}", f.recording_id, f.message);
        }
    }
    if let Some(p3) = &report.phase3 {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "phase 3: post-processing sweep (best {})", p3.best_row().config);
        out.push_str(&sweep_table(p3));
    }
    out
}
