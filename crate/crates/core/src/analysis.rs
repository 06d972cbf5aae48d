//! Whole-session pipeline: align, match, aggregate, export.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::matching::{align_recording, match_recording, AlignMode, MatchResult, Recording, Tolerance};
use crate::score::{compute_grid, GroundTruth};
use crate::stats::{
    lane_order, offset_distribution_per_pitch, onset_density_per_pitch, overall_miss_fraction, per_note_aggregate,
    BandwidthPolicy, DensityCurve, NoteAggregate, PitchLabels, PitchSummary,
};

/// Significant digits kept for floats in exported JSON.
pub const JSON_SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub tolerance: Tolerance,
    pub align: AlignMode,
    /// Takes after alignment, in input order.
    pub recordings: Vec<Recording>,
    pub results: Vec<MatchResult>,
    pub density: BTreeMap<u8, DensityCurve>,
    pub summaries: BTreeMap<u8, PitchSummary>,
    pub aggregates: Vec<NoteAggregate>,
    pub overall_miss_fraction: f64,
}

/// Runs the full analysis. A take with no matches cannot be median
/// aligned and is kept as played.
pub fn analyze(
    gt: &GroundTruth,
    recordings: Vec<Recording>,
    tolerance: Tolerance,
    align: AlignMode,
    labels: &PitchLabels,
) -> Analysis {
    let recordings: Vec<Recording> = recordings
        .into_iter()
        .map(|r| align_recording(gt, &r, align, tolerance).unwrap_or(r))
        .collect();
    let results: Vec<MatchResult> = recordings.iter().map(|r| match_recording(gt, r, tolerance)).collect();
    let density = onset_density_per_pitch(&recordings, gt, BandwidthPolicy::default());
    let summaries = offset_distribution_per_pitch(&results, gt, labels);
    let aggregates = per_note_aggregate(&results, gt);
    let overall = overall_miss_fraction(&aggregates);
    Analysis {
        tolerance,
        align,
        recordings,
        results,
        density,
        summaries,
        aggregates,
        overall_miss_fraction: overall,
    }
}

#[derive(Serialize)]
struct CurveExport<'a> {
    grid_start: f64,
    grid_step: f64,
    bandwidth: f64,
    sample_count: usize,
    values: &'a [f64],
}

fn curve(c: &DensityCurve) -> CurveExport<'_> {
    CurveExport {
        grid_start: c.grid_start,
        grid_step: c.grid_step,
        bandwidth: c.bandwidth,
        sample_count: c.sample_count,
        values: &c.values,
    }
}

/// Rounds every non-integer float to [`JSON_SIGNIFICANT_DIGITS`].
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(f) = n.as_f64() {
                let rounded: f64 = format!("{:.*e}", JSON_SIGNIFICANT_DIGITS - 1, f).parse().unwrap_or(f);
                if let Some(r) = serde_json::Number::from_f64(rounded) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// The `analysis.json` document as a JSON value.
pub fn to_json(gt: &GroundTruth, analysis: &Analysis, labels: &PitchLabels) -> Value {
    let recordings: Vec<Value> = analysis
        .recordings
        .iter()
        .zip(&analysis.results)
        .map(|(rec, res)| {
            json!({
                "id": rec.id,
                "source": rec.source_path,
                "note_count": rec.notes.len(),
                "counts": {
                    "correct": res.matches.len(),
                    "missing": res.missing.len(),
                    "surplus": res.surplus.len(),
                },
                "matches": res.matches,
                "missing": res.missing,
                "surplus": res.surplus,
            })
        })
        .collect();

    let pitches: Vec<Value> = lane_order(&analysis.density.keys().copied().collect::<Vec<_>>())
        .into_iter()
        .map(|pitch| {
            let summary = analysis.summaries.get(&pitch);
            json!({
                "pitch": pitch,
                "label": labels.label(pitch),
                "reference_count": gt.notes().iter().filter(|n| n.pitch == pitch).count(),
                "hit_rate": summary.map(|s| s.hit_rate),
                "mean_offset": summary.and_then(|s| s.mean),
                "stddev_offset": summary.and_then(|s| s.stddev),
                "offset_count": summary.map_or(0, |s| s.offsets.len()),
                "offset_density": summary.map(|s| curve(&s.curve)),
                "onset_density": analysis.density.get(&pitch).map(curve),
            })
        })
        .collect();

    let mut doc = json!({
        "format": "drumdiff-analysis",
        "version": 1,
        "tolerance": analysis.tolerance,
        "align": analysis.align,
        "ground_truth": {
            "division": gt.division(),
            "total_duration": gt.total_duration(),
            "notes": gt.notes(),
            "measures": compute_grid(gt).measures,
        },
        "recordings": recordings,
        "pitches": pitches,
        "notes": analysis.aggregates,
        "overall_miss_fraction": analysis.overall_miss_fraction,
    });
    round_floats(&mut doc);
    doc
}

/// Pretty-printed `analysis.json` text with a trailing newline.
pub fn export_json(gt: &GroundTruth, analysis: &Analysis, labels: &PitchLabels) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(gt, analysis, labels)).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn ms(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:+.1}", x * 1000.0))
}

/// Plain aligned table: one row per reference pitch, top lane first.
pub fn summary_table(analysis: &Analysis) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>5} {:>6} {:>9} {:>9} {:>7}",
        "label", "pitch", "hit", "mean ms", "sd ms", "n"
    );
    let pitches: Vec<u8> = analysis.summaries.keys().copied().collect();
    for pitch in lane_order(&pitches) {
        let s = &analysis.summaries[&pitch];
        let _ = writeln!(
            out,
            "{:<6} {:>5} {:>6.2} {:>9} {:>9} {:>7}",
            s.label,
            pitch,
            s.hit_rate,
            ms(s.mean),
            s.stddev
                .map_or_else(|| "-".to_string(), |x| format!("{:.1}", x * 1000.0)),
            s.offsets.len()
        );
    }
    let (correct, missing, surplus) = analysis.results.iter().fold((0, 0, 0), |acc, r| {
        (
            acc.0 + r.matches.len(),
            acc.1 + r.missing.len(),
            acc.2 + r.surplus.len(),
        )
    });
    let _ = writeln!(
        out,
        "takes {}  correct {}  missing {}  surplus {}  miss fraction {:.3}",
        analysis.results.len(),
        correct,
        missing,
        surplus,
        analysis.overall_miss_fraction
    );
    out
}
