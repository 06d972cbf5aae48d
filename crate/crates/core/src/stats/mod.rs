//! Aggregation across takes: onset densities, offset distributions and
//! per-note averages.
//!
//! Pooled samples are sorted before any sum, so every statistic is
//! bit-for-bit independent of the order the takes were supplied in.

mod kde;
mod labels;

use std::collections::BTreeMap;

use serde::Serialize;

pub use kde::{
    bandwidth_or_fallback, kde, silverman_bandwidth, silverman_rule, DensityCurve, StatsError, UniformGrid,
    BANDWIDTH_FLOOR, FALLBACK_BANDWIDTH,
};
pub use labels::{gm_component, lane_order, PitchLabels};

use crate::matching::{MatchResult, Recording, Tolerance};
use crate::score::GroundTruth;

/// Minimum number of points on a timeline density grid.
pub const MIN_TIMELINE_POINTS: usize = 1000;
/// Finest timeline grid step, in seconds.
pub const TIMELINE_STEP: f64 = 0.001;
/// Finest offset grid step, in seconds.
pub const OFFSET_STEP: f64 = 0.0005;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum BandwidthPolicy {
    /// Silverman's rule on the pooled samples.
    Silverman,
    /// Silverman's rule on each onset's distance to the nearest reference
    /// onset of the same pitch. Tracks timing spread rather than the spread
    /// of the whole piece.
    #[default]
    SilvermanResidual,
    Fixed(f64),
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn mean(sorted: &[f64]) -> Option<f64> {
    (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64)
}

/// Population standard deviation.
fn population_sd(sorted: &[f64]) -> Option<f64> {
    let m = mean(sorted)?;
    Some((sorted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / sorted.len() as f64).sqrt())
}

/// Signed distance from `x` to the closest reference value.
fn nearest_distance(sorted_reference: &[f64], x: f64) -> Option<f64> {
    let i = sorted_reference.partition_point(|&r| r < x);
    let after = sorted_reference.get(i).map(|r| x - r);
    let before = i.checked_sub(1).map(|j| x - sorted_reference[j]);
    match (before, after) {
        (Some(b), Some(a)) => Some(if a.abs() < b.abs() { a } else { b }),
        (b, a) => b.or(a),
    }
}

/// Timeline grid covering `[0, total]` with at least
/// [`MIN_TIMELINE_POINTS`] points and a step of at most 1 ms.
pub fn timeline_grid(total: f64) -> UniformGrid {
    let len = ((total / TIMELINE_STEP).ceil() as usize + 1).max(MIN_TIMELINE_POINTS);
    UniformGrid::spanning(0.0, total, len)
}

/// One density curve per pitch (any pitch in the piece or in a take),
/// pooling every take's onsets over the piece timeline.
pub fn onset_density_per_pitch(
    recordings: &[Recording],
    gt: &GroundTruth,
    policy: BandwidthPolicy,
) -> BTreeMap<u8, DensityCurve> {
    let grid = timeline_grid(gt.total_duration());
    let mut pitches = gt.pitches();
    for rec in recordings {
        pitches.extend(rec.notes.pitches());
    }
    pitches.sort_unstable();
    pitches.dedup();

    pitches
        .into_iter()
        .map(|pitch| {
            let onsets = sorted(
                recordings
                    .iter()
                    .flat_map(|r| r.notes.iter())
                    .filter(|n| n.pitch == pitch)
                    .map(|n| n.onset)
                    .collect(),
            );
            let bandwidth = match policy {
                BandwidthPolicy::Fixed(h) => h,
                BandwidthPolicy::Silverman => bandwidth_or_fallback(&onsets),
                BandwidthPolicy::SilvermanResidual => {
                    let reference: Vec<f64> = gt
                        .notes()
                        .iter()
                        .filter(|n| n.pitch == pitch)
                        .map(|n| n.onset)
                        .collect();
                    let residuals = sorted(onsets.iter().filter_map(|&x| nearest_distance(&reference, x)).collect());
                    bandwidth_or_fallback(&residuals)
                }
            };
            (pitch, kde(&onsets, bandwidth, grid))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitchSummary {
    pub pitch: u8,
    pub label: String,
    /// Every matched offset of this pitch across takes, ascending.
    pub offsets: Vec<f64>,
    pub curve: DensityCurve,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    /// Matched reference notes over all reference notes of this pitch,
    /// counted across takes.
    pub hit_rate: f64,
}

fn tolerance_of(results: &[MatchResult]) -> Tolerance {
    results.first().map_or(Tolerance::DEFAULT, |r| r.tolerance)
}

/// Offset distribution for every pitch of the piece.
pub fn offset_distribution_per_pitch(
    results: &[MatchResult],
    gt: &GroundTruth,
    labels: &PitchLabels,
) -> BTreeMap<u8, PitchSummary> {
    let notes = gt.notes();
    let tolerance = tolerance_of(results).seconds();
    gt.pitches()
        .into_iter()
        .map(|pitch| {
            let offsets = sorted(
                results
                    .iter()
                    .flat_map(|r| r.matches.iter())
                    .filter(|m| notes[m.gt_index].pitch == pitch)
                    .map(|m| m.offset)
                    .collect(),
            );
            let h = bandwidth_or_fallback(&offsets);
            let reach = offsets.iter().fold(tolerance, |acc, o| acc.max(o.abs())) + 4.0 * h;
            let len = ((2.0 * reach / OFFSET_STEP).ceil() as usize + 1).max(1001) | 1;
            let curve = kde(&offsets, h, UniformGrid::spanning(-reach, reach, len));
            let reference_count = notes.iter().filter(|n| n.pitch == pitch).count();
            let denominator = (reference_count * results.len()) as f64;
            let hit_rate = if denominator > 0.0 {
                offsets.len() as f64 / denominator
            } else {
                0.0
            };
            let summary = PitchSummary {
                pitch,
                label: labels.label(pitch),
                mean: mean(&offsets),
                stddev: population_sd(&offsets),
                offsets,
                curve,
                hit_rate,
            };
            (pitch, summary)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteAggregate {
    pub gt_index: usize,
    pub pitch: u8,
    pub onset: f64,
    pub match_count: usize,
    pub recording_count: usize,
    /// Absent when the note was never matched.
    pub mean_abs_offset: Option<f64>,
    pub mean_signed_offset: Option<f64>,
    pub miss_fraction: f64,
}

pub fn per_note_aggregate(results: &[MatchResult], gt: &GroundTruth) -> Vec<NoteAggregate> {
    let mut per_note: Vec<Vec<f64>> = vec![Vec::new(); gt.notes().len()];
    for r in results {
        for m in &r.matches {
            if let Some(slot) = per_note.get_mut(m.gt_index) {
                slot.push(m.offset);
            }
        }
    }
    let recording_count = results.len();
    per_note
        .into_iter()
        .zip(gt.notes().iter())
        .enumerate()
        .map(|(gt_index, (offsets, note))| {
            let offsets = sorted(offsets);
            let abs = sorted(offsets.iter().map(|o| o.abs()).collect());
            let match_count = offsets.len();
            NoteAggregate {
                gt_index,
                pitch: note.pitch,
                onset: note.onset,
                match_count,
                recording_count,
                mean_abs_offset: mean(&abs),
                mean_signed_offset: mean(&offsets),
                miss_fraction: if recording_count == 0 {
                    0.0
                } else {
                    1.0 - match_count as f64 / recording_count as f64
                },
            }
        })
        .collect()
}

/// Mean miss fraction over all notes, i.e. the share of
/// (note, take) pairs that went unmatched.
pub fn overall_miss_fraction(aggregates: &[NoteAggregate]) -> f64 {
    if aggregates.is_empty() {
        return 0.0;
    }
    aggregates.iter().map(|a| a.miss_fraction).sum::<f64>() / aggregates.len() as f64
}
