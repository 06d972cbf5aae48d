//! Per-pitch assignment of recorded notes to ground-truth notes.
//!
//! Within one pitch, both onset sequences are sorted and the pairing cost is
//! `|difference|`, so some optimal assignment never crosses: the i-th matched
//! reference note pairs with the i-th matched played note. That lets a plain
//! edit-distance style table find the best assignment, ranked first by the
//! number of pairs and then by the total absolute offset.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi_io::{self, Diagnostic, MidiError, Note, NoteList};
use crate::score::GroundTruth;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("tolerance must be a positive number of seconds, got {0}")]
    InvalidTolerance(f64),
    #[error("match result refers to {what} index {index}, but only {len} notes exist")]
    InconsistentResult {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("no notes could be matched, so no alignment offset exists")]
    NoMatches,
}

/// Largest accepted |onset difference| for a pair, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(0.25);

    pub fn new(seconds: f64) -> Result<Self, MatchError> {
        if seconds.is_finite() && seconds > 0.0 {
            Ok(Tolerance(seconds))
        } else {
            Err(MatchError::InvalidTolerance(seconds))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

/// One practice take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub id: String,
    pub notes: NoteList,
    pub source_path: String,
}

impl Recording {
    pub fn new(id: impl Into<String>, notes: NoteList) -> Self {
        Recording {
            id: id.into(),
            notes,
            source_path: String::new(),
        }
    }

    pub fn with_source(mut self, path: impl Into<String>) -> Self {
        self.source_path = path.into();
        self
    }

    /// Reads a take from SMF bytes, returning pairing diagnostics alongside.
    pub fn from_smf(
        id: impl Into<String>,
        source_path: impl Into<String>,
        bytes: &[u8],
    ) -> Result<(Self, Vec<Diagnostic>), MidiError> {
        let extraction = midi_io::read_notes(bytes)?;
        let rec = Recording::new(id, extraction.notes).with_source(source_path);
        Ok((rec, extraction.diagnostics))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteMatch {
    pub gt_index: usize,
    pub rec_index: usize,
    /// Recorded onset minus reference onset; negative means early.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub recording_id: String,
    pub tolerance: Tolerance,
    /// Sorted by `gt_index`.
    pub matches: Vec<NoteMatch>,
    pub missing: BTreeSet<usize>,
    pub surplus: BTreeSet<usize>,
}

impl MatchResult {
    pub fn total_abs_offset(&self) -> f64 {
        self.matches.iter().map(|m| m.offset.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", content = "offset", rename_all = "snake_case")]
pub enum ErrorClass {
    Correct(f64),
    Missing,
    Surplus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    pairs: u32,
    cost: f64,
}

impl Score {
    fn beats(self, other: Score) -> bool {
        self.pairs > other.pairs || (self.pairs == other.pairs && self.cost < other.cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Pair,
    SkipReference,
    SkipPlayed,
}

/// Best non-crossing assignment between two sorted onset lists. Returns
/// index pairs into the two slices.
pub fn assign_sorted(reference: &[f64], played: &[f64], tolerance: Tolerance) -> Vec<(usize, usize)> {
    let (m, n) = (reference.len(), played.len());
    let width = n + 1;
    let mut table = vec![Score { pairs: 0, cost: 0.0 }; (m + 1) * width];
    let mut steps = vec![Step::SkipReference; (m + 1) * width];
    steps[1..width].fill(Step::SkipPlayed);
    for i in 1..=m {
        for j in 1..=n {
            let mut best = table[(i - 1) * width + j];
            let mut step = Step::SkipReference;
            let skip_played = table[i * width + j - 1];
            if skip_played.beats(best) {
                best = skip_played;
                step = Step::SkipPlayed;
            }
            let diff = (played[j - 1] - reference[i - 1]).abs();
            if diff <= tolerance.seconds() {
                let prev = table[(i - 1) * width + j - 1];
                let paired = Score {
                    pairs: prev.pairs + 1,
                    cost: prev.cost + diff,
                };
                // Pairing wins ties.
                if !best.beats(paired) {
                    best = paired;
                    step = Step::Pair;
                }
            }
            table[i * width + j] = best;
            steps[i * width + j] = step;
        }
    }

    let mut pairs = Vec::new();
    let (mut i, mut j) = (m, n);
    while i > 0 && j > 0 {
        match steps[i * width + j] {
            Step::Pair => {
                pairs.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
            Step::SkipReference => i -= 1,
            Step::SkipPlayed => j -= 1,
        }
    }
    pairs.reverse();
    pairs
}

/// Matches two sorted note lists pitch by pitch.
pub fn match_notes(recording_id: &str, reference: &[Note], played: &[Note], tolerance: Tolerance) -> MatchResult {
    let mut by_pitch: BTreeMap<u8, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, n) in reference.iter().enumerate() {
        by_pitch.entry(n.pitch).or_default().0.push(i);
    }
    for (j, n) in played.iter().enumerate() {
        by_pitch.entry(n.pitch).or_default().1.push(j);
    }

    let mut matches = Vec::new();
    for (gt_idx, rec_idx) in by_pitch.values() {
        let gt_onsets: Vec<f64> = gt_idx.iter().map(|&i| reference[i].onset).collect();
        let rec_onsets: Vec<f64> = rec_idx.iter().map(|&j| played[j].onset).collect();
        for (a, b) in assign_sorted(&gt_onsets, &rec_onsets, tolerance) {
            let (gt_index, rec_index) = (gt_idx[a], rec_idx[b]);
            matches.push(NoteMatch {
                gt_index,
                rec_index,
                offset: played[rec_index].onset - reference[gt_index].onset,
            });
        }
    }
    matches.sort_by_key(|m| m.gt_index);

    let matched_gt: BTreeSet<usize> = matches.iter().map(|m| m.gt_index).collect();
    let matched_rec: BTreeSet<usize> = matches.iter().map(|m| m.rec_index).collect();
    MatchResult {
        recording_id: recording_id.to_string(),
        tolerance,
        matches,
        missing: (0..reference.len()).filter(|i| !matched_gt.contains(i)).collect(),
        surplus: (0..played.len()).filter(|j| !matched_rec.contains(j)).collect(),
    }
}

pub fn match_recording(gt: &GroundTruth, rec: &Recording, tolerance: Tolerance) -> MatchResult {
    match_notes(&rec.id, gt.notes().as_slice(), rec.notes.as_slice(), tolerance)
}

/// Per-note error classes for the reference and the take.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub reference: Vec<ErrorClass>,
    pub played: Vec<ErrorClass>,
}

pub fn classify(reference: &NoteList, played: &NoteList, result: &MatchResult) -> Result<Classification, MatchError> {
    let check = |what, index: usize, len: usize| {
        if index < len {
            Ok(())
        } else {
            Err(MatchError::InconsistentResult { what, index, len })
        }
    };
    let mut gt_classes = vec![ErrorClass::Missing; reference.len()];
    let mut rec_classes = vec![ErrorClass::Surplus; played.len()];
    for m in &result.matches {
        check("ground-truth", m.gt_index, reference.len())?;
        check("recorded", m.rec_index, played.len())?;
        gt_classes[m.gt_index] = ErrorClass::Correct(m.offset);
        rec_classes[m.rec_index] = ErrorClass::Correct(m.offset);
    }
    for &i in &result.missing {
        check("ground-truth", i, reference.len())?;
    }
    for &j in &result.surplus {
        check("recorded", j, played.len())?;
    }
    Ok(Classification {
        reference: gt_classes,
        played: rec_classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    #[default]
    None,
    MedianOffset,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Shifts a take so the median matched offset becomes zero. Onsets pushed
/// below zero are clamped. Re-matching the shifted take is up to the caller.
pub fn align_recording(
    gt: &GroundTruth,
    rec: &Recording,
    mode: AlignMode,
    tolerance: Tolerance,
) -> Result<Recording, MatchError> {
    match mode {
        AlignMode::None => Ok(rec.clone()),
        AlignMode::MedianOffset => {
            let provisional = match_recording(gt, rec, tolerance);
            let mut offsets: Vec<f64> = provisional.matches.iter().map(|m| m.offset).collect();
            let shift = median(&mut offsets).ok_or(MatchError::NoMatches)?;
            let notes = rec
                .notes
                .iter()
                .map(|n| Note {
                    onset: (n.onset - shift).max(0.0),
                    ..*n
                })
                .collect();
            Ok(Recording { notes, ..rec.clone() })
        }
    }
}
