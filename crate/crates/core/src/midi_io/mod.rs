//! Standard MIDI File input and output.
//!
//! Only tick-based division and formats 0/1 are accepted. Everything above
//! this module works in seconds; [`TempoMap`] does the conversion.

mod extract;
mod reader;
mod vlq;
mod writer;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_notes, Diagnostic, Extraction};
pub use reader::{parse_smf, EventKind, ParsedSmf, RawEvent};
pub use vlq::{encode_vlq, read_vlq, VLQ_MAX};
pub use writer::write_smf;

/// Tempo assumed when a file carries no tempo meta event (120 BPM).
pub const DEFAULT_MICROS_PER_QUARTER: u32 = 500_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MidiError {
    #[error("byte {offset}: expected chunk id {expected}")]
    BadMagic { offset: usize, expected: &'static str },
    #[error("byte {offset}: chunk extends past end of input")]
    TruncatedChunk { offset: usize },
    #[error("byte {offset}: input ends inside a variable-length quantity or event")]
    TruncatedInput { offset: usize },
    #[error("byte {offset}: variable-length quantity longer than 4 bytes")]
    Overlong { offset: usize },
    #[error("SMPTE time division {raw:#06x} is not supported")]
    UnsupportedDivision { raw: u16 },
    #[error("SMF format {format} is not supported")]
    UnsupportedFormat { format: u16 },
    #[error("byte {offset}: {reason}")]
    InvalidHeader { offset: usize, reason: String },
    #[error("byte {offset}: data byte {byte:#04x} without a running status")]
    MissingStatus { offset: usize, byte: u8 },
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

impl MidiError {
    /// Byte offset into the input where the problem was detected, if any.
    pub fn offset(&self) -> Option<usize> {
        match self {
            MidiError::BadMagic { offset, .. }
            | MidiError::TruncatedChunk { offset }
            | MidiError::TruncatedInput { offset }
            | MidiError::Overlong { offset }
            | MidiError::InvalidHeader { offset, .. }
            | MidiError::MissingStatus { offset, .. } => Some(*offset),
            MidiError::UnsupportedDivision { .. } | MidiError::UnsupportedFormat { .. } | MidiError::InvalidMap(_) => {
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmfFormat {
    SingleTrack,
    MultiTrack,
}

impl SmfFormat {
    pub fn code(self) -> u16 {
        match self {
            SmfFormat::SingleTrack => 0,
            SmfFormat::MultiTrack => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmfHeader {
    pub format: SmfFormat,
    pub track_count: u16,
    /// Ticks per quarter note.
    pub division: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TempoChange {
    pub tick: u64,
    pub micros_per_quarter: u32,
}

/// Piecewise-constant tempo over ticks. Always starts at tick 0 and has
/// strictly increasing ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TempoMap(Vec<TempoChange>);

impl TempoMap {
    /// Builds a map, inserting the 120 BPM default at tick 0 when the first
    /// entry starts later.
    pub fn new(mut changes: Vec<TempoChange>) -> Result<Self, MidiError> {
        if changes.first().is_none_or(|c| c.tick != 0) {
            changes.insert(
                0,
                TempoChange {
                    tick: 0,
                    micros_per_quarter: DEFAULT_MICROS_PER_QUARTER,
                },
            );
        }
        for pair in changes.windows(2) {
            if pair[1].tick <= pair[0].tick {
                return Err(MidiError::InvalidMap(format!(
                    "tempo ticks not strictly increasing at tick {}",
                    pair[1].tick
                )));
            }
        }
        if let Some(bad) = changes.iter().find(|c| c.micros_per_quarter == 0) {
            return Err(MidiError::InvalidMap(format!("zero tempo at tick {}", bad.tick)));
        }
        Ok(TempoMap(changes))
    }

    pub fn constant(micros_per_quarter: u32) -> Self {
        TempoMap(vec![TempoChange {
            tick: 0,
            micros_per_quarter: micros_per_quarter.max(1),
        }])
    }

    pub fn changes(&self) -> &[TempoChange] {
        &self.0
    }

    /// Seconds elapsed at `tick`. Accumulates tick-microseconds as integers
    /// and divides once, so results are exact whenever the quotient is.
    pub fn ticks_to_seconds(&self, tick: u64, division: u16) -> f64 {
        let mut micro_ticks: u128 = 0;
        for (i, change) in self.0.iter().enumerate() {
            if change.tick >= tick {
                break;
            }
            let segment_end = self.0.get(i + 1).map_or(tick, |next| next.tick.min(tick));
            micro_ticks += u128::from(segment_end - change.tick) * u128::from(change.micros_per_quarter);
        }
        micro_ticks as f64 / (f64::from(division) * 1e6)
    }

    /// Inverse of [`TempoMap::ticks_to_seconds`], returning fractional ticks.
    /// Negative input maps to tick 0.
    pub fn seconds_to_ticks(&self, seconds: f64, division: u16) -> f64 {
        let seconds = seconds.max(0.0);
        let div = f64::from(division);
        let mut segment_start_s = 0.0;
        for (i, change) in self.0.iter().enumerate() {
            let ticks_per_second = div * 1e6 / f64::from(change.micros_per_quarter);
            match self.0.get(i + 1) {
                Some(next) => {
                    let next_s = self.ticks_to_seconds(next.tick, division);
                    if seconds < next_s {
                        return change.tick as f64 + (seconds - segment_start_s) * ticks_per_second;
                    }
                    segment_start_s = next_s;
                }
                None => {
                    return change.tick as f64 + (seconds - segment_start_s) * ticks_per_second;
                }
            }
        }
        unreachable!("tempo map is never empty")
    }
}

impl Default for TempoMap {
    fn default() -> Self {
        TempoMap::constant(DEFAULT_MICROS_PER_QUARTER)
    }
}

/// Free-function form of [`TempoMap::ticks_to_seconds`].
pub fn ticks_to_seconds(tick: u64, tempo_map: &TempoMap, division: u16) -> f64 {
    tempo_map.ticks_to_seconds(tick, division)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSigChange {
    pub tick: u64,
    pub numerator: u8,
    /// Actual note value (4 = quarter), always a power of two.
    pub denominator: u8,
}

/// Time-signature changes with strictly increasing ticks, starting at tick 0
/// (4/4 when the file says nothing).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSigMap(Vec<TimeSigChange>);

impl TimeSigMap {
    pub fn new(mut changes: Vec<TimeSigChange>) -> Result<Self, MidiError> {
        if changes.first().is_none_or(|c| c.tick != 0) {
            changes.insert(
                0,
                TimeSigChange {
                    tick: 0,
                    numerator: 4,
                    denominator: 4,
                },
            );
        }
        for pair in changes.windows(2) {
            if pair[1].tick <= pair[0].tick {
                return Err(MidiError::InvalidMap(format!(
                    "time signature ticks not strictly increasing at tick {}",
                    pair[1].tick
                )));
            }
        }
        for c in &changes {
            if c.numerator == 0 || !c.denominator.is_power_of_two() {
                return Err(MidiError::InvalidMap(format!(
                    "invalid time signature {}/{} at tick {}",
                    c.numerator, c.denominator, c.tick
                )));
            }
        }
        Ok(TimeSigMap(changes))
    }

    pub fn constant(numerator: u8, denominator: u8) -> Result<Self, MidiError> {
        TimeSigMap::new(vec![TimeSigChange {
            tick: 0,
            numerator,
            denominator,
        }])
    }

    pub fn changes(&self) -> &[TimeSigChange] {
        &self.0
    }
}

impl Default for TimeSigMap {
    fn default() -> Self {
        TimeSigMap(vec![TimeSigChange {
            tick: 0,
            numerator: 4,
            denominator: 4,
        }])
    }
}

/// One played or notated note, timed in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub pitch: u8,
    pub onset: f64,
    pub duration: f64,
    pub velocity: u8,
    pub channel: u8,
}

impl Note {
    pub fn new(pitch: u8, onset: f64, duration: f64) -> Self {
        Note {
            pitch,
            onset,
            duration,
            velocity: 100,
            channel: 9,
        }
    }

    pub fn with_velocity(mut self, velocity: u8) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn with_channel(mut self, channel: u8) -> Self {
        self.channel = channel;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.pitch <= 127
            && self.channel <= 15
            && (1..=127).contains(&self.velocity)
            && self.onset.is_finite()
            && self.onset >= 0.0
            && self.duration.is_finite()
            && self.duration >= 0.0
    }

    fn sort_cmp(&self, other: &Self) -> Ordering {
        self.onset
            .total_cmp(&other.onset)
            .then(self.pitch.cmp(&other.pitch))
            .then(self.velocity.cmp(&other.velocity))
    }
}

/// Notes kept sorted by onset, then pitch, then velocity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoteList(Vec<Note>);

impl NoteList {
    pub fn new(mut notes: Vec<Note>) -> Self {
        notes.sort_by(Note::sort_cmp);
        NoteList(notes)
    }

    pub fn as_slice(&self) -> &[Note] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Note> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<Note> {
        self.0
    }

    /// Distinct pitches in ascending order.
    pub fn pitches(&self) -> Vec<u8> {
        let mut pitches: Vec<u8> = self.0.iter().map(|n| n.pitch).collect();
        pitches.sort_unstable();
        pitches.dedup();
        pitches
    }
}

impl std::ops::Index<usize> for NoteList {
    type Output = Note;

    fn index(&self, index: usize) -> &Note {
        &self.0[index]
    }
}

impl<'a> IntoIterator for &'a NoteList {
    type Item = &'a Note;
    type IntoIter = std::slice::Iter<'a, Note>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl FromIterator<Note> for NoteList {
    fn from_iter<I: IntoIterator<Item = Note>>(iter: I) -> Self {
        NoteList::new(iter.into_iter().collect())
    }
}

/// Parses `bytes` and extracts the note list in one step.
pub fn read_notes(bytes: &[u8]) -> Result<Extraction, MidiError> {
    let parsed = parse_smf(bytes)?;
    Ok(extract_notes(&parsed.tracks, &parsed.tempo_map, parsed.header.division))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ticks_to_seconds_reference_values() {
        let tempo = TempoMap::default();
        assert_eq!(ticks_to_seconds(0, &tempo, 480), 0.0);
        assert_eq!(ticks_to_seconds(480, &tempo, 480), 0.5);
        let two = TempoMap::new(vec![
            TempoChange {
                tick: 0,
                micros_per_quarter: 500_000,
            },
            TempoChange {
                tick: 480,
                micros_per_quarter: 250_000,
            },
        ])
        .unwrap();
        // 480 ticks at 0.5 s/quarter, then 480 at 0.25 s/quarter.
        assert_eq!(ticks_to_seconds(960, &two, 480), 0.75);
        assert_eq!(ticks_to_seconds(720, &two, 480), 0.625);
    }

    #[test]
    fn tempo_map_inserts_default_and_rejects_disorder() {
        let map = TempoMap::new(vec![TempoChange {
            tick: 96,
            micros_per_quarter: 400_000,
        }])
        .unwrap();
        assert_eq!(map.changes().len(), 2);
        assert_eq!(map.changes()[0].micros_per_quarter, DEFAULT_MICROS_PER_QUARTER);
        assert!(TempoMap::new(vec![
            TempoChange {
                tick: 0,
                micros_per_quarter: 1
            },
            TempoChange {
                tick: 0,
                micros_per_quarter: 2
            },
        ])
        .is_err());
        assert!(TimeSigMap::constant(3, 3).is_err());
        assert_eq!(TimeSigMap::new(vec![]).unwrap(), TimeSigMap::default());
    }

    #[test]
    fn note_list_sorts_by_onset_pitch_velocity() {
        let list = NoteList::new(vec![
            Note::new(42, 0.5, 0.1),
            Note::new(38, 0.0, 0.1).with_velocity(90),
            Note::new(36, 0.0, 0.1),
            Note::new(38, 0.0, 0.1).with_velocity(20),
        ]);
        let keys: Vec<(u8, u8)> = list.iter().map(|n| (n.pitch, n.velocity)).collect();
        assert_eq!(keys, vec![(36, 100), (38, 20), (38, 90), (42, 100)]);
        assert_eq!(list.pitches(), vec![36, 38, 42]);
    }

    fn tempo_maps() -> impl Strategy<Value = TempoMap> {
        prop::collection::vec((1u64..2000, 100_000u32..1_500_000), 0..5).prop_map(|steps| {
            let mut tick = 0;
            let mut changes = vec![TempoChange {
                tick: 0,
                micros_per_quarter: 500_000,
            }];
            for (dt, us) in steps {
                tick += dt;
                changes.push(TempoChange {
                    tick,
                    micros_per_quarter: us,
                });
            }
            TempoMap::new(changes).unwrap()
        })
    }

    proptest! {
        #[test]
        fn seconds_are_monotone_and_piecewise_linear(map in tempo_maps(), a in 0u64..10_000, b in 0u64..10_000) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(map.ticks_to_seconds(lo, 480) <= map.ticks_to_seconds(hi, 480));
            // Within a segment, each tick adds exactly one tick's worth of that tempo.
            let changes = map.changes();
            let seg = changes.iter().rposition(|c| c.tick <= lo).unwrap();
            let end = changes.get(seg + 1).map_or(u64::MAX, |c| c.tick);
            if lo < end {
                let step = map.ticks_to_seconds(lo + 1, 480) - map.ticks_to_seconds(lo, 480);
                let expected = f64::from(changes[seg].micros_per_quarter) / 480e6;
                prop_assert!((step - expected).abs() < 1e-12);
            }
        }

        #[test]
        fn seconds_to_ticks_inverts(map in tempo_maps(), tick in 0u64..10_000) {
            let s = map.ticks_to_seconds(tick, 480);
            let back = map.seconds_to_ticks(s, 480);
            prop_assert!((back - tick as f64).abs() < 1e-6, "{} vs {}", back, tick);
        }
    }
}
