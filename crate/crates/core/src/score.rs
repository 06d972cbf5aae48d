//! The reference piece and its measure/beat grid.
//!
//! Grid spans are measured in seconds, so a measure at half the tempo is
//! twice as wide in every rendering.

use serde::Serialize;
use thiserror::Error;

use crate::midi_io::{self, MidiError, NoteList, TempoMap, TimeSigMap};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Midi(#[from] MidiError),
    #[error("ground truth contains no notes")]
    EmptyPiece,
    #[error("time signature change at tick {tick} falls inside a measure")]
    MidMeasureTimesig { tick: u64 },
    #[error("time signature {numerator}/{denominator} cannot be expressed at division {division}")]
    UnrepresentableTimeSignature {
        numerator: u8,
        denominator: u8,
        division: u16,
    },
}

/// Measure boundaries in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct MeasureTicks {
    start: u64,
    beats: u8,
    beat_ticks: u64,
}

impl MeasureTicks {
    fn end(&self) -> u64 {
        self.start + u64::from(self.beats) * self.beat_ticks
    }
}

/// The correct version of the piece. Immutable once built.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    notes: NoteList,
    tempo_map: TempoMap,
    timesig_map: TimeSigMap,
    division: u16,
    measures: Vec<MeasureTicks>,
    total_duration: f64,
}

impl GroundTruth {
    /// Builds a piece padded to whole measures. Fails on an empty note list
    /// or a time signature that changes mid-measure.
    pub fn new(
        notes: NoteList,
        tempo_map: TempoMap,
        timesig_map: TimeSigMap,
        division: u16,
    ) -> Result<Self, ScoreError> {
        if notes.is_empty() {
            return Err(ScoreError::EmptyPiece);
        }
        let division = division.max(1);
        let ticks = |s: f64| tempo_map.seconds_to_ticks(s, division).max(0.0);
        // Every onset must sit strictly inside a measure and every note must
        // end by the last barline. Ends round up; the small slack absorbs
        // float noise on ends that fall exactly on a tick.
        let required = notes
            .iter()
            .map(|n| {
                let onset = ticks(n.onset).round() as u64 + 1;
                let end = (ticks(n.onset + n.duration) - 1e-6).ceil().max(0.0) as u64;
                onset.max(end)
            })
            .max()
            .unwrap_or(1);

        let sigs = timesig_map.changes();
        let mut measures = Vec::new();
        let mut tick = 0;
        let mut sig_index = 0;
        while tick < required {
            while sig_index + 1 < sigs.len() && sigs[sig_index + 1].tick <= tick {
                sig_index += 1;
            }
            let sig = sigs[sig_index];
            let whole = u64::from(division) * 4;
            if whole % u64::from(sig.denominator) != 0 {
                return Err(ScoreError::UnrepresentableTimeSignature {
                    numerator: sig.numerator,
                    denominator: sig.denominator,
                    division,
                });
            }
            let m = MeasureTicks {
                start: tick,
                beats: sig.numerator,
                beat_ticks: whole / u64::from(sig.denominator),
            };
            if let Some(next) = sigs.get(sig_index + 1) {
                if next.tick > m.start && next.tick < m.end() {
                    return Err(ScoreError::MidMeasureTimesig { tick: next.tick });
                }
            }
            tick = m.end();
            measures.push(m);
        }
        let total_duration = tempo_map.ticks_to_seconds(tick, division);

        Ok(GroundTruth {
            notes,
            tempo_map,
            timesig_map,
            division,
            measures,
            total_duration,
        })
    }

    pub fn notes(&self) -> &NoteList {
        &self.notes
    }

    pub fn tempo_map(&self) -> &TempoMap {
        &self.tempo_map
    }

    pub fn timesig_map(&self) -> &TimeSigMap {
        &self.timesig_map
    }

    pub fn division(&self) -> u16 {
        self.division
    }

    /// End of the last measure, in seconds.
    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn measure_count(&self) -> usize {
        self.measures.len()
    }

    /// Distinct pitches of the piece, ascending.
    pub fn pitches(&self) -> Vec<u8> {
        self.notes.pitches()
    }
}

/// Parses a file and builds the piece from all of its notes.
pub fn load_ground_truth(bytes: &[u8]) -> Result<GroundTruth, ScoreError> {
    let parsed = midi_io::parse_smf(bytes)?;
    let extraction = midi_io::extract_notes(&parsed.tracks, &parsed.tempo_map, parsed.header.division);
    GroundTruth::new(
        extraction.notes,
        parsed.tempo_map,
        parsed.timesig_map,
        parsed.header.division,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measure {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub beats: Vec<Span>,
}

impl Measure {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub measures: Vec<Measure>,
}

impl Grid {
    pub fn end(&self) -> f64 {
        self.measures.last().map_or(0.0, |m| m.end)
    }
}

/// Converts the piece's measure and beat boundaries to seconds.
pub fn compute_grid(gt: &GroundTruth) -> Grid {
    let to_s = |tick| gt.tempo_map.ticks_to_seconds(tick, gt.division);
    let measures = gt
        .measures
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let beats = (0..u64::from(m.beats))
                .map(|b| Span {
                    start: to_s(m.start + b * m.beat_ticks),
                    end: to_s(m.start + (b + 1) * m.beat_ticks),
                })
                .collect();
            Measure {
                index,
                start: to_s(m.start),
                end: to_s(m.end()),
                beats,
            }
        })
        .collect();
    Grid { measures }
}
