//! Ready-made reference pieces for demos and tests.

use crate::midi_io::{Note, NoteList, TempoChange, TempoMap, TimeSigMap};
use crate::score::GroundTruth;

pub const BASS_DRUM: u8 = 36;
pub const SNARE: u8 = 38;
pub const CLOSED_HAT: u8 = 42;

/// 4/4 rock groove at 120 BPM, division 480: eighth-note hi-hat, kick on
/// 1, 2-and, 3 and 3-and, snare on 2, 4, 4-e-and. Sixteen notes per
/// measure.
pub fn rock_beat(measures: usize) -> GroundTruth {
    let mut notes = Vec::with_capacity(16 * measures);
    for m in 0..measures {
        let bar = m as f64 * 2.0;
        for e in 0..8 {
            notes.push(Note::new(CLOSED_HAT, bar + e as f64 * 0.25, 0.1));
        }
        for beat in [0.0, 0.75, 1.0, 1.25] {
            notes.push(Note::new(BASS_DRUM, bar + beat, 0.1));
        }
        for beat in [0.5, 1.5, 1.625, 1.75] {
            notes.push(Note::new(SNARE, bar + beat, 0.1));
        }
    }
    GroundTruth::new(NoteList::new(notes), TempoMap::default(), TimeSigMap::default(), 480)
        .expect("rock beat is a valid piece")
}

/// Two 4/4 measures: the first at 120 BPM (2 s), the second at 240 BPM
/// (1 s).
pub fn tempo_change() -> GroundTruth {
    let tempo = TempoMap::new(vec![
        TempoChange {
            tick: 0,
            micros_per_quarter: 500_000,
        },
        TempoChange {
            tick: 1920,
            micros_per_quarter: 250_000,
        },
    ])
    .expect("valid tempo map");
    let notes = NoteList::new(vec![
        Note::new(BASS_DRUM, 0.0, 0.1),
        Note::new(SNARE, 1.0, 0.1),
        Note::new(BASS_DRUM, 2.0, 0.1),
        Note::new(SNARE, 2.5, 0.1),
    ]);
    GroundTruth::new(notes, tempo, TimeSigMap::default(), 480).expect("valid piece")
}
