use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use super::{EventKind, Note, NoteList, RawEvent, TempoMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnostic {
    /// A note-on never saw its note-off and was closed at end of track.
    Unterminated {
        track: usize,
        channel: u8,
        pitch: u8,
        tick: u64,
    },
    /// A note-off arrived with no open note of that pitch and channel.
    OrphanNoteOff {
        track: usize,
        channel: u8,
        pitch: u8,
        tick: u64,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Unterminated { track, channel, pitch, tick } => write!(
                f,
                "track {track}: note {pitch} (channel {channel}) opened at tick {tick} never ended; closed at end of track"
            ),
            Diagnostic::OrphanNoteOff { track, channel, pitch, tick } => write!(
                f,
                "track {track}: note-off for {pitch} (channel {channel}) at tick {tick} has no matching note-on"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub notes: NoteList,
    pub diagnostics: Vec<Diagnostic>,
}

impl Extraction {
    pub fn orphan_note_offs(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| matches!(d, Diagnostic::OrphanNoteOff { .. }))
            .count()
    }

    pub fn unterminated(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| matches!(d, Diagnostic::Unterminated { .. }))
            .count()
    }
}

/// Pairs note-ons with note-offs track by track.
///
/// Each off closes the oldest open note with the same pitch and channel, so
/// overlapping hits on one key pair first-in first-out.
pub fn extract_notes(tracks: &[Vec<RawEvent>], tempo_map: &TempoMap, division: u16) -> Extraction {
    let mut notes = Vec::new();
    let mut diagnostics = Vec::new();
    let to_s = |tick: u64| tempo_map.ticks_to_seconds(tick, division);

    for (track_index, events) in tracks.iter().enumerate() {
        let mut open: BTreeMap<(u8, u8), VecDeque<(u64, u8)>> = BTreeMap::new();
        let mut last_tick = 0;
        for ev in events {
            last_tick = last_tick.max(ev.tick);
            match ev.kind {
                EventKind::NoteOn {
                    channel,
                    pitch,
                    velocity,
                } => {
                    open.entry((channel, pitch)).or_default().push_back((ev.tick, velocity));
                }
                EventKind::NoteOff { channel, pitch } => {
                    match open.get_mut(&(channel, pitch)).and_then(VecDeque::pop_front) {
                        Some((on_tick, velocity)) => {
                            let onset = to_s(on_tick);
                            notes.push(Note {
                                pitch,
                                onset,
                                duration: to_s(ev.tick) - onset,
                                velocity,
                                channel,
                            });
                        }
                        None => diagnostics.push(Diagnostic::OrphanNoteOff {
                            track: track_index,
                            channel,
                            pitch,
                            tick: ev.tick,
                        }),
                    }
                }
                _ => {}
            }
        }
        for ((channel, pitch), queue) in open {
            for (on_tick, velocity) in queue {
                diagnostics.push(Diagnostic::Unterminated {
                    track: track_index,
                    channel,
                    pitch,
                    tick: on_tick,
                });
                let onset = to_s(on_tick);
                notes.push(Note {
                    pitch,
                    onset,
                    duration: to_s(last_tick) - onset,
                    velocity,
                    channel,
                });
            }
        }
    }

    Extraction {
        notes: NoteList::new(notes),
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on(tick: u64, pitch: u8, velocity: u8) -> RawEvent {
        RawEvent {
            tick,
            kind: EventKind::NoteOn {
                channel: 9,
                pitch,
                velocity,
            },
        }
    }

    fn off(tick: u64, pitch: u8) -> RawEvent {
        RawEvent {
            tick,
            kind: EventKind::NoteOff { channel: 9, pitch },
        }
    }

    fn eot(tick: u64) -> RawEvent {
        RawEvent {
            tick,
            kind: EventKind::EndOfTrack,
        }
    }

    #[test]
    fn quarter_note_at_120_bpm() {
        let ex = extract_notes(&[vec![on(0, 60, 100), off(480, 60)]], &TempoMap::default(), 480);
        assert_eq!(ex.notes.as_slice(), &[Note::new(60, 0.0, 0.5).with_channel(9)]);
        assert!(ex.diagnostics.is_empty());
    }

    #[test]
    fn zero_velocity_note_on_ends_note() {
        // The parser maps velocity-0 note-on to NoteOff; go through bytes to
        // exercise that path end to end.
        let mut file = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xE0".to_vec();
        let body = [0x00, 0x99, 36, 90, 0x81, 0x70, 0x99, 36, 0, 0x00, 0xFF, 0x2F, 0x00];
        file.extend(b"MTrk");
        file.extend((body.len() as u32).to_be_bytes());
        file.extend(body);
        let ex = super::super::read_notes(&file).unwrap();
        assert_eq!(ex.notes.len(), 1);
        assert_eq!(ex.notes[0].duration, 0.25);
        assert_eq!(ex.notes[0].velocity, 90);
    }

    #[test]
    fn interleaved_pitches_pair_independently() {
        // Hand trace (division 480, 120 BPM => 1/960 s per tick):
        //   t=0   on 36      t=120 on 42      t=240 off 36
        //   t=360 on 36      t=480 off 42     t=600 off 36
        // => 36: [0, 240] and [360, 600]; 42: [120, 480].
        let events = vec![
            on(0, 36, 100),
            on(120, 42, 70),
            off(240, 36),
            on(360, 36, 110),
            off(480, 42),
            off(600, 36),
        ];
        let ex = extract_notes(&[events], &TempoMap::default(), 480);
        let got: Vec<(u8, f64, f64, u8)> = ex
            .notes
            .iter()
            .map(|n| (n.pitch, n.onset, n.duration, n.velocity))
            .collect();
        assert_eq!(
            got,
            vec![(36, 0.0, 0.25, 100), (42, 0.125, 0.375, 70), (36, 0.375, 0.25, 110),]
        );
    }

    #[test]
    fn same_key_overlap_pairs_fifo() {
        let events = vec![on(0, 38, 10), on(96, 38, 20), off(192, 38), off(480, 38)];
        let ex = extract_notes(&[events], &TempoMap::default(), 480);
        assert_eq!(ex.notes[0].velocity, 10);
        assert_eq!(ex.notes[0].duration, 0.2);
        assert_eq!(ex.notes[1].velocity, 20);
        assert_eq!(ex.notes[1].duration, 0.4);
    }

    #[test]
    fn unterminated_notes_close_at_end_of_track() {
        let ex = extract_notes(&[vec![on(0, 49, 100), eot(960)]], &TempoMap::default(), 480);
        assert_eq!(ex.notes.len(), 1);
        assert_eq!(ex.notes[0].duration, 1.0);
        assert_eq!(ex.unterminated(), 1);
    }

    #[test]
    fn orphan_offs_are_counted_not_fatal() {
        let ex = extract_notes(
            &[vec![off(0, 36), on(10, 36, 1), off(20, 36), off(30, 36)]],
            &TempoMap::default(),
            480,
        );
        assert_eq!(ex.notes.len(), 1);
        assert_eq!(ex.orphan_note_offs(), 2);
        assert!(ex.notes.iter().all(|n| n.duration >= 0.0));
    }
}
