use std::collections::HashMap;

use super::{encode_vlq, Note, NoteList, TempoMap, TimeSigMap};

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Pending {
    tick: u64,
    // 0 meta, 1 off of an earlier note, 2 on, 3 off of a zero-length note
    class: u8,
    // ons: shorter notes first so first-in first-out pairing stays correct
    rank: u64,
    seq: usize,
    bytes: Vec<u8>,
}

/// Writes a single-track (format 0) file.
///
/// Onsets and note ends are rounded to the nearest tick. A note still
/// sounding when the same key is struck again on the same channel is ended
/// at the new onset, since a file cannot express two simultaneous notes on
/// one key.
pub fn write_smf(notes: &NoteList, tempo_map: &TempoMap, timesig_map: &TimeSigMap, division: u16) -> Vec<u8> {
    let division = division.max(1);
    let quantize = |s: f64| tempo_map.seconds_to_ticks(s, division).round().max(0.0) as u64;

    let mut pending = Vec::new();
    let mut seq = 0;
    let mut push = |pending: &mut Vec<Pending>, tick, class, rank, bytes| {
        pending.push(Pending {
            tick,
            class,
            rank,
            seq,
            bytes,
        });
        seq += 1;
    };

    for change in tempo_map.changes() {
        let us = change.micros_per_quarter.to_be_bytes();
        push(
            &mut pending,
            change.tick,
            0,
            0,
            vec![0xFF, 0x51, 0x03, us[1], us[2], us[3]],
        );
    }
    for change in timesig_map.changes() {
        let log2 = change.denominator.trailing_zeros() as u8;
        push(
            &mut pending,
            change.tick,
            0,
            0,
            vec![0xFF, 0x58, 0x04, change.numerator, log2, 24, 8],
        );
    }

    let ticks: Vec<(u64, u64)> = notes
        .iter()
        .map(|n| {
            let on = quantize(n.onset);
            (on, quantize(n.onset + n.duration.max(0.0)).max(on))
        })
        .collect();

    // Onset tick of the following note on the same key, if any.
    let mut next_on: Vec<Option<u64>> = vec![None; notes.len()];
    let mut seen: HashMap<(u8, u8), u64> = HashMap::new();
    for (i, note) in notes.iter().enumerate().rev() {
        let key = (note.pitch.min(127), note.channel & 0x0F);
        next_on[i] = seen.insert(key, ticks[i].0);
    }

    for (i, note) in notes.iter().enumerate() {
        let Note {
            pitch,
            channel,
            velocity,
            ..
        } = *note;
        let (pitch, channel, velocity) = (pitch.min(127), channel & 0x0F, velocity.clamp(1, 127));
        let (on, mut off) = ticks[i];
        if let Some(next) = next_on[i] {
            off = off.min(next.max(on));
        }
        push(&mut pending, on, 2, off - on, vec![0x90 | channel, pitch, velocity]);
        let class = if off == on { 3 } else { 1 };
        push(&mut pending, off, class, 0, vec![0x80 | channel, pitch, 0x40]);
    }
    pending.sort();

    let mut body = Vec::new();
    let mut last_tick = 0;
    for ev in &pending {
        body.extend(encode_vlq((ev.tick - last_tick) as u32));
        body.extend(&ev.bytes);
        last_tick = ev.tick;
    }
    body.extend([0x00, 0xFF, 0x2F, 0x00]);

    let mut out = Vec::with_capacity(22 + body.len());
    out.extend(b"MThd");
    out.extend(6u32.to_be_bytes());
    out.extend(0u16.to_be_bytes());
    out.extend(1u16.to_be_bytes());
    out.extend(division.to_be_bytes());
    out.extend(b"MTrk");
    out.extend((body.len() as u32).to_be_bytes());
    out.extend(body);
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_smf, read_notes, EventKind};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_list_writes_only_meta_and_end_of_track() {
        let bytes = write_smf(&NoteList::default(), &TempoMap::default(), &TimeSigMap::default(), 480);
        let parsed = parse_smf(&bytes).unwrap();
        assert_eq!(parsed.tracks.len(), 1);
        assert_eq!(parsed.tracks[0].last().unwrap().kind, EventKind::EndOfTrack);
        assert!(read_notes(&bytes).unwrap().notes.is_empty());
    }

    #[test]
    fn single_quarter_note_ticks() {
        let notes = NoteList::new(vec![Note::new(60, 0.0, 0.5)]);
        let bytes = write_smf(&notes, &TempoMap::default(), &TimeSigMap::default(), 480);
        let parsed = parse_smf(&bytes).unwrap();
        let note_events: Vec<(u64, EventKind)> = parsed.tracks[0]
            .iter()
            .filter(|e| matches!(e.kind, EventKind::NoteOn { .. } | EventKind::NoteOff { .. }))
            .map(|e| (e.tick, e.kind))
            .collect();
        assert_eq!(
            note_events,
            vec![
                (
                    0,
                    EventKind::NoteOn {
                        channel: 9,
                        pitch: 60,
                        velocity: 100
                    }
                ),
                (480, EventKind::NoteOff { channel: 9, pitch: 60 }),
            ]
        );
    }

    #[test]
    fn zero_length_and_back_to_back_notes_survive() {
        let notes = NoteList::new(vec![
            Note::new(42, 0.0, 0.0),
            Note::new(42, 0.0, 0.25),
            Note::new(42, 0.25, 0.25),
        ]);
        let back = read_notes(&write_smf(&notes, &TempoMap::default(), &TimeSigMap::default(), 480)).unwrap();
        assert!(back.diagnostics.is_empty(), "{:?}", back.diagnostics);
        assert_eq!(back.notes, notes);
    }

    #[test]
    fn maps_are_written_and_read_back() {
        let tempo = TempoMap::new(vec![
            super::super::TempoChange {
                tick: 0,
                micros_per_quarter: 600_000,
            },
            super::super::TempoChange {
                tick: 1920,
                micros_per_quarter: 300_000,
            },
        ])
        .unwrap();
        let sig = TimeSigMap::constant(7, 8).unwrap();
        let parsed = parse_smf(&write_smf(&NoteList::default(), &tempo, &sig, 480)).unwrap();
        assert_eq!(parsed.tempo_map, tempo);
        assert_eq!(parsed.timesig_map, sig);
    }

    fn note_lists() -> impl Strategy<Value = Vec<Note>> {
        prop::collection::vec((35u8..82, 0.0f64..30.0, 0.0f64..0.2, 1u8..128), 0..100).prop_map(|raw| {
            raw.into_iter()
                .map(|(p, on, d, v)| Note::new(p, on, d).with_velocity(v))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_within_half_tick(raw in note_lists()) {
            let division = 480;
            let half_tick = 0.5 * 0.5 / f64::from(division);
            let notes = NoteList::new(raw);
            let bytes = write_smf(&notes, &TempoMap::default(), &TimeSigMap::default(), division);
            let back = read_notes(&bytes).unwrap();
            prop_assert!(back.diagnostics.is_empty());
            prop_assert_eq!(back.notes.len(), notes.len());
            // Compare as multisets keyed by quantized onset; sorting ties may
            // reorder notes whose onsets collapse to one tick.
            let key = |n: &Note| (n.pitch, (n.onset * 960.0).round() as i64, n.velocity);
            let mut a: Vec<_> = notes.iter().map(key).collect();
            let mut b: Vec<_> = back.notes.iter().map(key).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            let mut errs: Vec<f64> = Vec::new();
            for n in notes.iter() {
                let best = back.notes.iter()
                    .filter(|m| m.pitch == n.pitch && m.velocity == n.velocity)
                    .map(|m| (m.onset - n.onset).abs())
                    .fold(f64::INFINITY, f64::min);
                errs.push(best);
            }
            prop_assert!(errs.iter().all(|&e| e <= half_tick + 1e-12));
        }
    }
}
