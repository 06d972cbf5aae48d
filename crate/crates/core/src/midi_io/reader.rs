use super::{read_vlq, MidiError, SmfFormat, SmfHeader, TempoChange, TempoMap, TimeSigChange, TimeSigMap};

/// A track event with its absolute tick. Events this crate has no use for
/// (controllers, sysex, text meta, ...) are dropped during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEvent {
    pub tick: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    NoteOn { channel: u8, pitch: u8, velocity: u8 },
    NoteOff { channel: u8, pitch: u8 },
    Tempo(u32),
    TimeSignature { numerator: u8, denominator: u8 },
    EndOfTrack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSmf {
    pub header: SmfHeader,
    pub tracks: Vec<Vec<RawEvent>>,
    pub tempo_map: TempoMap,
    pub timesig_map: TimeSigMap,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(MidiError::TruncatedInput {
                offset: self.bytes.len(),
            }),
        }
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        Ok(self.take(1)?[0])
    }

    fn vlq(&mut self) -> Result<u32, MidiError> {
        let (value, used) = read_vlq(self.bytes, self.pos)?;
        self.pos += used;
        Ok(value)
    }

    fn done(&self) -> bool {
        self.pos >= self.bytes.len()
    }
}

fn be_u16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

/// Reads the chunk header at `pos`: id and the byte range of its body.
fn chunk_at(bytes: &[u8], pos: usize) -> Result<([u8; 4], usize, usize), MidiError> {
    if bytes.len() < pos + 8 {
        return Err(MidiError::TruncatedChunk { offset: pos });
    }
    let id = [bytes[pos], bytes[pos + 1], bytes[pos + 2], bytes[pos + 3]];
    let len = be_u32(&bytes[pos + 4..pos + 8]) as usize;
    let start = pos + 8;
    let end = start
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or(MidiError::TruncatedChunk { offset: pos })?;
    Ok((id, start, end))
}

/// Parses a format 0 or 1 file. Tempo and time-signature events are
/// collected from every track and merged by tick; on equal ticks the later
/// track wins.
pub fn parse_smf(bytes: &[u8]) -> Result<ParsedSmf, MidiError> {
    if !bytes.starts_with(b"MThd") {
        return Err(MidiError::BadMagic {
            offset: 0,
            expected: "MThd",
        });
    }
    let (_, hstart, hend) = chunk_at(bytes, 0)?;
    if hend - hstart < 6 {
        return Err(MidiError::InvalidHeader {
            offset: 4,
            reason: format!("header length {} is shorter than 6", hend - hstart),
        });
    }
    let format_code = be_u16(&bytes[hstart..]);
    let track_count = be_u16(&bytes[hstart + 2..]);
    let division = be_u16(&bytes[hstart + 4..]);
    let format = match format_code {
        0 => SmfFormat::SingleTrack,
        1 => SmfFormat::MultiTrack,
        other => return Err(MidiError::UnsupportedFormat { format: other }),
    };
    if division & 0x8000 != 0 {
        return Err(MidiError::UnsupportedDivision { raw: division });
    }
    if division == 0 {
        return Err(MidiError::InvalidHeader {
            offset: hstart + 4,
            reason: "division must be positive".into(),
        });
    }
    if track_count == 0 || (format == SmfFormat::SingleTrack && track_count != 1) {
        return Err(MidiError::InvalidHeader {
            offset: hstart + 2,
            reason: format!("track count {track_count} invalid for format {format_code}"),
        });
    }

    let mut tracks = Vec::with_capacity(usize::from(track_count));
    let mut pos = hend;
    while tracks.len() < usize::from(track_count) {
        if pos >= bytes.len() {
            return Err(MidiError::TruncatedChunk { offset: pos });
        }
        let (id, start, end) = chunk_at(bytes, pos)?;
        if &id == b"MTrk" {
            tracks.push(parse_track(bytes, start, end)?);
        } else if !id.iter().all(u8::is_ascii_graphic) {
            return Err(MidiError::BadMagic {
                offset: pos,
                expected: "MTrk",
            });
        }
        pos = end;
    }

    let mut tempos: Vec<(u64, usize, u32)> = Vec::new();
    let mut sigs: Vec<(u64, usize, (u8, u8))> = Vec::new();
    for (t, track) in tracks.iter().enumerate() {
        for ev in track {
            match ev.kind {
                EventKind::Tempo(us) => tempos.push((ev.tick, t, us)),
                EventKind::TimeSignature { numerator, denominator } => {
                    sigs.push((ev.tick, t, (numerator, denominator)))
                }
                _ => {}
            }
        }
    }
    let tempo_map = TempoMap::new(
        last_per_tick(tempos)
            .into_iter()
            .map(|(tick, micros_per_quarter)| TempoChange {
                tick,
                micros_per_quarter,
            })
            .collect(),
    )?;
    let timesig_map = TimeSigMap::new(
        last_per_tick(sigs)
            .into_iter()
            .map(|(tick, (numerator, denominator))| TimeSigChange {
                tick,
                numerator,
                denominator,
            })
            .collect(),
    )?;

    Ok(ParsedSmf {
        header: SmfHeader {
            format,
            track_count,
            division,
        },
        tracks,
        tempo_map,
        timesig_map,
    })
}

/// Sorts by (tick, track) keeping encounter order, then keeps the last
/// entry for each tick.
fn last_per_tick<T: Copy>(mut entries: Vec<(u64, usize, T)>) -> Vec<(u64, T)> {
    entries.sort_by_key(|&(tick, track, _)| (tick, track));
    let mut out: Vec<(u64, T)> = Vec::with_capacity(entries.len());
    for (tick, _, value) in entries {
        match out.last_mut() {
            Some(last) if last.0 == tick => last.1 = value,
            _ => out.push((tick, value)),
        }
    }
    out
}

fn parse_track(bytes: &[u8], start: usize, end: usize) -> Result<Vec<RawEvent>, MidiError> {
    let mut cur = Cursor {
        bytes: &bytes[..end],
        pos: start,
    };
    let mut events = Vec::new();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;

    while !cur.done() {
        tick += u64::from(cur.vlq()?);
        let status_pos = cur.pos;
        let first = cur.u8()?;
        let (status, first_data) = if first & 0x80 != 0 {
            (first, None)
        } else {
            match running {
                Some(s) => (s, Some(first)),
                None => {
                    return Err(MidiError::MissingStatus {
                        offset: status_pos,
                        byte: first,
                    })
                }
            }
        };

        match status {
            0xFF => {
                running = None;
                let kind = cur.u8()?;
                let len = cur.vlq()? as usize;
                let data = cur.take(len)?;
                match (kind, len) {
                    (0x51, 3) => {
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us > 0 {
                            events.push(RawEvent {
                                tick,
                                kind: EventKind::Tempo(us),
                            });
                        }
                    }
                    (0x58, 4) if data[0] > 0 && data[1] < 8 => events.push(RawEvent {
                        tick,
                        kind: EventKind::TimeSignature {
                            numerator: data[0],
                            denominator: 1 << data[1],
                        },
                    }),
                    (0x2F, _) => {
                        events.push(RawEvent {
                            tick,
                            kind: EventKind::EndOfTrack,
                        });
                        break;
                    }
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = cur.vlq()? as usize;
                cur.take(len)?;
            }
            0x80..=0xEF => {
                running = Some(status);
                let channel = status & 0x0F;
                let data_len = if matches!(status & 0xF0, 0xC0 | 0xD0) { 1 } else { 2 };
                let mut data = [0u8; 2];
                let mut filled = 0;
                if let Some(d) = first_data {
                    data[0] = d;
                    filled = 1;
                }
                while filled < data_len {
                    data[filled] = cur.u8()?;
                    filled += 1;
                }
                let (pitch, velocity) = (data[0] & 0x7F, data[1] & 0x7F);
                match status & 0xF0 {
                    0x90 if velocity > 0 => events.push(RawEvent {
                        tick,
                        kind: EventKind::NoteOn {
                            channel,
                            pitch,
                            velocity,
                        },
                    }),
                    0x90 | 0x80 => events.push(RawEvent {
                        tick,
                        kind: EventKind::NoteOff { channel, pitch },
                    }),
                    _ => {}
                }
            }
            // System common/real-time bytes do not belong in a file; skip them.
            _ => running = None,
        }
    }
    Ok(events)
}
