//! SMF variable-length quantities: big-endian, seven bits per byte, high bit
//! set on every byte except the last.

use super::MidiError;

/// Largest value a four-byte quantity can carry (2^28 - 1).
pub const VLQ_MAX: u32 = 0x0FFF_FFFF;

/// Decodes the quantity starting at `offset`, returning the value and the
/// number of bytes consumed.
pub fn read_vlq(bytes: &[u8], offset: usize) -> Result<(u32, usize), MidiError> {
    let mut value: u32 = 0;
    for i in 0..4 {
        let Some(&byte) = bytes.get(offset + i) else {
            return Err(MidiError::TruncatedInput { offset: offset + i });
        };
        value = (value << 7) | u32::from(byte & 0x7F);
        if byte & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    Err(MidiError::Overlong { offset })
}

/// Encodes `value` (clamped to [`VLQ_MAX`]) into the minimal byte form.
pub fn encode_vlq(value: u32) -> Vec<u8> {
    let value = value.min(VLQ_MAX);
    let mut out = vec![(value & 0x7F) as u8];
    let mut rest = value >> 7;
    while rest > 0 {
        out.push(((rest & 0x7F) as u8) | 0x80);
        rest >>= 7;
    }
    out.reverse();
    out
}
