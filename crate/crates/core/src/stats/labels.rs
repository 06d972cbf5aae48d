//! Drum-kit component names for General MIDI percussion keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Short component name for a GM percussion key, if it is one of the kit
/// pieces this crate knows about.
pub fn gm_component(pitch: u8) -> Option<&'static str> {
    match pitch {
        35 | 36 => Some("BD"),
        38 | 40 => Some("SN"),
        42 | 44 | 46 => Some("HH"),
        49 | 57 => Some("CY"),
        45 | 47 | 48 | 50 => Some("TOM"),
        _ => None,
    }
}

/// Pitch-to-label map: GM defaults plus user overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PitchLabels {
    overrides: BTreeMap<u8, String>,
}

impl PitchLabels {
    pub fn with_overrides(overrides: BTreeMap<u8, String>) -> Self {
        PitchLabels { overrides }
    }

    pub fn set(&mut self, pitch: u8, label: impl Into<String>) {
        self.overrides.insert(pitch, label.into());
    }

    /// Override, else GM component, else the key number.
    pub fn label(&self, pitch: u8) -> String {
        if let Some(l) = self.overrides.get(&pitch) {
            return l.clone();
        }
        gm_component(pitch).map_or_else(|| pitch.to_string(), str::to_string)
    }
}

/// Top-to-bottom lane order for a set of pitches: cymbals, hi-hat, toms,
/// other keys (high to low), snare, bass drum.
pub fn lane_order(pitches: &[u8]) -> Vec<u8> {
    let rank = |p: u8| match gm_component(p) {
        Some("CY") => 0,
        Some("HH") => 1,
        Some("TOM") => 2,
        None => 3,
        Some("SN") => 4,
        Some("BD") => 5,
        Some(_) => 3,
    };
    let mut out = pitches.to_vec();
    out.sort_by_key(|&p| (rank(p), std::cmp::Reverse(p)));
    out.dedup();
    out
}
