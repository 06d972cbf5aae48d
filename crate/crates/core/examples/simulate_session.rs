//! Generates synthetic takes with a late bass drum and writes them as
//! MIDI files plus a manifest.
//!
//!     cargo run --example simulate_session [OUT_DIR]

mod common;

use std::collections::BTreeMap;

use drumdiff::patterns::{rock_beat, BASS_DRUM};
use drumdiff::simulator::{simulate_session, write_session, ErrorModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = rock_beat(4);
    let model = ErrorModel {
        per_pitch_bias: BTreeMap::from([(BASS_DRUM, 0.03)]),
        jitter_sd: 0.01,
        miss_probability: 0.05,
        insertion_rate: 0.1,
        seed: 2024,
    };
    let takes = simulate_session(&gt, &model, 5)?;
    let dir = common::out_dir("simulate_session");
    let manifest = write_session(&dir, "rock_beat", &gt, &model, &takes)?;
    for t in &manifest.takes {
        println!("{} seed {} -> {} notes", t.file, t.seed, t.note_count);
    }
    println!("manifest: {}", dir.join("manifest.json").display());
    Ok(())
}
