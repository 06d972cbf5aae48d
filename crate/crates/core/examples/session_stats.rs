//! Aggregates a simulated session: per-pitch offset statistics, per-note
//! averages and onset density bandwidths.
//!
//!     cargo run --example session_stats

use std::collections::BTreeMap;

use drumdiff::analysis::{analyze, summary_table};
use drumdiff::matching::{AlignMode, Tolerance};
use drumdiff::patterns::{rock_beat, BASS_DRUM};
use drumdiff::simulator::{simulate_session, ErrorModel};
use drumdiff::stats::PitchLabels;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = rock_beat(4);
    let model = ErrorModel {
        per_pitch_bias: BTreeMap::from([(BASS_DRUM, 0.03)]),
        jitter_sd: 0.01,
        miss_probability: 0.05,
        seed: 7,
        ..ErrorModel::default()
    };
    let takes = simulate_session(&gt, &model, 50)?;
    let labels = PitchLabels::default();
    let analysis = analyze(&gt, takes, Tolerance::DEFAULT, AlignMode::None, &labels);
    print!("{}", summary_table(&analysis));

    for (pitch, curve) in &analysis.density {
        println!(
            "{} onset density: bandwidth {:.1} ms over {} onsets",
            labels.label(*pitch),
            curve.bandwidth * 1000.0,
            curve.sample_count
        );
    }
    let worst = analysis
        .aggregates
        .iter()
        .filter_map(|a| a.mean_abs_offset.map(|m| (m, a)))
        .max_by(|x, y| x.0.total_cmp(&y.0));
    if let Some((m, a)) = worst {
        println!(
            "largest mean |offset|: {} at {:.3} s, {:.1} ms",
            labels.label(a.pitch),
            a.onset,
            m * 1000.0
        );
    }
    Ok(())
}
