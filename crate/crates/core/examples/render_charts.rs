//! Renders all five charts for a small simulated session.
//!
//!     cargo run --example render_charts [OUT_DIR]

mod common;

use std::collections::BTreeMap;

use drumdiff::analysis::analyze;
use drumdiff::matching::{AlignMode, Tolerance};
use drumdiff::patterns::{rock_beat, BASS_DRUM};
use drumdiff::render::{
    render_density, render_ground_truth, render_gt_heat, render_overlay, render_pitch_summary, Theme,
};
use drumdiff::score::compute_grid;
use drumdiff::simulator::{simulate_session, ErrorModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = rock_beat(2);
    let model = ErrorModel {
        per_pitch_bias: BTreeMap::from([(BASS_DRUM, 0.03)]),
        jitter_sd: 0.012,
        miss_probability: 0.08,
        insertion_rate: 0.3,
        seed: 11,
    };
    let takes = simulate_session(&gt, &model, 6)?;
    let theme = Theme::default();
    let analysis = analyze(&gt, takes, Tolerance::DEFAULT, AlignMode::None, &theme.labels);
    let summaries: Vec<_> = analysis.summaries.values().cloned().collect();

    let charts = [
        ("gt", render_ground_truth(&gt, &compute_grid(&gt), &theme)?),
        (
            "overlay",
            render_overlay(&gt, &analysis.recordings, &analysis.results, &theme)?,
        ),
        ("density", render_density(&gt, &analysis.density, &theme)?),
        (
            "heat",
            render_gt_heat(&gt, &analysis.aggregates, analysis.tolerance, &theme)?,
        ),
        ("summary", render_pitch_summary(&summaries, analysis.tolerance, &theme)?),
    ];
    let dir = common::out_dir("render_charts");
    for (name, svg) in charts {
        let path = dir.join(format!("demo_{name}.svg"));
        std::fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
