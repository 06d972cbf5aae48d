//! Prints the duration-proportional measure and beat grid of a piece with
//! a tempo change.
//!
//!     cargo run --example score_grid

use drumdiff::patterns::tempo_change;
use drumdiff::score::compute_grid;

fn main() {
    let gt = tempo_change();
    let grid = compute_grid(&gt);
    println!("{} measures, {:.3} s", gt.measure_count(), gt.total_duration());
    for m in &grid.measures {
        let beats: Vec<String> = m.beats.iter().map(|b| format!("{:.3}", b.start)).collect();
        println!(
            "measure {}: {:.3}..{:.3} s ({:.3} s), beats at {}",
            m.index + 1,
            m.start,
            m.end,
            m.duration(),
            beats.join(", ")
        );
    }
}
