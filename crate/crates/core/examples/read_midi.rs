//! Writes a groove to a Standard MIDI File, reads it back and lists the
//! notes with their onsets in seconds.
//!
//!     cargo run --example read_midi [OUT_DIR]

mod common;

use drumdiff::midi_io::{read_notes, write_smf};
use drumdiff::patterns::rock_beat;
use drumdiff::stats::PitchLabels;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = rock_beat(1);
    let bytes = write_smf(gt.notes(), gt.tempo_map(), gt.timesig_map(), gt.division());
    let path = common::out_dir("read_midi").join("groove.mid");
    std::fs::write(&path, &bytes)?;
    println!("wrote {} ({} bytes)", path.display(), bytes.len());

    let extraction = read_notes(&std::fs::read(&path)?)?;
    let labels = PitchLabels::default();
    for n in extraction.notes.iter() {
        println!(
            "{:>7.3} s  {:<3} vel {:>3}  dur {:.3} s",
            n.onset,
            labels.label(n.pitch),
            n.velocity,
            n.duration
        );
    }
    for d in &extraction.diagnostics {
        println!("diagnostic: {d}");
    }

    // A truncated file reports the byte where parsing stopped.
    match read_notes(&bytes[..bytes.len() - 3]) {
        Err(e) => println!("truncated copy: {e}"),
        Ok(_) => println!("truncated copy parsed unexpectedly"),
    }
    Ok(())
}
