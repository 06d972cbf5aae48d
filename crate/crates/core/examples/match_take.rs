//! Matches one take against the reference and classifies every note as
//! correct, missing or surplus.
//!
//!     cargo run --example match_take

use drumdiff::matching::{classify, match_recording, ErrorClass, Recording, Tolerance};
use drumdiff::midi_io::{Note, NoteList};
use drumdiff::patterns::{rock_beat, CLOSED_HAT, SNARE};
use drumdiff::stats::PitchLabels;

fn main() {
    let gt = rock_beat(1);
    // Late snares, one skipped hi-hat and an extra hi-hat on the "e" of 2.
    let mut played: Vec<Note> = gt
        .notes()
        .iter()
        .filter(|n| !(n.pitch == CLOSED_HAT && n.onset == 1.5))
        .map(|n| {
            if n.pitch == SNARE {
                Note {
                    onset: n.onset + 0.02,
                    ..*n
                }
            } else {
                *n
            }
        })
        .collect();
    played.push(Note::new(CLOSED_HAT, 0.625, 0.1));
    let take = Recording::new("take-1", NoteList::new(played));

    // Eighth-note hats are 250 ms apart, so a window that wide would let
    // neighbouring hats absorb the skipped one. Use 100 ms here.
    let tolerance = Tolerance::new(0.1).expect("positive tolerance");
    let result = match_recording(&gt, &take, tolerance);
    let classes = classify(gt.notes(), &take.notes, &result).expect("result belongs to this take");
    let labels = PitchLabels::default();
    println!("reference notes:");
    for (n, c) in gt.notes().iter().zip(&classes.reference) {
        let what = match c {
            ErrorClass::Correct(d) => format!("correct {:+.1} ms", d * 1000.0),
            ErrorClass::Missing => "missing".into(),
            ErrorClass::Surplus => unreachable!(),
        };
        println!("  {:>6.3} s {:<3} {what}", n.onset, labels.label(n.pitch));
    }
    for &j in &result.surplus {
        let n = &take.notes[j];
        println!("surplus: {:.3} s {}", n.onset, labels.label(n.pitch));
    }
    println!(
        "{} correct, {} missing, {} surplus, total |offset| {:.3} s",
        result.matches.len(),
        result.missing.len(),
        result.surplus.len(),
        result.total_abs_offset()
    );
}
