//! Drives the command line in-process: simulate takes, analyze them and
//! render every chart.
//!
//!     cargo run --example cli_pipeline [OUT_DIR]

mod common;

use drumdiff::cli;
use drumdiff::midi_io::write_smf;
use drumdiff::patterns::rock_beat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = common::out_dir("cli_pipeline");
    let gt = rock_beat(4);
    let gt_path = dir.join("groove.mid");
    std::fs::write(
        &gt_path,
        write_smf(gt.notes(), gt.tempo_map(), gt.timesig_map(), gt.division()),
    )?;
    let gt_arg = gt_path.to_string_lossy().into_owned();
    let takes = dir.join("takes");
    let takes_arg = takes.to_string_lossy().into_owned();
    let pattern = takes.join("*.mid").to_string_lossy().into_owned();
    let out = dir.join("out").to_string_lossy().into_owned();
    let (mut stdout, mut stderr) = (std::io::stdout(), std::io::stderr());

    let steps: [Vec<&str>; 3] = [
        vec![
            "simulate",
            "--ground-truth",
            &gt_arg,
            "--out",
            &takes_arg,
            "--takes",
            "8",
            "--seed",
            "5",
            "--bias",
            "36=0.03",
            "--jitter",
            "0.01",
            "--miss",
            "0.05",
        ],
        vec![
            "analyze",
            "--ground-truth",
            &gt_arg,
            "--recordings",
            &pattern,
            "--out",
            &out,
        ],
        vec![
            "render",
            "--ground-truth",
            &gt_arg,
            "--recordings",
            &pattern,
            "--out",
            &out,
            "--session",
            "groove",
        ],
    ];
    for step in steps {
        println!("$ drumdiff {}", step.join(" "));
        let args = std::iter::once("drumdiff").chain(step);
        if let Err(e) = cli::run(args, &mut stdout, &mut stderr) {
            eprintln!("error: {e}");
            std::process::exit(i32::from(e.exit_code()));
        }
    }
    Ok(())
}
