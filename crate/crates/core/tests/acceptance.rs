//! Acceptance suite: eight end-to-end criteria, one PASS/FAIL line each.
//!
//!     cargo test -p drumdiff --test acceptance
//!
//! Random inputs come from SplitMix64 with fixed seeds, so every run sees
//! the same cases.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use drumdiff::analysis::analyze;
use drumdiff::cli;
use drumdiff::matching::{classify, match_recording, AlignMode, ErrorClass, MatchResult, Recording, Tolerance};
use drumdiff::midi_io::{extract_notes, parse_smf, write_smf, Note, NoteList, TempoChange, TempoMap, TimeSigMap};
use drumdiff::patterns::{rock_beat, tempo_change, BASS_DRUM, SNARE};
use drumdiff::render::{render_ground_truth, render_overlay, Theme};
use drumdiff::score::{compute_grid, GroundTruth};
use drumdiff::simulator::{simulate_session, ErrorModel, SplitMix64};
use drumdiff::stats::{kde, silverman_bandwidth, PitchLabels, UniformGrid};

/// Seed of the closed-loop bias-recovery session.
const BIAS_SEED: u64 = 20_240_501;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_open01()
}

fn below(rng: &mut SplitMix64, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// General MIDI percussion keys.
const GM_PERCUSSION: std::ops::RangeInclusive<u8> = 35..=81;

fn parser_round_trip() -> Outcome {
    let mut rng = SplitMix64::new(1);
    let division = 480u16;
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let us = 250_000 + below(&mut rng, 750_001) as u32;
        let tempo = TempoMap::constant(us);
        let half_tick = 0.5 * f64::from(us) * 1e-6 / f64::from(division);
        let count = below(&mut rng, 257);
        let notes: NoteList = (0..count)
            .map(|_| {
                let pitch = *GM_PERCUSSION.start() + below(&mut rng, GM_PERCUSSION.len()) as u8;
                let velocity = 1 + below(&mut rng, 127) as u8;
                Note::new(pitch, uniform(&mut rng, 0.0, 30.0), uniform(&mut rng, 0.0, 0.5)).with_velocity(velocity)
            })
            .collect();
        let bytes = write_smf(&notes, &tempo, &TimeSigMap::default(), division);
        let parsed = parse_smf(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        let back = extract_notes(&parsed.tracks, &parsed.tempo_map, parsed.header.division);
        ensure(back.notes.len() == notes.len(), || {
            format!("case {case}: {} notes in, {} out", notes.len(), back.notes.len())
        })?;
        // Quantization is monotone, so per-pitch sorted onsets pair up by rank.
        let by_pitch = |list: &NoteList| {
            let mut m: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
            for n in list.iter() {
                m.entry(n.pitch).or_default().push(n.onset);
            }
            m.values_mut().for_each(|v| v.sort_by(f64::total_cmp));
            m
        };
        let (a, b) = (by_pitch(&notes), by_pitch(&back.notes));
        ensure(a.keys().eq(b.keys()), || format!("case {case}: pitch sets differ"))?;
        for (pitch, onsets) in &a {
            ensure(onsets.len() == b[pitch].len(), || {
                format!("case {case}: pitch {pitch} count differs")
            })?;
            for (x, y) in onsets.iter().zip(&b[pitch]) {
                let err = (x - y).abs();
                worst = worst.max(err);
                ensure(err <= half_tick + 1e-12 && err <= 1.05e-3, || {
                    format!("case {case}: pitch {pitch} onset {x} came back as {y}")
                })?;
            }
        }
    }
    Ok(format!("200 lists, worst onset error {:.3} ms", worst * 1e3))
}

/// Best (pairs, total |offset|) over every injective window-feasible
/// assignment.
fn exhaustive(reference: &[f64], played: &[f64], tol: f64) -> (usize, f64) {
    fn go(i: usize, r: &[f64], p: &[f64], tol: f64, used: &mut [bool], acc: (usize, f64), best: &mut (usize, f64)) {
        if i == r.len() {
            if acc.0 > best.0 || (acc.0 == best.0 && acc.1 < best.1) {
                *best = acc;
            }
            return;
        }
        go(i + 1, r, p, tol, used, acc, best);
        for j in 0..p.len() {
            let d = (p[j] - r[i]).abs();
            if !used[j] && d <= tol {
                used[j] = true;
                go(i + 1, r, p, tol, used, (acc.0 + 1, acc.1 + d), best);
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    go(
        0,
        reference,
        played,
        tol,
        &mut vec![false; played.len()],
        (0, 0.0),
        &mut best,
    );
    best
}

fn matcher_oracle() -> Outcome {
    let mut rng = SplitMix64::new(2);
    let tolerances = [0.0625, 0.125, 0.25];
    let mut total_pairs = 0;
    for case in 0..500 {
        let tol = tolerances[below(&mut rng, 3)];
        // Onsets on a 1/256 s lattice keep every sum exact.
        let onsets =
            |rng: &mut SplitMix64, n: usize| -> Vec<f64> { (0..n).map(|_| below(rng, 513) as f64 / 256.0).collect() };
        let n_gt = 1 + below(&mut rng, 8);
        let n_rec = below(&mut rng, 9);
        let gt_onsets = onsets(&mut rng, n_gt);
        let rec_onsets = onsets(&mut rng, n_rec);
        let gt_notes: NoteList = gt_onsets.iter().map(|&t| Note::new(SNARE, t, 0.05)).collect();
        let rec_notes: NoteList = rec_onsets.iter().map(|&t| Note::new(SNARE, t, 0.05)).collect();
        let gt = GroundTruth::new(gt_notes.clone(), TempoMap::default(), TimeSigMap::default(), 480)
            .map_err(|e| e.to_string())?;
        let result = match_recording(
            &gt,
            &Recording::new("r", rec_notes.clone()),
            Tolerance::new(tol).unwrap(),
        );
        let got = (result.matches.len(), result.total_abs_offset());
        let want = exhaustive(&gt_onsets, &rec_onsets, tol);
        ensure(got == want, || {
            format!("case {case}: gt {gt_onsets:?} rec {rec_onsets:?} tol {tol}: matcher {got:?}, exhaustive {want:?}")
        })?;
        total_pairs += got.0;
    }
    Ok(format!("500 instances agree exactly ({total_pairs} pairs in total)"))
}

fn taxonomy_case(
    name: &str,
    gt: &[Note],
    played: &[Note],
    tol: f64,
    want_gt: &[ErrorClass],
    want_rec: &[ErrorClass],
) -> Result<(), String> {
    let gt_list = NoteList::new(gt.to_vec());
    let rec_list = NoteList::new(played.to_vec());
    ensure(gt_list.as_slice() == gt && rec_list.as_slice() == played, || {
        format!("{name}: fixture not in sorted order")
    })?;
    let gt_piece = GroundTruth::new(gt_list.clone(), TempoMap::default(), TimeSigMap::default(), 480)
        .map_err(|e| e.to_string())?;
    let result = match_recording(
        &gt_piece,
        &Recording::new(name, rec_list.clone()),
        Tolerance::new(tol).unwrap(),
    );
    let classes = classify(&gt_list, &rec_list, &result).map_err(|e| e.to_string())?;
    ensure(classes.reference == want_gt, || {
        format!("{name}: reference classes {:?}", classes.reference)
    })?;
    ensure(classes.played == want_rec, || {
        format!("{name}: played classes {:?}", classes.played)
    })?;
    let missing: BTreeSet<usize> = (0..want_gt.len())
        .filter(|&i| want_gt[i] == ErrorClass::Missing)
        .collect();
    let surplus: BTreeSet<usize> = (0..want_rec.len())
        .filter(|&i| want_rec[i] == ErrorClass::Surplus)
        .collect();
    ensure(result.missing == missing && result.surplus == surplus, || {
        format!("{name}: index sets {result:?}")
    })
}

fn error_taxonomy() -> Outcome {
    use ErrorClass::{Correct, Missing, Surplus};
    let n = Note::new;
    let gt = [
        n(36, 0.0, 0.1),
        n(42, 0.0, 0.1),
        n(42, 0.25, 0.1),
        n(38, 0.5, 0.1),
        n(36, 1.0, 0.1),
    ];

    taxonomy_case("perfect", &gt, &gt, 0.25, &[Correct(0.0); 5], &[Correct(0.0); 5])?;
    taxonomy_case("empty", &gt, &[], 0.25, &[Missing; 5], &[])?;

    // Late kick, on-time hats, skipped snare, stray hat, snare hit where the
    // kick belongs.
    let played = [
        n(42, 0.0, 0.1),
        n(36, 0.02, 0.1),
        n(42, 0.26, 0.1),
        n(42, 0.6, 0.1),
        n(38, 1.0, 0.1),
    ];
    taxonomy_case(
        "mixed",
        &gt,
        &played,
        0.25,
        &[
            Correct(0.02 - 0.0),
            Correct(0.0),
            Correct(0.26 - 0.25),
            Missing,
            Missing,
        ],
        &[
            Correct(0.0),
            Correct(0.02 - 0.0),
            Correct(0.26 - 0.25),
            Surplus,
            Surplus,
        ],
    )?;

    // A hit exactly at the window edge is correct; just outside it is not.
    let edge_gt = [n(38, 1.0, 0.1), n(38, 2.0, 0.1)];
    let edge_played = [n(38, 1.125, 0.1), n(38, 2.15625, 0.1)];
    taxonomy_case(
        "window edge",
        &edge_gt,
        &edge_played,
        0.125,
        &[Correct(0.125), Missing],
        &[Correct(0.125), Surplus],
    )?;

    // Two takes of the same note: only one can be matched, the closer one.
    let double_gt = [n(42, 1.0, 0.1)];
    let double_played = [n(42, 0.96875, 0.1), n(42, 1.015625, 0.1)];
    taxonomy_case(
        "double hit",
        &double_gt,
        &double_played,
        0.25,
        &[Correct(0.015625)],
        &[Surplus, Correct(0.015625)],
    )?;

    Ok("perfect, empty, mixed, window edge and double hit fixtures exact".into())
}

fn direct_kde(samples: &[f64], h: f64, x: f64) -> f64 {
    let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    samples
        .iter()
        .map(|s| c * (-0.5 * ((x - s) / h).powi(2)).exp())
        .sum::<f64>()
        / (samples.len() as f64 * h)
}

fn kde_normalization() -> Outcome {
    let mut rng = SplitMix64::new(4);
    let (mut lo_area, mut hi_area, mut worst_spot) = (f64::INFINITY, 0.0f64, 0.0f64);
    for case in 0..100 {
        let n = 2 + below(&mut rng, 199);
        let center = uniform(&mut rng, -5.0, 5.0);
        let spread = uniform(&mut rng, 0.005, 2.0);
        let samples: Vec<f64> = (0..n).map(|_| center + spread * (rng.next_open01() - 0.5)).collect();
        let h = silverman_bandwidth(&samples).map_err(|e| format!("case {case}: {e}"))?;
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (start, end) = (min - 4.0 * h, max + 4.0 * h);
        let len = (((end - start) / (h / 20.0)).ceil() as usize + 1).max(1000);
        let curve = kde(&samples, h, UniformGrid::spanning(start, end, len));
        let area = curve.integral();
        lo_area = lo_area.min(area);
        hi_area = hi_area.max(area);
        ensure((0.99..=1.01).contains(&area), || format!("case {case}: area {area}"))?;
        for _ in 0..5 {
            let i = below(&mut rng, len);
            let x = curve.grid().position(i);
            let err = (curve.values[i] - direct_kde(&samples, h, x)).abs();
            worst_spot = worst_spot.max(err);
            ensure(err < 1e-9, || format!("case {case}: value at {x} off by {err:e}"))?;
        }
    }
    Ok(format!(
        "areas in [{lo_area:.5}, {hi_area:.5}], worst spot error {worst_spot:.1e}"
    ))
}

fn bias_recovery() -> Outcome {
    let gt = rock_beat(4);
    ensure(gt.notes().len() == 64, || "fixture should have 64 notes".into())?;
    let model = ErrorModel {
        per_pitch_bias: BTreeMap::from([(BASS_DRUM, 0.030)]),
        jitter_sd: 0.010,
        miss_probability: 0.05,
        insertion_rate: 0.0,
        seed: BIAS_SEED,
    };
    let takes = simulate_session(&gt, &model, 50).map_err(|e| e.to_string())?;
    let analysis = analyze(&gt, takes, Tolerance::DEFAULT, AlignMode::None, &PitchLabels::default());
    let bd = analysis.summaries[&BASS_DRUM].mean.ok_or("no BD matches")?;
    let sn = analysis.summaries[&SNARE].mean.ok_or("no SN matches")?;
    let miss = analysis.overall_miss_fraction;
    let detail = format!(
        "seed {BIAS_SEED}: BD mean {:+.2} ms, SN mean {:+.2} ms, miss fraction {miss:.4}",
        bd * 1e3,
        sn * 1e3
    );
    ensure((0.025..=0.035).contains(&bd), || detail.clone())?;
    ensure((-0.005..=0.005).contains(&sn), || detail.clone())?;
    ensure((0.02..=0.08).contains(&miss), || detail.clone())?;
    Ok(detail)
}

fn measure_widths(svg: &str) -> Result<Vec<f64>, String> {
    let doc = roxmltree::Document::parse(svg).map_err(|e| e.to_string())?;
    doc.descendants()
        .filter(|n| n.attribute("class") == Some("measure"))
        .map(|n| {
            n.attribute("width")
                .ok_or("measure without width")?
                .parse::<f64>()
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn layout_proportionality() -> Outcome {
    let odd_tempo = {
        let tempo = TempoMap::new(vec![
            TempoChange {
                tick: 0,
                micros_per_quarter: 500_000,
            },
            TempoChange {
                tick: 1920,
                micros_per_quarter: 333_333,
            },
            TempoChange {
                tick: 3840,
                micros_per_quarter: 731_707,
            },
        ])
        .unwrap();
        let notes = NoteList::new(vec![Note::new(BASS_DRUM, 0.0, 0.1), Note::new(SNARE, 4.0, 0.1)]);
        GroundTruth::new(notes, tempo, TimeSigMap::default(), 480).unwrap()
    };
    let mut worst: f64 = 0.0;
    for (name, gt) in [("tempo change", tempo_change()), ("three tempi", odd_tempo)] {
        for pps in [100.0, 37.5] {
            let theme = Theme {
                px_per_second: pps,
                ..Theme::default()
            };
            let grid = compute_grid(&gt);
            let widths = measure_widths(&render_ground_truth(&gt, &grid, &theme).map_err(|e| e.to_string())?)?;
            ensure(widths.len() == grid.measures.len(), || {
                format!("{name}: {} measure boxes", widths.len())
            })?;
            for i in 0..widths.len() {
                for j in 0..widths.len() {
                    let drawn = widths[i] / widths[j];
                    let exact = grid.measures[i].duration() / grid.measures[j].duration();
                    let rel = (drawn - exact).abs() / exact;
                    worst = worst.max(rel);
                    ensure(rel <= 1e-6, || {
                        format!("{name} at {pps} px/s: measures {i}/{j} ratio {drawn} vs {exact}")
                    })?;
                }
            }
        }
    }
    let widths = measure_widths(
        &render_ground_truth(&tempo_change(), &compute_grid(&tempo_change()), &Theme::default()).unwrap(),
    )?;
    ensure(widths == [200.0, 100.0], || format!("tempo change widths {widths:?}"))?;
    Ok(format!(
        "widths [200, 100] at 100 px/s; worst relative ratio error {worst:.1e}"
    ))
}

fn count_classes(svg: &str) -> Result<[usize; 3], String> {
    let doc = roxmltree::Document::parse(svg).map_err(|e| e.to_string())?;
    let count = |c: &str| doc.descendants().filter(|n| n.attribute("class") == Some(c)).count();
    Ok([count("note-missing"), count("note-surplus"), count("note-correct")])
}

fn render_semantics() -> Outcome {
    let gt = rock_beat(2);
    let perfect = vec![Recording::new("perfect", gt.notes().clone())];
    let empty = vec![Recording::new("empty", NoteList::default())];
    let model = ErrorModel {
        per_pitch_bias: BTreeMap::from([(BASS_DRUM, 0.03)]),
        jitter_sd: 0.02,
        miss_probability: 0.15,
        insertion_rate: 1.5,
        seed: 77,
    };
    let mixed = simulate_session(&gt, &model, 4).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (name, takes) in [("perfect", perfect), ("empty", empty), ("mixed", mixed)] {
        let results: Vec<MatchResult> = takes
            .iter()
            .map(|t| match_recording(&gt, t, Tolerance::DEFAULT))
            .collect();
        let svg = render_overlay(&gt, &takes, &results, &Theme::default()).map_err(|e| e.to_string())?;
        let got = count_classes(&svg)?;
        let want = results.iter().fold([0; 3], |acc, r| {
            [
                acc[0] + r.missing.len(),
                acc[1] + r.surplus.len(),
                acc[2] + r.matches.len(),
            ]
        });
        ensure(got == want, || format!("{name}: drawn {got:?}, expected {want:?}"))?;
        lines.push(format!("{name} {}/{}/{}", want[0], want[1], want[2]));
        if name == "mixed" {
            ensure(want.iter().all(|&c| c > 0), || {
                "mixed fixture should contain every class".into()
            })?;
        }
    }
    Ok(format!("missing/surplus/correct counts match: {}", lines.join(", ")))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let gt = rock_beat(4);
    fs::write(
        root.join("gt.mid"),
        write_smf(gt.notes(), gt.tempo_map(), gt.timesig_map(), gt.division()),
    )
    .map_err(|e| e.to_string())?;
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    let (gt_path, takes, pattern, out) = (p("gt.mid"), p("takes"), p("takes/*.mid"), p("out"));
    let steps: [Vec<&str>; 3] = [
        vec![
            "simulate",
            "--ground-truth",
            &gt_path,
            "--out",
            &takes,
            "--takes",
            "50",
            "--seed",
            "8",
            "--bias",
            "36=0.03",
            "--jitter",
            "0.01",
            "--miss",
            "0.05",
            "--insert",
            "0.2",
        ],
        vec![
            "analyze",
            "--ground-truth",
            &gt_path,
            "--recordings",
            &pattern,
            "--out",
            &out,
        ],
        vec![
            "render",
            "--ground-truth",
            &gt_path,
            "--recordings",
            &pattern,
            "--out",
            &out,
            "--encodings",
            "gt,density,heat,summary",
        ],
    ];
    let mut snapshots = Vec::new();
    let mut timings = Vec::new();
    for _ in 0..2 {
        let start = Instant::now();
        for step in &steps {
            let args = std::iter::once("drumdiff").chain(step.iter().copied());
            cli::run(args, &mut std::io::sink(), &mut std::io::sink()).map_err(|e| format!("{}: {e}", step[0]))?;
        }
        timings.push(start.elapsed());
        snapshots.push(snapshot(root));
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    ensure(a.keys().eq(b.keys()), || "file sets differ between runs".into())?;
    for (name, bytes) in a {
        ensure(bytes == &b[name], || format!("{name} differs between runs"))?;
    }
    let svg = a.keys().filter(|k| k.ends_with(".svg")).count();
    let json = a.keys().filter(|k| k.ends_with(".json")).count();
    ensure(svg == 4 && json == 2, || {
        format!("expected 4 SVG and 2 JSON files, got {svg} and {json}")
    })?;
    Ok(format!(
        "{} files byte-identical across two 50-take runs ({:.2} s, {:.2} s)",
        a.len(),
        timings[0].as_secs_f64(),
        timings[1].as_secs_f64()
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "parser round-trip",
            limit: Some(Duration::from_secs(5)),
            run: parser_round_trip,
        },
        Criterion {
            id: 2,
            name: "matcher oracle equivalence",
            limit: Some(Duration::from_secs(10)),
            run: matcher_oracle,
        },
        Criterion {
            id: 3,
            name: "error-taxonomy exactness",
            limit: None,
            run: error_taxonomy,
        },
        Criterion {
            id: 4,
            name: "KDE normalization",
            limit: None,
            run: kde_normalization,
        },
        Criterion {
            id: 5,
            name: "closed-loop bias recovery",
            limit: Some(Duration::from_secs(10)),
            run: bias_recovery,
        },
        Criterion {
            id: 6,
            name: "layout proportionality",
            limit: None,
            run: layout_proportionality,
        },
        Criterion {
            id: 7,
            name: "render semantics",
            limit: None,
            run: render_semantics,
        },
        Criterion {
            id: 8,
            name: "determinism",
            limit: None,
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!(
                "took {:.2} s, limit {:.0} s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            )),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {} ({}) [{:.2} s]: {detail}",
                c.id,
                c.name,
                elapsed.as_secs_f64()
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "FAIL criterion {} ({}) [{:.2} s]: {detail}",
                    c.id,
                    c.name,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
