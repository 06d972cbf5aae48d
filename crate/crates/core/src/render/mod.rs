//! SVG charts for a practice session: the reference score, per-take
//! overlays, onset densities, per-note error heat and offset
//! distributions.
//!
//! Every semantic element carries a class attribute (`measure`, `beat`,
//! `note-gt`, `note-missing`, `note-surplus`, `note-correct`, `density`,
//! `density-baseline`, `gt-tick`, `note-heat`, `mean-marker`, `zero-line`)
//! so documents can be checked by parsing rather than by pixels.

mod svg;
mod theme;

use std::collections::BTreeMap;

use thiserror::Error;

pub use svg::{fixed, num};
pub use theme::{ColorScale, Colors, Margins, Rgb, Theme};

use crate::matching::{MatchResult, Recording, Tolerance};
use crate::score::{Grid, GroundTruth};
use crate::stats::{lane_order, DensityCurve, NoteAggregate, PitchSummary};
use svg::SvgDoc;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("overlay supports at most {cap} recordings, got {count}; use the density view for larger sessions")]
    TooManyRecordings { count: usize, cap: usize },
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("no pitch summaries to draw")]
    NoSummaries,
    #[error("invalid theme: {0}")]
    InvalidTheme(String),
}

/// Decimals kept for measure and beat positions, so drawn widths keep
/// duration ratios to 1e-6 even for narrow measures.
const GRID_DECIMALS: usize = 6;

/// Vertical gap between a lane edge and its glyphs.
const LANE_PAD: f64 = 2.0;

struct Lanes {
    rows: Vec<(u8, f64)>,
    height: f64,
}

impl Lanes {
    fn new(pitches: &[u8], top: f64, height: f64) -> Self {
        let rows = lane_order(pitches)
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, top + i as f64 * height))
            .collect();
        Lanes { rows, height }
    }

    fn top(&self, pitch: u8) -> f64 {
        self.rows.iter().find(|(p, _)| *p == pitch).map_or(0.0, |(_, y)| *y)
    }

    fn bottom(&self) -> f64 {
        self.rows.last().map_or(0.0, |(_, y)| y + self.height)
    }

    fn first_top(&self) -> f64 {
        self.rows.first().map_or(0.0, |(_, y)| *y)
    }
}

fn timeline_doc(grid: &Grid, lanes: &Lanes, extra_height: f64, theme: &Theme) -> SvgDoc {
    let width = theme.x(grid.end()) + theme.margins.right;
    let height = lanes.bottom() + extra_height + theme.margins.bottom;
    background(width, height, theme)
}

fn background(width: f64, height: f64, theme: &Theme) -> SvgDoc {
    let mut doc = SvgDoc::new(width, height, &theme.font_family, theme.font_size);
    doc.empty(
        "rect",
        &[
            ("class", "background".into()),
            ("x", "0".into()),
            ("y", "0".into()),
            ("width", num(width)),
            ("height", num(height)),
            ("fill", theme.colors.background.to_string()),
        ],
    );
    doc
}

/// Measure boxes with their numbers, plus a line at every beat start and
/// at each measure's end.
fn draw_grid(doc: &mut SvgDoc, grid: &Grid, top: f64, bottom: f64, theme: &Theme) {
    let stroke = theme.colors.grid_line.to_string();
    doc.open("g", &[("class", "grid".into())]);
    for m in &grid.measures {
        doc.empty(
            "rect",
            &[
                ("class", "measure".into()),
                ("data-index", m.index.to_string()),
                ("x", fixed(theme.x(m.start), GRID_DECIMALS)),
                ("y", num(top)),
                ("width", fixed(m.duration() * theme.px_per_second, GRID_DECIMALS)),
                ("height", num(bottom - top)),
                ("fill", "none".into()),
                ("stroke", stroke.clone()),
            ],
        );
        doc.text(
            "text",
            &[
                ("class", "measure-number".into()),
                ("x", num(theme.x(m.start) + 2.0)),
                ("y", num(top - 6.0)),
                ("fill", theme.colors.text.to_string()),
            ],
            &(m.index + 1).to_string(),
        );
        for x in m.beats.iter().map(|b| b.start).chain(std::iter::once(m.end)) {
            doc.empty(
                "line",
                &[
                    ("class", "beat".into()),
                    ("x1", fixed(theme.x(x), GRID_DECIMALS)),
                    ("y1", num(top)),
                    ("x2", fixed(theme.x(x), GRID_DECIMALS)),
                    ("y2", num(bottom)),
                    ("stroke", stroke.clone()),
                    ("stroke-dasharray", "2 2".into()),
                ],
            );
        }
    }
    doc.close();
}

fn draw_lane_labels(doc: &mut SvgDoc, lanes: &Lanes, labels: impl Fn(u8) -> String, theme: &Theme) {
    doc.open("g", &[("class", "lane-labels".into()), ("text-anchor", "end".into())]);
    for &(pitch, y) in &lanes.rows {
        doc.text(
            "text",
            &[
                ("class", "lane-label".into()),
                ("data-pitch", pitch.to_string()),
                ("x", num(theme.margins.left - 6.0)),
                ("y", num(y + lanes.height / 2.0 + theme.font_size * 0.35)),
                ("fill", theme.colors.text.to_string()),
            ],
            &labels(pitch),
        );
    }
    doc.close();
}

/// Rounded note glyph of theme width, centered on `x_center`.
fn glyph(doc: &mut SvgDoc, x_center: f64, y: f64, height: f64, theme: &Theme, attrs: &[(&str, String)]) {
    let mut all: Vec<(&str, String)> = attrs.to_vec();
    all.extend([
        ("x", num(x_center - theme.glyph_width / 2.0)),
        ("y", num(y)),
        ("width", num(theme.glyph_width)),
        ("height", num(height)),
        ("rx", "2".into()),
    ]);
    doc.empty("rect", &all);
}

/// The reference piece: measure grid, one lane per pitch, neutral note
/// glyphs at their onsets.
pub fn render_ground_truth(gt: &GroundTruth, grid: &Grid, theme: &Theme) -> Result<String, RenderError> {
    theme.validate()?;
    let lanes = Lanes::new(&gt.pitches(), theme.margins.top, theme.lane_height);
    let mut doc = timeline_doc(grid, &lanes, 0.0, theme);
    draw_grid(&mut doc, grid, lanes.first_top(), lanes.bottom(), theme);
    draw_lane_labels(&mut doc, &lanes, |p| theme.labels.label(p), theme);
    doc.open("g", &[("class", "ground-truth".into())]);
    for (i, n) in gt.notes().iter().enumerate() {
        glyph(
            &mut doc,
            theme.x(n.onset),
            lanes.top(n.pitch) + LANE_PAD,
            lanes.height - 2.0 * LANE_PAD,
            theme,
            &[
                ("class", "note-gt".into()),
                ("data-index", i.to_string()),
                ("data-pitch", n.pitch.to_string()),
                ("fill", theme.colors.gt_note.to_string()),
            ],
        );
    }
    doc.close();
    Ok(doc.finish())
}

/// Reference outlines with every take's classified notes on top, one
/// sub-row per take inside each lane.
pub fn render_overlay(
    gt: &GroundTruth,
    recordings: &[Recording],
    results: &[MatchResult],
    theme: &Theme,
) -> Result<String, RenderError> {
    theme.validate()?;
    if recordings.len() > theme.max_overlay_recordings {
        return Err(RenderError::TooManyRecordings {
            count: recordings.len(),
            cap: theme.max_overlay_recordings,
        });
    }
    if recordings.len() != results.len() {
        return Err(RenderError::Inconsistent(format!(
            "{} recordings but {} match results",
            recordings.len(),
            results.len()
        )));
    }
    for (rec, res) in recordings.iter().zip(results) {
        check_result(gt, rec, res)?;
    }

    let takes = recordings.len().max(1) as f64;
    let sub = ((theme.lane_height - 2.0 * LANE_PAD) / takes).max(4.0);
    let lane_height = sub * takes + 2.0 * LANE_PAD;
    let mut pitches = gt.pitches();
    for rec in recordings {
        pitches.extend(rec.notes.pitches());
    }
    let lanes = Lanes::new(&pitches, theme.margins.top, lane_height);
    let grid = crate::score::compute_grid(gt);
    let mut doc = timeline_doc(&grid, &lanes, 0.0, theme);
    draw_grid(&mut doc, &grid, lanes.first_top(), lanes.bottom(), theme);
    draw_lane_labels(&mut doc, &lanes, |p| theme.labels.label(p), theme);

    doc.open("g", &[("class", "ground-truth".into())]);
    for (i, n) in gt.notes().iter().enumerate() {
        glyph(
            &mut doc,
            theme.x(n.onset),
            lanes.top(n.pitch) + 1.0,
            lane_height - 2.0,
            theme,
            &[
                ("class", "note-gt".into()),
                ("data-index", i.to_string()),
                ("data-pitch", n.pitch.to_string()),
                ("fill", "none".into()),
                ("stroke", theme.colors.gt_note.to_string()),
            ],
        );
    }
    doc.close();

    for (k, (rec, res)) in recordings.iter().zip(results).enumerate() {
        let row = |pitch: u8| lanes.top(pitch) + LANE_PAD + k as f64 * sub + 0.5;
        let h = sub - 1.0;
        let tolerance = res.tolerance.seconds();
        doc.open(
            "g",
            &[("class", "recording".into()), ("data-recording", rec.id.clone())],
        );
        for &i in &res.missing {
            let n = &gt.notes()[i];
            glyph(
                &mut doc,
                theme.x(n.onset),
                row(n.pitch),
                h,
                theme,
                &[
                    ("class", "note-missing".into()),
                    ("data-gt-index", i.to_string()),
                    ("fill", theme.colors.missing.to_string()),
                ],
            );
        }
        for m in &res.matches {
            let n = &rec.notes[m.rec_index];
            glyph(
                &mut doc,
                theme.x(n.onset),
                row(n.pitch),
                h,
                theme,
                &[
                    ("class", "note-correct".into()),
                    ("data-gt-index", m.gt_index.to_string()),
                    ("data-offset", fixed(m.offset, 6)),
                    ("fill", theme.correct_color(m.offset, tolerance).to_string()),
                ],
            );
        }
        for &i in &res.surplus {
            let n = &rec.notes[i];
            glyph(
                &mut doc,
                theme.x(n.onset),
                row(n.pitch),
                h,
                theme,
                &[
                    ("class", "note-surplus".into()),
                    ("data-rec-index", i.to_string()),
                    ("fill", theme.colors.surplus.to_string()),
                ],
            );
        }
        doc.close();
    }
    Ok(doc.finish())
}

fn check_result(gt: &GroundTruth, rec: &Recording, res: &MatchResult) -> Result<(), RenderError> {
    let (n_gt, n_rec) = (gt.notes().len(), rec.notes.len());
    let bad_gt = res
        .missing
        .iter()
        .copied()
        .chain(res.matches.iter().map(|m| m.gt_index))
        .any(|i| i >= n_gt);
    let bad_rec = res
        .surplus
        .iter()
        .copied()
        .chain(res.matches.iter().map(|m| m.rec_index))
        .any(|i| i >= n_rec);
    if bad_gt || bad_rec || rec.id != res.recording_id {
        return Err(RenderError::Inconsistent(format!(
            "match result {:?} does not belong to recording {:?}",
            res.recording_id, rec.id
        )));
    }
    Ok(())
}

/// Closed area path under `points` (already in pixels) down to `baseline`.
fn area_path(points: &[(f64, f64)], baseline: f64) -> String {
    let mut d = String::new();
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        d.push_str(&format!("M{} {}", num(first.0), num(baseline)));
        for (x, y) in points {
            d.push_str(&format!(" L{} {}", num(*x), num(*y)));
        }
        d.push_str(&format!(" L{} {} Z", num(last.0), num(baseline)));
    }
    d
}

fn baseline(doc: &mut SvgDoc, pitch: u8, x1: f64, x2: f64, y: f64, theme: &Theme) {
    doc.empty(
        "line",
        &[
            ("class", "density-baseline".into()),
            ("data-pitch", pitch.to_string()),
            ("x1", num(x1)),
            ("y1", num(y)),
            ("x2", num(x2)),
            ("y2", num(y)),
            ("stroke", theme.colors.grid_line.to_string()),
        ],
    );
}

/// Pooled onset density per pitch as area charts, each lane scaled to its
/// own maximum, with reference onsets as ticks.
pub fn render_density(
    gt: &GroundTruth,
    density: &BTreeMap<u8, DensityCurve>,
    theme: &Theme,
) -> Result<String, RenderError> {
    theme.validate()?;
    let mut pitches = gt.pitches();
    pitches.extend(density.keys().copied());
    let lanes = Lanes::new(&pitches, theme.margins.top, theme.chart_height);
    let grid = crate::score::compute_grid(gt);
    let mut doc = timeline_doc(&grid, &lanes, 0.0, theme);
    draw_grid(&mut doc, &grid, lanes.first_top(), lanes.bottom(), theme);
    draw_lane_labels(&mut doc, &lanes, |p| theme.labels.label(p), theme);
    let end = grid.end();

    for &(pitch, top) in &lanes.rows {
        let base = top + lanes.height - LANE_PAD;
        let amplitude = lanes.height - 3.0 * LANE_PAD;
        doc.open(
            "g",
            &[("class", "density-lane".into()), ("data-pitch", pitch.to_string())],
        );
        baseline(&mut doc, pitch, theme.x(0.0), theme.x(end), base, theme);
        if let Some(curve) = density.get(&pitch).filter(|c| !c.is_zero()) {
            let max = curve.max_value();
            let points: Vec<(f64, f64)> = curve
                .grid()
                .positions()
                .zip(&curve.values)
                .filter(|(t, _)| (0.0..=end).contains(t))
                .map(|(t, v)| (theme.x(t), base - v / max * amplitude))
                .collect();
            doc.empty(
                "path",
                &[
                    ("class", "density".into()),
                    ("data-pitch", pitch.to_string()),
                    ("data-bandwidth", fixed(curve.bandwidth, 6)),
                    ("d", area_path(&points, base)),
                    ("fill", theme.colors.density_fill.to_string()),
                    ("fill-opacity", "0.6".into()),
                ],
            );
        }
        for n in gt.notes().iter().filter(|n| n.pitch == pitch) {
            doc.empty(
                "line",
                &[
                    ("class", "gt-tick".into()),
                    ("x1", num(theme.x(n.onset))),
                    ("y1", num(top + LANE_PAD)),
                    ("x2", num(theme.x(n.onset))),
                    ("y2", num(base)),
                    ("stroke", theme.colors.gt_note.to_string()),
                ],
            );
        }
        doc.close();
    }
    Ok(doc.finish())
}

/// Reference notes filled by mean absolute offset over the tolerance.
/// Notes that were never matched take the top of the scale; notes missed
/// in at least half the takes get a stroke in the missing color.
pub fn render_gt_heat(
    gt: &GroundTruth,
    aggregates: &[NoteAggregate],
    tolerance: Tolerance,
    theme: &Theme,
) -> Result<String, RenderError> {
    theme.validate()?;
    if aggregates.len() != gt.notes().len() {
        return Err(RenderError::Inconsistent(format!(
            "{} aggregates for {} reference notes",
            aggregates.len(),
            gt.notes().len()
        )));
    }
    let legend_height = 40.0;
    let lanes = Lanes::new(&gt.pitches(), theme.margins.top, theme.lane_height);
    let grid = crate::score::compute_grid(gt);
    let mut doc = timeline_doc(&grid, &lanes, legend_height, theme);
    draw_grid(&mut doc, &grid, lanes.first_top(), lanes.bottom(), theme);
    draw_lane_labels(&mut doc, &lanes, |p| theme.labels.label(p), theme);

    let tol = tolerance.seconds();
    doc.open("g", &[("class", "ground-truth".into())]);
    for (n, agg) in gt.notes().iter().zip(aggregates) {
        let position = agg.mean_abs_offset.map_or(1.0, |m| (m / tol).clamp(0.0, 1.0));
        let mut attrs = vec![
            ("class", "note-heat".to_string()),
            ("data-index", agg.gt_index.to_string()),
            ("data-scale", fixed(position, 6)),
            ("data-miss-fraction", fixed(agg.miss_fraction, 6)),
            ("fill", theme.colors.heat_scale.sample(position).to_string()),
        ];
        if agg.miss_fraction >= 0.5 {
            attrs.push(("stroke", theme.colors.missing.to_string()));
            attrs.push(("stroke-width", "2".into()));
        }
        glyph(
            &mut doc,
            theme.x(n.onset),
            lanes.top(n.pitch) + LANE_PAD,
            lanes.height - 2.0 * LANE_PAD,
            theme,
            &attrs,
        );
    }
    doc.close();

    let y = lanes.bottom() + 12.0;
    let x = theme.margins.left;
    let bar_width = 120.0;
    doc.open("g", &[("class", "legend".into())]);
    doc.open("defs", &[]);
    doc.open(
        "linearGradient",
        &[
            ("id", "heat-scale".into()),
            ("x1", "0".into()),
            ("x2", "1".into()),
            ("y1", "0".into()),
            ("y2", "0".into()),
        ],
    );
    for (t, c) in theme.colors.heat_scale.stops() {
        doc.empty("stop", &[("offset", num(*t)), ("stop-color", c.to_string())]);
    }
    doc.close();
    doc.close();
    doc.empty(
        "rect",
        &[
            ("class", "legend-scale".into()),
            ("x", num(x)),
            ("y", num(y)),
            ("width", num(bar_width)),
            ("height", "10".into()),
            ("fill", "url(#heat-scale)".into()),
        ],
    );
    let label = |doc: &mut SvgDoc, x: f64, anchor: &str, text: &str| {
        doc.text(
            "text",
            &[
                ("class", "legend-label".into()),
                ("x", num(x)),
                ("y", num(y + 22.0)),
                ("text-anchor", anchor.into()),
                ("fill", theme.colors.text.to_string()),
            ],
            text,
        );
    };
    label(&mut doc, x, "start", "0 ms");
    label(&mut doc, x + bar_width, "end", &format!("{} ms", num(tol * 1000.0)));
    let miss_x = x + bar_width + 24.0;
    doc.empty(
        "rect",
        &[
            ("class", "legend-missed".into()),
            ("x", num(miss_x)),
            ("y", num(y)),
            ("width", num(theme.glyph_width)),
            ("height", "10".into()),
            ("rx", "2".into()),
            ("fill", "none".into()),
            ("stroke", theme.colors.missing.to_string()),
            ("stroke-width", "2".into()),
        ],
    );
    label(
        &mut doc,
        miss_x + theme.glyph_width + 4.0,
        "start",
        "missed in half the takes or more",
    );
    doc.close();
    Ok(doc.finish())
}

/// One row per pitch: offset density centered on a shared zero line over
/// a symmetric range of ± max(|offset|, tolerance), with a mean marker.
pub fn render_pitch_summary(
    summaries: &[PitchSummary],
    tolerance: Tolerance,
    theme: &Theme,
) -> Result<String, RenderError> {
    theme.validate()?;
    if summaries.is_empty() {
        return Err(RenderError::NoSummaries);
    }
    let range = summaries
        .iter()
        .flat_map(|s| s.offsets.iter())
        .fold(tolerance.seconds(), |acc, o| acc.max(o.abs()));
    let ops = theme.offset_px_per_second;
    let zero_x = theme.margins.left + range * ops;
    let width = zero_x + range * ops + theme.margins.right;
    let by_pitch: BTreeMap<u8, &PitchSummary> = summaries.iter().map(|s| (s.pitch, s)).collect();
    let pitches: Vec<u8> = by_pitch.keys().copied().collect();
    let lanes = Lanes::new(&pitches, theme.margins.top, theme.chart_height);
    let height = lanes.bottom() + theme.margins.bottom + 14.0;
    let mut doc = background(width, height, theme);
    let x_of = |offset: f64| zero_x + offset * ops;

    draw_lane_labels(&mut doc, &lanes, |p| by_pitch[&p].label.clone(), theme);
    doc.empty(
        "line",
        &[
            ("class", "zero-line".into()),
            ("x1", num(zero_x)),
            ("y1", num(lanes.first_top())),
            ("x2", num(zero_x)),
            ("y2", num(lanes.bottom())),
            ("stroke", theme.colors.gt_note.to_string()),
        ],
    );
    doc.open("g", &[("class", "axis".into()), ("text-anchor", "middle".into())]);
    for v in [-range, 0.0, range] {
        doc.text(
            "text",
            &[
                ("class", "axis-label".into()),
                ("x", num(x_of(v))),
                ("y", num(lanes.bottom() + 14.0)),
                ("fill", theme.colors.text.to_string()),
            ],
            &format!("{} ms", num(v * 1000.0)),
        );
    }
    doc.close();

    for &(pitch, top) in &lanes.rows {
        let s = by_pitch[&pitch];
        let base = top + lanes.height - LANE_PAD;
        let amplitude = lanes.height - 3.0 * LANE_PAD;
        doc.open(
            "g",
            &[("class", "summary-row".into()), ("data-pitch", pitch.to_string())],
        );
        baseline(&mut doc, pitch, x_of(-range), x_of(range), base, theme);
        if !s.curve.is_zero() {
            let max = s.curve.max_value();
            let limit = range + 1e-12;
            let points: Vec<(f64, f64)> = s
                .curve
                .grid()
                .positions()
                .zip(&s.curve.values)
                .filter(|(o, _)| o.abs() <= limit)
                .map(|(o, v)| (x_of(o), base - v / max * amplitude))
                .collect();
            doc.empty(
                "path",
                &[
                    ("class", "density".into()),
                    ("data-pitch", pitch.to_string()),
                    ("d", area_path(&points, base)),
                    ("fill", theme.colors.density_fill.to_string()),
                    ("fill-opacity", "0.6".into()),
                ],
            );
        }
        if let Some(mean) = s.mean {
            doc.empty(
                "line",
                &[
                    ("class", "mean-marker".into()),
                    ("data-mean", fixed(mean, 6)),
                    ("x1", num(x_of(mean))),
                    ("y1", num(top + LANE_PAD)),
                    ("x2", num(x_of(mean))),
                    ("y2", num(base)),
                    ("stroke", theme.colors.missing.to_string()),
                    ("stroke-width", "2".into()),
                ],
            );
        }
        let stats = match (s.mean, s.stddev) {
            (Some(m), Some(sd)) => format!(
                "hit {}%, mean {} ms, sd {} ms",
                fixed(s.hit_rate * 100.0, 1),
                fixed(m * 1000.0, 1),
                fixed(sd * 1000.0, 1)
            ),
            _ => format!("hit {}%", fixed(s.hit_rate * 100.0, 1)),
        };
        doc.text(
            "text",
            &[
                ("class", "row-stats".into()),
                ("x", num(x_of(range) - 2.0)),
                ("y", num(top + theme.font_size)),
                ("text-anchor", "end".into()),
                ("fill", theme.colors.text.to_string()),
            ],
            &stats,
        );
        doc.close();
    }
    Ok(doc.finish())
}
