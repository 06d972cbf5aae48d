//! The `drumdiff` command line: `analyze`, `render` and `simulate`.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 semantic error (empty
//! piece, bad configuration, too many takes for an overlay).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{analyze, export_json, summary_table, Analysis};
use crate::matching::{AlignMode, Recording, Tolerance};
use crate::render::{
    render_density, render_ground_truth, render_gt_heat, render_overlay, render_pitch_summary, RenderError, Theme,
};
use crate::score::{compute_grid, load_ground_truth, GroundTruth, ScoreError};
use crate::simulator::{simulate_session, write_session, ErrorModel, SimError};
use crate::stats::PitchLabels;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("{0}")]
    Input(String),
    /// Inputs parse but cannot be used as asked.
    #[error("{0}")]
    Semantic(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Semantic(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "drumdiff",
    version,
    about = "Compare drum practice takes against a reference MIDI piece"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match every take against the reference; write analysis.json and print a summary table.
    Analyze(SessionArgs),
    /// Write one SVG chart per requested encoding.
    Render(RenderArgs),
    /// Generate synthetic takes from the reference piece.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Gt,
    Overlay,
    Density,
    Heat,
    Summary,
}

impl Encoding {
    pub const ALL: [Encoding; 5] = [
        Encoding::Gt,
        Encoding::Overlay,
        Encoding::Density,
        Encoding::Heat,
        Encoding::Summary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Gt => "gt",
            Encoding::Overlay => "overlay",
            Encoding::Density => "density",
            Encoding::Heat => "heat",
            Encoding::Summary => "summary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignArg {
    None,
    Median,
}

impl From<AlignArg> for AlignMode {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::None => AlignMode::None,
            AlignArg::Median => AlignMode::MedianOffset,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    /// JSON session config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reference piece (.mid).
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Take files or glob patterns (repeatable).
    #[arg(long, num_args = 1..)]
    pub recordings: Vec<String>,
    /// Matching window in seconds.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum)]
    pub align: Option<AlignArg>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Prefix for rendered file names.
    #[arg(long)]
    pub session: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// Charts to write (default: all five).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub encodings: Vec<Encoding>,
    /// Horizontal scale of the timeline charts.
    #[arg(long)]
    pub px_per_second: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON session config; its `simulate` section supplies defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reference piece (.mid).
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Directory receiving take-NNN.mid and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of takes (default 10).
    #[arg(long)]
    pub takes: Option<usize>,
    /// Base seed; take i uses seed + i - 1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-pitch timing shift, `pitch=seconds` (repeatable).
    #[arg(long, value_parser = parse_bias)]
    pub bias: Vec<(u8, f64)>,
    /// Timing jitter standard deviation in seconds.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Probability of dropping each note.
    #[arg(long)]
    pub miss: Option<f64>,
    /// Surplus notes per second.
    #[arg(long)]
    pub insert: Option<f64>,
}

fn parse_bias(s: &str) -> Result<(u8, f64), String> {
    let (p, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected pitch=seconds, got {s:?}"))?;
    let pitch: u8 = p.trim().parse().map_err(|_| format!("bad pitch {p:?}"))?;
    if pitch > 127 {
        return Err(format!("pitch {pitch} is out of range"));
    }
    let secs: f64 = v.trim().parse().map_err(|_| format!("bad seconds {v:?}"))?;
    Ok((pitch, secs))
}

/// Settings read from `--config`. Relative paths resolve against the
/// working directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub ground_truth: Option<PathBuf>,
    pub recordings: Vec<String>,
    pub tolerance: Option<f64>,
    pub align: Option<AlignMode>,
    pub out: Option<PathBuf>,
    pub session: Option<String>,
    pub encodings: Option<Vec<Encoding>>,
    pub theme: Option<Theme>,
    pub labels: BTreeMap<u8, String>,
    pub simulate: Option<SimulateConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub out: Option<PathBuf>,
    pub takes: Option<usize>,
    pub seed: u64,
    pub per_pitch_bias: BTreeMap<u8, f64>,
    pub jitter_sd: f64,
    pub miss_probability: f64,
    pub insertion_rate: f64,
}

impl SimulateConfig {
    fn model(&self) -> ErrorModel {
        ErrorModel {
            per_pitch_bias: self.per_pitch_bias.clone(),
            jitter_sd: self.jitter_sd,
            miss_probability: self.miss_probability,
            insertion_rate: self.insertion_rate,
            seed: self.seed,
        }
    }
}

/// Resolved settings for analyze and render.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub ground_truth: PathBuf,
    pub recordings: Vec<String>,
    pub tolerance: Tolerance,
    pub align: AlignMode,
    pub out: PathBuf,
    pub session: String,
    pub theme: Theme,
    pub labels: PitchLabels,
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl SessionConfig {
    pub fn resolve(args: &SessionArgs, file: &ConfigFile) -> Result<Self, CliError> {
        let ground_truth = args
            .ground_truth
            .clone()
            .or_else(|| file.ground_truth.clone())
            .ok_or_else(|| CliError::Semantic("a ground truth is required (--ground-truth)".into()))?;
        let recordings = if args.recordings.is_empty() {
            file.recordings.clone()
        } else {
            args.recordings.clone()
        };
        let tolerance = args
            .tolerance
            .or(file.tolerance)
            .unwrap_or(Tolerance::DEFAULT.seconds());
        let tolerance = Tolerance::new(tolerance).map_err(|e| CliError::Semantic(e.to_string()))?;
        let align = args.align.map(AlignMode::from).or(file.align).unwrap_or_default();
        let mut theme = file.theme.clone().unwrap_or_default();
        let mut labels = theme.labels.clone();
        for (p, l) in &file.labels {
            labels.set(*p, l.clone());
        }
        theme.labels = labels.clone();
        Ok(SessionConfig {
            ground_truth,
            recordings,
            tolerance,
            align,
            out: args
                .out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            session: args
                .session
                .clone()
                .or_else(|| file.session.clone())
                .unwrap_or_else(|| "session".into()),
            theme,
            labels,
        })
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_gt(path: &Path) -> Result<GroundTruth, CliError> {
    let bytes = read_file(path)?;
    load_ground_truth(&bytes).map_err(|e| match e {
        ScoreError::Midi(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => CliError::Semantic(format!("{}: {other}", path.display())),
    })
}

/// Expands patterns to a sorted, de-duplicated path list. A pattern that
/// matches nothing is an error.
pub fn expand_recordings(patterns: &[String]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for pattern in patterns {
        let matches: Vec<PathBuf> = glob::glob(pattern)
            .map_err(|e| CliError::Input(format!("bad pattern {pattern:?}: {e}")))?
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect();
        if matches.is_empty() {
            return Err(CliError::Input(format!("no recordings match {pattern:?}")));
        }
        paths.extend(matches);
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

fn load_recordings(patterns: &[String], log: &mut dyn Write) -> Result<Vec<Recording>, CliError> {
    let mut out = Vec::new();
    for path in expand_recordings(patterns)? {
        let bytes = read_file(&path)?;
        let id = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        let (rec, diagnostics) = Recording::from_smf(id, path.display().to_string(), &bytes)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for d in diagnostics {
            let _ = writeln!(log, "warning: {}: {d}", path.display());
        }
        out.push(rec);
    }
    Ok(out)
}

fn run_analysis(cfg: &SessionConfig, log: &mut dyn Write) -> Result<(GroundTruth, Analysis), CliError> {
    let gt = load_gt(&cfg.ground_truth)?;
    let recordings = load_recordings(&cfg.recordings, log)?;
    let analysis = analyze(&gt, recordings, cfg.tolerance, cfg.align, &cfg.labels);
    Ok((gt, analysis))
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

pub fn cmd_analyze(cfg: &SessionConfig, stdout: &mut dyn Write, log: &mut dyn Write) -> Result<PathBuf, CliError> {
    let (gt, analysis) = run_analysis(cfg, log)?;
    create_dir(&cfg.out)?;
    let path = cfg.out.join("analysis.json");
    write_output(&path, &export_json(&gt, &analysis, &cfg.labels))?;
    stdout
        .write_all(summary_table(&analysis).as_bytes())
        .map_err(|e| CliError::Input(format!("stdout: {e}")))?;
    Ok(path)
}

/// Renders each encoding to `<out>/<session>_<encoding>.svg`. When the
/// caller did not ask for specific encodings and the session has more
/// takes than an overlay can show, the overlay is skipped with a warning.
pub fn cmd_render(cfg: &SessionConfig, encodings: &[Encoding], log: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let explicit = !encodings.is_empty();
    let mut encodings = if explicit {
        encodings.to_vec()
    } else {
        Encoding::ALL.to_vec()
    };
    encodings.sort();
    encodings.dedup();
    let (gt, analysis) = run_analysis(cfg, log)?;
    let theme = &cfg.theme;
    let semantic = |e: RenderError| CliError::Semantic(e.to_string());
    create_dir(&cfg.out)?;
    let mut written = Vec::new();
    for enc in encodings {
        let svg = match enc {
            Encoding::Gt => render_ground_truth(&gt, &compute_grid(&gt), theme),
            Encoding::Overlay => match render_overlay(&gt, &analysis.recordings, &analysis.results, theme) {
                Err(e @ RenderError::TooManyRecordings { .. }) if !explicit => {
                    let _ = writeln!(log, "warning: skipping overlay: {e}");
                    continue;
                }
                other => other,
            },
            Encoding::Density => render_density(&gt, &analysis.density, theme),
            Encoding::Heat => render_gt_heat(&gt, &analysis.aggregates, cfg.tolerance, theme),
            Encoding::Summary => {
                let summaries: Vec<_> = analysis.summaries.values().cloned().collect();
                render_pitch_summary(&summaries, cfg.tolerance, theme)
            }
        }
        .map_err(semantic)?;
        let path = cfg.out.join(format!("{}_{}.svg", cfg.session, enc.name()));
        write_output(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<PathBuf, CliError> {
    let file = read_config(args.config.as_deref())?;
    let sim = file.simulate.clone().unwrap_or_default();
    let gt_path = args
        .ground_truth
        .clone()
        .or_else(|| file.ground_truth.clone())
        .ok_or_else(|| CliError::Semantic("a ground truth is required (--ground-truth)".into()))?;
    let mut model = sim.model();
    let out = args.out.clone().or(sim.out).unwrap_or_else(|| PathBuf::from("takes"));
    let takes = args.takes.or(sim.takes).unwrap_or(10);
    if let Some(seed) = args.seed {
        model.seed = seed;
    }
    for &(pitch, secs) in &args.bias {
        model.per_pitch_bias.insert(pitch, secs);
    }
    model.jitter_sd = args.jitter.unwrap_or(model.jitter_sd);
    model.miss_probability = args.miss.unwrap_or(model.miss_probability);
    model.insertion_rate = args.insert.unwrap_or(model.insertion_rate);

    let gt = load_gt(&gt_path)?;
    let sim_err = |e: SimError| match e {
        SimError::InvalidModel(_) | SimError::NoTakes => CliError::Input(e.to_string()),
        other => CliError::Input(format!("{}: {other}", out.display())),
    };
    let recordings = simulate_session(&gt, &model, takes).map_err(sim_err)?;
    write_session(&out, &gt_path.display().to_string(), &gt, &model, &recordings).map_err(sim_err)?;
    Ok(out)
}

/// Parses `args` (including the program name) and runs one command.
/// Tables go to `stdout`; progress and warnings go to `log`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, log: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            write!(stdout, "{e}").map_err(|e| CliError::Input(format!("stdout: {e}")))?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    match cli.command {
        Command::Analyze(args) => {
            let file = read_config(args.config.as_deref())?;
            let cfg = SessionConfig::resolve(&args, &file)?;
            let path = cmd_analyze(&cfg, stdout, log)?;
            let _ = writeln!(log, "wrote {}", path.display());
        }
        Command::Render(args) => {
            let file = read_config(args.session.config.as_deref())?;
            let mut cfg = SessionConfig::resolve(&args.session, &file)?;
            if let Some(pps) = args.px_per_second {
                cfg.theme.px_per_second = pps;
            }
            cfg.theme.validate().map_err(|e| CliError::Semantic(e.to_string()))?;
            let encodings = if args.encodings.is_empty() {
                file.encodings.clone().unwrap_or_default()
            } else {
                args.encodings
            };
            for path in cmd_render(&cfg, &encodings, log)? {
                let _ = writeln!(log, "wrote {}", path.display());
            }
        }
        Command::Simulate(args) => {
            let dir = cmd_simulate(&args)?;
            let _ = writeln!(log, "wrote {}", dir.join("manifest.json").display());
        }
    }
    Ok(())
}

/// Process entry point used by the binary.
pub fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    match run(std::env::args_os(), &mut stdout, &mut stderr) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.trim_start_matches("error: ").trim_end());
            ExitCode::from(e.exit_code())
        }
    }
}
