//! Synthetic practice takes generated from a reference piece.
//!
//! Randomness comes from SplitMix64 so that a seed means the same thing in
//! any implementation. For seed 0 the first three outputs are
//! `0xE220A8397B1DCDAF`, `0x6E789E6AA1B965F4`, `0x06C45D188009454F`.
//!
//! Draw order per take: for every reference note, in list order, one
//! uniform for the miss decision and one for its timing jitter (both are
//! always drawn). Surplus notes follow: an exponential gap, then a uniform
//! pitch pick, repeated until the piece ends.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::Recording;
use crate::midi_io::{write_smf, Note, NoteList};
use crate::score::GroundTruth;

/// Length given to inserted surplus notes, in seconds.
pub const SURPLUS_DURATION: f64 = 0.1;
pub const SURPLUS_VELOCITY: u8 = 100;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid error model: {0}")]
    InvalidModel(String),
    #[error("a session needs at least one take")]
    NoTakes,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// SplitMix64 (Steele, Lea and Flood), the standard 64-bit seeding
/// generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on the open interval (0, 1): top 53 bits, offset by half a
    /// unit so neither end is reachable.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Inverse standard normal CDF, Acklam's rational approximation (relative
/// error below 1.15e-9 over (0, 1)).
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorModel {
    /// Constant timing shift per pitch, in seconds (positive = late).
    #[serde(default)]
    pub per_pitch_bias: BTreeMap<u8, f64>,
    #[serde(default)]
    pub jitter_sd: f64,
    #[serde(default)]
    pub miss_probability: f64,
    /// Expected surplus notes per second.
    #[serde(default)]
    pub insertion_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ErrorModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.jitter_sd.is_finite() && self.jitter_sd >= 0.0) {
            return Err(SimError::InvalidModel(format!(
                "jitter must be >= 0, got {}",
                self.jitter_sd
            )));
        }
        if !(0.0..1.0).contains(&self.miss_probability) {
            return Err(SimError::InvalidModel(format!(
                "miss probability must be in [0, 1), got {}",
                self.miss_probability
            )));
        }
        if !(self.insertion_rate.is_finite() && self.insertion_rate >= 0.0) {
            return Err(SimError::InvalidModel(format!(
                "insertion rate must be >= 0, got {}",
                self.insertion_rate
            )));
        }
        if let Some((p, b)) = self.per_pitch_bias.iter().find(|(_, b)| !b.is_finite()) {
            return Err(SimError::InvalidModel(format!("bias for pitch {p} is not finite: {b}")));
        }
        Ok(())
    }

    fn bias(&self, pitch: u8) -> f64 {
        self.per_pitch_bias.get(&pitch).copied().unwrap_or(0.0)
    }
}

/// One take drawn from `model`, seeded by `model.seed`.
pub fn simulate_recording(gt: &GroundTruth, model: &ErrorModel) -> Result<Recording, SimError> {
    model.validate()?;
    Ok(simulate_with_seed(gt, model, model.seed, format!("sim-{}", model.seed)))
}

fn simulate_with_seed(gt: &GroundTruth, model: &ErrorModel, seed: u64, id: String) -> Recording {
    let mut rng = SplitMix64::new(seed);
    let mut notes = Vec::with_capacity(gt.notes().len());
    for note in gt.notes() {
        let u_miss = rng.next_open01();
        let z = inverse_normal_cdf(rng.next_open01());
        if u_miss < model.miss_probability {
            continue;
        }
        let onset = (note.onset + model.bias(note.pitch) + model.jitter_sd * z).max(0.0);
        notes.push(Note { onset, ..*note });
    }

    if model.insertion_rate > 0.0 {
        let pitches = gt.pitches();
        let end = gt.total_duration();
        let mut t = 0.0;
        loop {
            t += -rng.next_open01().ln() / model.insertion_rate;
            if t >= end {
                break;
            }
            let k = ((rng.next_open01() * pitches.len() as f64) as usize).min(pitches.len() - 1);
            let pitch = pitches[k];
            let channel = gt.notes().iter().find(|n| n.pitch == pitch).map_or(9, |n| n.channel);
            notes.push(Note {
                pitch,
                onset: t,
                duration: SURPLUS_DURATION,
                velocity: SURPLUS_VELOCITY,
                channel,
            });
        }
    }

    Recording::new(id, NoteList::new(notes))
}

pub fn take_id(index: usize) -> String {
    format!("take-{:03}", index + 1)
}

/// `n` takes; take `i` (0-based) uses seed `model.seed + i` and id
/// `take-{i+1:03}`.
pub fn simulate_session(gt: &GroundTruth, model: &ErrorModel, n: usize) -> Result<Vec<Recording>, SimError> {
    model.validate()?;
    if n == 0 {
        return Err(SimError::NoTakes);
    }
    Ok((0..n)
        .map(|i| simulate_with_seed(gt, model, model.seed.wrapping_add(i as u64), take_id(i)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub prng: String,
    pub normal: String,
    pub seed_rule: String,
}

impl Default for GeneratorInfo {
    fn default() -> Self {
        GeneratorInfo {
            prng: "splitmix64".into(),
            normal: "acklam-inverse-cdf".into(),
            seed_rule: "seed + take index (0-based)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeEntry {
    pub id: String,
    pub file: String,
    pub seed: u64,
    pub note_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub ground_truth: String,
    pub division: u16,
    pub generator: GeneratorInfo,
    pub model: ErrorModel,
    pub takes: Vec<TakeEntry>,
}

/// Writes `<id>.mid` for every take plus `manifest.json` into `dir`.
pub fn write_session(
    dir: &Path,
    ground_truth_name: &str,
    gt: &GroundTruth,
    model: &ErrorModel,
    takes: &[Recording],
) -> Result<SessionManifest, SimError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(takes.len());
    for (i, take) in takes.iter().enumerate() {
        let file = format!("{}.mid", take.id);
        let bytes = write_smf(&take.notes, gt.tempo_map(), gt.timesig_map(), gt.division());
        fs::write(dir.join(&file), bytes)?;
        entries.push(TakeEntry {
            id: take.id.clone(),
            file,
            seed: model.seed.wrapping_add(i as u64),
            note_count: take.notes.len(),
        });
    }
    let manifest = SessionManifest {
        ground_truth: ground_truth_name.to_string(),
        division: gt.division(),
        generator: GeneratorInfo::default(),
        model: model.clone(),
        takes: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}
