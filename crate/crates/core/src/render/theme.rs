//! Colors, sizes and fonts shared by every chart.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::stats::PitchLabels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let t = t.clamp(0.0, 1.0);
        let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
        Rgb(mix(self.0, other.0), mix(self.1, other.1), mix(self.2, other.2))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(format!("expected #RRGGBB, got {s:?}"));
        }
        let part = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| format!("bad hex color {s:?}"));
        Ok(Rgb(part(0)?, part(2)?, part(4)?))
    }
}

impl TryFrom<String> for Rgb {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rgb> for String {
    fn from(c: Rgb) -> String {
        c.to_string()
    }
}

/// Piecewise-linear color ramp over [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorScale {
    stops: Vec<(f64, Rgb)>,
}

impl ColorScale {
    /// Stops must start at 0, end at 1 and increase.
    pub fn new(stops: Vec<(f64, Rgb)>) -> Result<Self, RenderError> {
        let ok = stops.len() >= 2
            && stops[0].0 == 0.0
            && stops[stops.len() - 1].0 == 1.0
            && stops.windows(2).all(|w| w[0].0 < w[1].0);
        if !ok {
            return Err(RenderError::InvalidTheme(
                "color scale stops must rise from 0 to 1".into(),
            ));
        }
        Ok(ColorScale { stops })
    }

    pub fn stops(&self) -> &[(f64, Rgb)] {
        &self.stops
    }

    pub fn sample(&self, t: f64) -> Rgb {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let i = self.stops.partition_point(|s| s.0 <= t).clamp(1, self.stops.len() - 1);
        let (t0, c0) = self.stops[i - 1];
        let (t1, c1) = self.stops[i];
        c0.lerp(c1, (t - t0) / (t1 - t0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Colors {
    pub missing: Rgb,
    pub surplus: Rgb,
    /// Position 0 is a perfect hit, 1 is at or beyond the tolerance.
    pub correct_scale: ColorScale,
    /// Mean absolute error over the tolerance.
    pub heat_scale: ColorScale,
    pub density_fill: Rgb,
    pub grid_line: Rgb,
    pub gt_note: Rgb,
    pub text: Rgb,
    pub background: Rgb,
}

impl Default for Colors {
    fn default() -> Self {
        Colors {
            missing: Rgb(0xD6, 0x27, 0x28),
            surplus: Rgb(0xE6, 0x9F, 0x00),
            correct_scale: ColorScale {
                stops: vec![(0.0, Rgb(0x00, 0x44, 0x1B)), (1.0, Rgb(0xA1, 0xD9, 0x9B))],
            },
            heat_scale: ColorScale {
                stops: vec![
                    (0.0, Rgb(0xFF, 0xF7, 0xBC)),
                    (0.5, Rgb(0xFE, 0x99, 0x29)),
                    (1.0, Rgb(0x99, 0x34, 0x04)),
                ],
            },
            density_fill: Rgb(0x31, 0x82, 0xBD),
            grid_line: Rgb(0xBD, 0xBD, 0xBD),
            gt_note: Rgb(0x52, 0x52, 0x52),
            text: Rgb(0x25, 0x25, 0x25),
            background: Rgb(0xFF, 0xFF, 0xFF),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Margins {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            left: 48.0,
            right: 16.0,
            top: 24.0,
            bottom: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Theme {
    /// Horizontal scale of timeline charts.
    pub px_per_second: f64,
    /// Horizontal scale of the offset-distribution chart.
    pub offset_px_per_second: f64,
    pub lane_height: f64,
    /// Row height of area charts.
    pub chart_height: f64,
    pub glyph_width: f64,
    pub margins: Margins,
    pub colors: Colors,
    pub font_family: String,
    pub font_size: f64,
    pub max_overlay_recordings: usize,
    pub labels: PitchLabels,
}

impl Default for Theme {
    fn default() -> Self {
        Theme {
            px_per_second: 100.0,
            offset_px_per_second: 1000.0,
            lane_height: 24.0,
            chart_height: 48.0,
            glyph_width: 8.0,
            margins: Margins::default(),
            colors: Colors::default(),
            font_family: "sans-serif".into(),
            font_size: 11.0,
            max_overlay_recordings: 10,
            labels: PitchLabels::default(),
        }
    }
}

impl Theme {
    pub fn validate(&self) -> Result<(), RenderError> {
        let positive = [
            ("px_per_second", self.px_per_second),
            ("offset_px_per_second", self.offset_px_per_second),
            ("lane_height", self.lane_height),
            ("chart_height", self.chart_height),
            ("glyph_width", self.glyph_width),
            ("font_size", self.font_size),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(RenderError::InvalidTheme(format!("{name} must be positive, got {v}")));
            }
        }
        let m = self.margins;
        if [m.left, m.right, m.top, m.bottom]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(RenderError::InvalidTheme("margins must be non-negative".into()));
        }
        for scale in [&self.colors.correct_scale, &self.colors.heat_scale] {
            ColorScale::new(scale.stops.clone())?;
        }
        Ok(())
    }

    /// Timeline x coordinate of `seconds`.
    pub fn x(&self, seconds: f64) -> f64 {
        self.margins.left + seconds * self.px_per_second
    }

    /// Correct-note color for a signed offset.
    pub fn correct_color(&self, offset: f64, tolerance: f64) -> Rgb {
        self.colors.correct_scale.sample(offset.abs() / tolerance)
    }
}
