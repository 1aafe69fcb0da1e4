//! Flat `key = value` configuration file.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use broadclass::pipeline::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Lab,
    Both,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Lab => "lab",
            OutputFormat::Both => "both",
        }
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn lab(self) -> bool {
        matches!(self, OutputFormat::Lab | OutputFormat::Both)
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "lab" => Ok(OutputFormat::Lab),
            "both" => Ok(OutputFormat::Both),
            _ => Err(format!("expected json, lab or both, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub pipeline: PipelineConfig,
    /// `None` selects the built-in TIMIT map.
    pub phone_map: Option<PathBuf>,
    pub output_format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

const KEYS: [&str; 20] = [
    "si_frame_ms",
    "feature_frame_ms",
    "hop_ms",
    "min_silence_run",
    "ade_threshold",
    "f1_hz",
    "f2_hz",
    "si_hi",
    "si_lo",
    "si_resume_lo",
    "si_resume_hi",
    "si_crossover",
    "weak_window_ms",
    "far_threshold_ms",
    "subseg_ms",
    "sn_lh_ms",
    "sn_hl_ms",
    "amp_ns_ms",
    "phone_map",
    "output_format",
];

fn num<T: FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid number {value:?}"))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ConfigError { line, message };
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if seen.contains(&key) {
                return Err(err(format!("key {key:?} set twice")));
            }
            seen.push(key);
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let p = &mut self.pipeline;
        match key {
            "si_frame_ms" => p.plan.si_frame_ms = num(value)?,
            "feature_frame_ms" => p.plan.feature_frame_ms = num(value)?,
            "hop_ms" => p.plan.hop_ms = num(value)?,
            "min_silence_run" => p.plan.min_silence_run = num(value)?,
            "ade_threshold" => {
                let v = num(value)?;
                p.plan.ade_threshold = v;
                p.detector.ade_threshold = v;
            }
            "f1_hz" => p.bandpass.f1 = num(value)?,
            "f2_hz" => p.bandpass.f2 = num(value)?,
            "si_hi" => p.detector.si_hi = num(value)?,
            "si_lo" => p.detector.si_lo = num(value)?,
            "si_resume_lo" => p.detector.si_resume_lo = num(value)?,
            "si_resume_hi" => p.detector.si_resume_hi = num(value)?,
            "si_crossover" => p.detector.si_crossover = num(value)?,
            "weak_window_ms" => p.detector.weak_window_ms = num(value)?,
            "far_threshold_ms" => p.detector.far_threshold_ms = num(value)?,
            "subseg_ms" => p.detector.subseg_ms = num(value)?,
            "sn_lh_ms" => p.merge.sn_lh_ms = num(value)?,
            "sn_hl_ms" => p.merge.sn_hl_ms = num(value)?,
            "amp_ns_ms" => p.merge.amp_ns_ms = num(value)?,
            "phone_map" => self.phone_map = (!value.is_empty()).then(|| PathBuf::from(value)),
            "output_format" => self.output_format = value.parse()?,
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }

    /// Writes every key; `parse(&c.serialize()) == c` for any config whose
    /// two ADE thresholds agree.
    pub fn serialize(&self) -> String {
        let p = &self.pipeline;
        let mut out = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("si_frame_ms", &p.plan.si_frame_ms);
        put("feature_frame_ms", &p.plan.feature_frame_ms);
        put("hop_ms", &p.plan.hop_ms);
        put("min_silence_run", &p.plan.min_silence_run);
        put("ade_threshold", &p.plan.ade_threshold);
        put("f1_hz", &p.bandpass.f1);
        put("f2_hz", &p.bandpass.f2);
        put("si_hi", &p.detector.si_hi);
        put("si_lo", &p.detector.si_lo);
        put("si_resume_lo", &p.detector.si_resume_lo);
        put("si_resume_hi", &p.detector.si_resume_hi);
        put("si_crossover", &p.detector.si_crossover);
        put("weak_window_ms", &p.detector.weak_window_ms);
        put("far_threshold_ms", &p.detector.far_threshold_ms);
        put("subseg_ms", &p.detector.subseg_ms);
        put("sn_lh_ms", &p.merge.sn_lh_ms);
        put("sn_hl_ms", &p.merge.sn_hl_ms);
        put("amp_ns_ms", &p.merge.amp_ns_ms);
        let map = self
            .phone_map
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        put("phone_map", &map);
        put("output_format", &self.output_format.as_str());
        out
    }
}
