//! End-to-end segmentation of one utterance.

use std::path::Path;

use crate::bandpass::{apply_bandpass, BandpassSpec, BpfSignal};
use crate::error::Result;
use crate::features::{extract_with_quantized, FrameFeatures, FramePlan};
use crate::merger::{assign_classes, merge_transitions, MergeParams, Merged, Segmentation};
use crate::signal_io::{
    load_audio, normalize, quantize_9bit, AudioFormat, QuantizedSignal, RawAudio, Utterance,
};
use crate::transitions::{
    detect_amplitude_transitions, detect_si_transitions, DetectorParams, Transition,
};

/// Every tunable of the pipeline.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub plan: FramePlan,
    pub bandpass: BandpassSpec,
    pub detector: DetectorParams,
    pub merge: MergeParams,
}

impl PipelineConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        self.plan.validate()?;
        self.bandpass.validate(sample_rate)?;
        self.detector.validate()?;
        self.merge.validate()
    }
}

/// Intermediate signals and per-hop measures of one utterance.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub utterance: Utterance,
    pub quantized: QuantizedSignal,
    pub bpf: BpfSignal,
    pub features: Vec<FrameFeatures>,
}

/// Normalizes, quantizes, filters and measures every hop.
pub fn analyze(raw: &RawAudio, cfg: &PipelineConfig) -> Result<Analysis> {
    cfg.validate(raw.sample_rate())?;
    let utterance = normalize(raw)?;
    let quantized = quantize_9bit(&utterance);
    let bpf = apply_bandpass(&utterance, &cfg.bandpass)?;
    let features = extract_with_quantized(&quantized, &bpf, &cfg.plan);
    Ok(Analysis {
        utterance,
        quantized,
        bpf,
        features,
    })
}

/// Transitions of an analysed utterance, before and after merging.
#[derive(Debug, Clone)]
pub struct Detections {
    pub silence: Vec<Transition>,
    pub amplitude: Vec<Transition>,
    pub merged: Merged,
}

pub fn detect(a: &Analysis, cfg: &PipelineConfig) -> Detections {
    let silence = detect_si_transitions(&a.features, &a.quantized, &cfg.plan, &cfg.detector);
    let amplitude = detect_amplitude_transitions(&a.features, &a.bpf, &cfg.detector);
    let merged = merge_transitions(&silence, &amplitude, &cfg.merge);
    Detections {
        silence,
        amplitude,
        merged,
    }
}

/// Segments one utterance into S, H, L, HL and LH spans.
pub fn segment(raw: &RawAudio, cfg: &PipelineConfig, utterance_id: &str) -> Result<Segmentation> {
    let a = analyze(raw, cfg)?;
    let d = detect(&a, cfg);
    assign_classes(&d.merged, raw.len(), raw.sample_rate(), utterance_id)
}

/// Loads and segments an audio file, using its file stem as the id.
pub fn segment_file(path: impl AsRef<Path>, cfg: &PipelineConfig) -> Result<Segmentation> {
    let path = path.as_ref();
    let raw = load_audio(path, AudioFormat::Auto)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    segment(&raw, cfg, &id)
}
