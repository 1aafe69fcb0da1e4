//! Per-hop temporal measures.
//!
//! Every 5 ms hop gets four numbers:
//!
//! * **SI** (silence index): the fraction of a 10 ms window of the 9-bit
//!   staircase signal lying in runs of at least three near-zero samples.
//! * **PFE / PLE**: signed distance (ms) from the centre of a 40 ms window of
//!   the bandpass signal to the first and last extremum surviving a two-pass
//!   adaptive threshold.
//! * **ADE**: mean peak-to-valley difference of the surviving extrema; small
//!   values mark the window's PFE/PLE as unreliable.

use crate::bandpass::BpfSignal;
use crate::error::{Error, Result};
use crate::signal_io::{quantize_9bit, QuantizedSignal, Utterance, QUANT_STEP};

/// Frame sizes and thresholds for feature extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePlan {
    pub si_frame_ms: f64,
    pub feature_frame_ms: f64,
    pub hop_ms: f64,
    /// Shortest run of near-zero samples that counts towards SI.
    pub min_silence_run: usize,
    pub ade_threshold: f64,
}

impl Default for FramePlan {
    fn default() -> Self {
        Self {
            si_frame_ms: 10.0,
            feature_frame_ms: 40.0,
            hop_ms: 5.0,
            min_silence_run: 3,
            ade_threshold: 0.02,
        }
    }
}

impl FramePlan {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.si_frame_ms, self.feature_frame_ms, self.hop_ms]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.min_silence_run == 0 {
            return Err(Error::InvalidParams(
                "frame sizes and minimum silence run must be positive".into(),
            ));
        }
        let divides = |frame: f64| {
            let r = frame / self.hop_ms;
            (r - r.round()).abs() < 1e-9
        };
        if !divides(self.si_frame_ms) || !divides(self.feature_frame_ms) {
            return Err(Error::InvalidParams(
                "hop must divide both frame lengths".into(),
            ));
        }
        if self.ade_threshold.is_nan() || self.ade_threshold < 0.0 {
            return Err(Error::InvalidParams("ADE threshold must be >= 0".into()));
        }
        Ok(())
    }

    /// Frame lengths converted to samples at `sample_rate`.
    pub fn geometry(&self, sample_rate: u32) -> FrameGeometry {
        FrameGeometry {
            hop: ms_to_samples(self.hop_ms, sample_rate).max(1),
            si_len: ms_to_samples(self.si_frame_ms, sample_rate).max(1),
            feature_len: ms_to_samples(self.feature_frame_ms, sample_rate).max(1),
        }
    }
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// Frame lengths in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGeometry {
    pub hop: usize,
    pub si_len: usize,
    pub feature_len: usize,
}

impl FrameGeometry {
    pub fn hop_count(&self, num_samples: usize) -> usize {
        num_samples.div_ceil(self.hop)
    }

    /// Mid-sample of hop `k`'s 5 ms segment.
    pub fn center(&self, k: usize) -> usize {
        k * self.hop + self.hop / 2
    }

    pub fn si_start(&self, k: usize) -> isize {
        self.center(k) as isize - (self.si_len / 2) as isize
    }

    pub fn feature_start(&self, k: usize) -> isize {
        self.center(k) as isize - (self.feature_len / 2) as isize
    }
}

/// Fraction of samples in `[frame_start, frame_start + frame_len)` that lie in
/// runs of at least `min_run` consecutive near-zero samples.
///
/// Near-zero means within one grid step of the 9-bit quantizer. Samples
/// outside the signal are zeros. Runs are cut at the frame edges.
pub fn silence_index(
    q: &QuantizedSignal,
    frame_start: isize,
    frame_len: usize,
    min_run: usize,
) -> f64 {
    if frame_len == 0 {
        return 0.0;
    }
    let mut counted = 0usize;
    let mut run = 0usize;
    for i in 0..frame_len {
        if q.get_or_zero(frame_start + i as isize).abs() <= QUANT_STEP {
            run += 1;
        } else {
            if run >= min_run {
                counted += run;
            }
            run = 0;
        }
    }
    if run >= min_run {
        counted += run;
    }
    counted as f64 / frame_len as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    /// Absolute sample index in the signal.
    pub index: usize,
    pub value: f64,
}

/// Extrema of one frame that survive both threshold passes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaSet {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
    /// First sample after the frame's first zero crossing.
    pub first_zc: usize,
    /// Last sample before the frame's last zero crossing.
    pub last_zc: usize,
}

impl ExtremaSet {
    pub fn is_empty(&self) -> bool {
        self.maxima.is_empty() && self.minima.is_empty()
    }
}

struct Lobe {
    positive: bool,
    start: usize,
    end: usize,
    peak: usize,
    peak_value: f64,
}

/// Keeps one peak per complete lobe and prunes with two mean-based passes.
///
/// `peaks` are lobe peak magnitudes in sample order (negated for minima),
/// `sample_mean` is the mean of the same-polarity samples of the frame.
fn two_pass(peaks: Vec<(usize, f64)>, sample_mean: f64) -> Vec<(usize, f64)> {
    let first: Vec<(usize, f64)> = peaks
        .into_iter()
        .filter(|&(_, m)| m > 0.5 * sample_mean)
        .collect();
    if first.is_empty() {
        return first;
    }
    let second_mean = first.iter().map(|&(_, m)| m).sum::<f64>() / first.len() as f64;
    first
        .into_iter()
        .filter(|&(_, m)| m >= 0.5 * second_mean)
        .collect()
}

/// Selects the frame's extrema with the two-pass adaptive threshold.
///
/// Only the part of the frame between its first and last zero crossings is
/// analyzed. Each lobe between successive crossings contributes its peak.
/// Exact zeros are transparent: they neither start nor end a lobe.
pub fn select_extrema(b: &BpfSignal, frame_start: isize, frame_len: usize) -> Result<ExtremaSet> {
    let mut lobes: Vec<Lobe> = Vec::new();
    for i in 0..frame_len {
        let idx = frame_start + i as isize;
        let v = b.get_or_zero(idx);
        if v == 0.0 {
            continue;
        }
        let idx = idx as usize;
        let positive = v > 0.0;
        match lobes.last_mut() {
            Some(lobe) if lobe.positive == positive => {
                lobe.end = idx;
                let better = if positive {
                    v > lobe.peak_value
                } else {
                    v < lobe.peak_value
                };
                if better {
                    lobe.peak = idx;
                    lobe.peak_value = v;
                }
            }
            _ => lobes.push(Lobe {
                positive,
                start: idx,
                end: idx,
                peak: idx,
                peak_value: v,
            }),
        }
    }
    if lobes.len() < 3 {
        return Err(Error::InsufficientZeroCrossings);
    }
    let complete = &lobes[1..lobes.len() - 1];
    let first_zc = complete[0].start;
    let last_zc = complete[complete.len() - 1].end;

    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0.0, 0usize, 0.0, 0usize);
    for idx in first_zc..=last_zc {
        let v = b.samples()[idx];
        if v > 0.0 {
            pos_sum += v;
            pos_n += 1;
        } else if v < 0.0 {
            neg_sum += -v;
            neg_n += 1;
        }
    }

    let peaks = |positive: bool| -> Vec<(usize, f64)> {
        complete
            .iter()
            .filter(|l| l.positive == positive)
            .map(|l| (l.peak, l.peak_value.abs()))
            .collect()
    };
    let maxima = if pos_n > 0 {
        two_pass(peaks(true), pos_sum / pos_n as f64)
    } else {
        Vec::new()
    };
    let minima = if neg_n > 0 {
        two_pass(peaks(false), neg_sum / neg_n as f64)
    } else {
        Vec::new()
    };

    Ok(ExtremaSet {
        maxima: maxima
            .into_iter()
            .map(|(index, m)| Extremum { index, value: m })
            .collect(),
        minima: minima
            .into_iter()
            .map(|(index, m)| Extremum { index, value: -m })
            .collect(),
        first_zc,
        last_zc,
    })
}

/// Positions (ms) of the earliest and latest surviving extremum relative to
/// `frame_center`, ignoring polarity. Negative means left of the centre.
pub fn pfe_ple(e: &ExtremaSet, frame_center: usize, sample_rate: u32) -> Result<(f64, f64)> {
    let indices = e.maxima.iter().chain(&e.minima).map(|x| x.index);
    let first = indices.clone().min().ok_or(Error::NoExtrema)?;
    let last = indices.max().ok_or(Error::NoExtrema)?;
    let to_ms = |idx: usize| (idx as f64 - frame_center as f64) * 1000.0 / sample_rate as f64;
    Ok((to_ms(first), to_ms(last)))
}

/// Mean absolute difference between the i-th surviving maximum and the i-th
/// surviving minimum, over the shorter of the two lists.
pub fn ade(e: &ExtremaSet) -> Result<f64> {
    let pairs = e.maxima.len().min(e.minima.len());
    if pairs == 0 {
        return Err(Error::NoExtrema);
    }
    let total: f64 = e
        .maxima
        .iter()
        .zip(&e.minima)
        .map(|(p, v)| (p.value - v.value).abs())
        .sum();
    Ok(total / pairs as f64)
}

/// Measures assigned to one 5 ms hop.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub hop_index: usize,
    /// Mid-sample of the hop's 5 ms segment.
    pub center_sample: usize,
    /// `center_sample` in seconds.
    pub center_time: f64,
    pub si: f64,
    pub pfe_ms: Option<f64>,
    pub ple_ms: Option<f64>,
    pub ade: Option<f64>,
    pub ade_reliable: bool,
}

/// Computes one [`FrameFeatures`] per hop, in hop order.
///
/// Windows that extend past either end of the utterance are zero-extended.
pub fn extract_features(
    u: &Utterance,
    b: &BpfSignal,
    plan: &FramePlan,
) -> Result<Vec<FrameFeatures>> {
    plan.validate()?;
    if u.len() != b.len() || u.sample_rate() != b.sample_rate() {
        return Err(Error::InvalidParams(
            "utterance and bandpass signal are not aligned".into(),
        ));
    }
    let q = quantize_9bit(u);
    Ok(extract_with_quantized(&q, b, plan))
}

pub(crate) fn extract_with_quantized(
    q: &QuantizedSignal,
    b: &BpfSignal,
    plan: &FramePlan,
) -> Vec<FrameFeatures> {
    let rate = b.sample_rate();
    let geo = plan.geometry(rate);
    (0..geo.hop_count(b.len()))
        .map(|k| {
            let center = geo.center(k);
            let si = silence_index(q, geo.si_start(k), geo.si_len, plan.min_silence_run);
            let extrema = select_extrema(b, geo.feature_start(k), geo.feature_len).ok();
            let positions = extrema.as_ref().and_then(|e| pfe_ple(e, center, rate).ok());
            let ade = extrema.as_ref().and_then(|e| ade(e).ok());
            FrameFeatures {
                hop_index: k,
                center_sample: center,
                center_time: center as f64 / rate as f64,
                si,
                pfe_ms: positions.map(|p| p.0),
                ple_ms: positions.map(|p| p.1),
                ade,
                ade_reliable: ade.is_some_and(|a| a >= plan.ade_threshold),
            }
        })
        .collect()
}
