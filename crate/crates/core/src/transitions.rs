//! Rule-based transition detection.
//!
//! Two independent detectors run over the per-hop features:
//!
//! * the silence detector scans the SI contour for silence/non-silence
//!   changes and refines each hit on a 1 ms grid;
//! * the amplitude detector scans the PFE and PLE contours for low/high
//!   amplitude changes, snaps each hit to the nearest zero crossing of the
//!   bandpass signal, and drops hits in frames whose ADE is too small.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bandpass::BpfSignal;
use crate::features::{ms_to_samples, silence_index, FrameFeatures, FramePlan};
use crate::signal_io::QuantizedSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransitionKind {
    #[serde(rename = "S-N")]
    SilenceToNonSilence,
    #[serde(rename = "N-S")]
    NonSilenceToSilence,
    #[serde(rename = "L-H")]
    LowToHigh,
    #[serde(rename = "H-L")]
    HighToLow,
}

impl TransitionKind {
    pub fn is_silence_boundary(self) -> bool {
        matches!(
            self,
            TransitionKind::SilenceToNonSilence | TransitionKind::NonSilenceToSilence
        )
    }

    pub fn is_amplitude(self) -> bool {
        !self.is_silence_boundary()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::SilenceToNonSilence => "S-N",
            TransitionKind::NonSilenceToSilence => "N-S",
            TransitionKind::LowToHigh => "L-H",
            TransitionKind::HighToLow => "H-L",
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Strong,
    Weak,
    /// Silence transitions carry no strength.
    Na,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Si,
    Pfe,
    Ple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub kind: TransitionKind,
    pub strength: Strength,
    pub source: Source,
    /// Instant of the transition, in samples from the utterance start.
    pub sample: usize,
    /// `sample` in seconds.
    pub time: f64,
    /// Hop whose features triggered the rule.
    pub hop_index: usize,
}

/// Thresholds of the silence and amplitude rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub si_hi: f64,
    pub si_lo: f64,
    pub si_resume_lo: f64,
    pub si_resume_hi: f64,
    pub si_crossover: f64,
    /// Bound on |PFE| / |PLE| for the weak rules.
    pub weak_window_ms: f64,
    /// Distance from the frame centre that counts as "far" (`>> 0`, `<< 0`).
    pub far_threshold_ms: f64,
    pub ade_threshold: f64,
    pub subseg_ms: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            si_hi: 0.6,
            si_lo: 0.4,
            si_resume_lo: 0.35,
            si_resume_hi: 0.7,
            si_crossover: 0.5,
            weak_window_ms: 5.0,
            far_threshold_ms: 5.0,
            ade_threshold: 0.02,
            subseg_ms: 1.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> crate::Result<()> {
        let unit = [
            self.si_hi,
            self.si_lo,
            self.si_resume_lo,
            self.si_resume_hi,
            self.si_crossover,
        ];
        if unit.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(crate::Error::InvalidParams(
                "SI thresholds must lie in [0, 1]".into(),
            ));
        }
        let non_negative = [
            self.weak_window_ms,
            self.far_threshold_ms,
            self.ade_threshold,
        ];
        if non_negative.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(crate::Error::InvalidParams(
                "window and ADE thresholds must be >= 0".into(),
            ));
        }
        if !(self.subseg_ms.is_finite() && self.subseg_ms > 0.0) {
            return Err(crate::Error::InvalidParams(
                "sub-segment length must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// SI drops through the crossover (silence to speech).
    Falling,
    /// SI rises through the crossover (speech to silence).
    Rising,
}

/// Scans the SI contour with the four silence rules.
///
/// The utterance is taken to start in silence, so the first hop sees an SI
/// of 1.0 on its left. Emitted transitions alternate S-N, N-S, S-N, ...
pub fn detect_si_transitions(
    features: &[FrameFeatures],
    q: &QuantizedSignal,
    plan: &FramePlan,
    params: &DetectorParams,
) -> Vec<Transition> {
    let rate = q.sample_rate();
    let mut out: Vec<Transition> = Vec::new();
    let mut in_silence = true;
    for k in 0..features.len() {
        let here = features[k].si;
        let before = if k == 0 { 1.0 } else { features[k - 1].si };
        let after = features.get(k + 1).map(|f| f.si);
        let (fires, kind, direction) = if in_silence {
            let onset = after.is_some_and(|a| before >= params.si_hi && a <= params.si_lo);
            (
                onset || here <= params.si_resume_lo,
                TransitionKind::SilenceToNonSilence,
                Direction::Falling,
            )
        } else {
            let offset = after.is_some_and(|a| before <= params.si_lo && a >= params.si_hi);
            (
                offset || here >= params.si_resume_hi,
                TransitionKind::NonSilenceToSilence,
                Direction::Rising,
            )
        };
        if !fires {
            continue;
        }
        let floor = out.last().map(|t| t.sample);
        let Some(sample) = refine_si_instant(q, k, direction, plan, params, floor) else {
            continue;
        };
        out.push(Transition {
            kind,
            strength: Strength::Na,
            source: Source::Si,
            sample,
            time: sample as f64 / rate as f64,
            hop_index: k,
        });
        in_silence = !in_silence;
    }
    out
}

/// Locates a silence transition on a grid of non-overlapping 1 ms sub-segments.
///
/// The search spans hop `around_hop`'s SI frame plus one frame on each side.
/// The result is the sub-segment edge, nearest the hop centre, where the
/// sub-segment SI crosses the crossover value in `direction`. Without such a
/// crossing the hop centre is used. Candidates at or before `after` are
/// ignored; `None` means nothing later than `after` was available.
pub fn refine_si_instant(
    q: &QuantizedSignal,
    around_hop: usize,
    direction: Direction,
    plan: &FramePlan,
    params: &DetectorParams,
    after: Option<usize>,
) -> Option<usize> {
    let rate = q.sample_rate();
    let geo = plan.geometry(rate);
    let sub = ms_to_samples(params.subseg_ms, rate).max(1) as isize;
    let center = geo.center(around_hop);
    let si_start = geo.si_start(around_hop);
    let lo = (si_start - geo.si_len as isize).div_euclid(sub) * sub;
    let hi = si_start + 2 * geo.si_len as isize;
    let count = ((hi - lo) + sub - 1) / sub;

    let values: Vec<f64> = (0..count)
        .map(|j| silence_index(q, lo + j * sub, sub as usize, plan.min_silence_run))
        .collect();
    let c = params.si_crossover;
    let is_after = |s: usize| after.is_none_or(|a| s > a);
    let best = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| match direction {
            Direction::Falling => w[0] >= c && w[1] < c,
            Direction::Rising => w[0] < c && w[1] >= c,
        })
        .map(|(j, _)| lo + (j as isize + 1) * sub)
        .filter(|&edge| edge >= 0 && edge as usize <= q.len())
        .map(|edge| edge as usize)
        .filter(|&edge| is_after(edge))
        .min_by_key(|&edge| (edge.abs_diff(center), edge));
    best.or_else(|| is_after(center).then_some(center))
}

struct Candidate {
    kind: TransitionKind,
    strength: Strength,
    source: Source,
    hop: usize,
    /// Position of the contour event in samples (may fall between hops).
    position: f64,
}

/// Scans the PFE/PLE contours with the four amplitude rules.
///
/// Undefined hops are skipped, so neighbours are the nearest defined hops.
/// Hits in hops whose ADE is undefined or below `params.ade_threshold` are
/// discarded.
pub fn detect_amplitude_transitions(
    features: &[FrameFeatures],
    b: &BpfSignal,
    params: &DetectorParams,
) -> Vec<Transition> {
    let defined: Vec<(usize, f64, f64)> = features
        .iter()
        .filter_map(|f| Some((f.hop_index, f.pfe_ms?, f.ple_ms?)))
        .collect();
    let center = |hop: usize| features[hop].center_sample as f64;
    let far = params.far_threshold_ms;
    let near = params.weak_window_ms;

    let mut candidates: Vec<Candidate> = Vec::new();
    let pfe: Vec<f64> = defined.iter().map(|d| d.1).collect();
    let ple: Vec<f64> = defined.iter().map(|d| d.2).collect();

    for m in 0..defined.len() {
        let (hop, pfe_here, ple_here) = defined[m];

        if let Some(pos) = negative_crossing(&pfe, m) {
            if ple_here >= far {
                candidates.push(Candidate {
                    kind: TransitionKind::LowToHigh,
                    strength: Strength::Strong,
                    source: Source::Pfe,
                    hop,
                    position: crossing_position(pos, m, &defined, center),
                });
            }
        }
        if is_local_extremum(&pfe, m, true) && pfe_here.abs() <= near && ple_here >= far {
            candidates.push(Candidate {
                kind: TransitionKind::LowToHigh,
                strength: Strength::Weak,
                source: Source::Pfe,
                hop,
                position: center(hop),
            });
        }
        if let Some(pos) = negative_crossing(&ple, m) {
            if pfe_here <= -far {
                candidates.push(Candidate {
                    kind: TransitionKind::HighToLow,
                    strength: Strength::Strong,
                    source: Source::Ple,
                    hop,
                    position: crossing_position(pos, m, &defined, center),
                });
            }
        }
        if is_local_extremum(&ple, m, false) && ple_here.abs() <= near && pfe_here <= -far {
            candidates.push(Candidate {
                kind: TransitionKind::HighToLow,
                strength: Strength::Weak,
                source: Source::Ple,
                hop,
                position: center(hop),
            });
        }
    }

    candidates.retain(|c| {
        features[c.hop]
            .ade
            .is_some_and(|a| a >= params.ade_threshold)
    });

    // one hit per hop, strong first (stable sort keeps table order otherwise)
    candidates.sort_by_key(|c| (c.hop, c.strength != Strength::Strong));
    candidates.dedup_by_key(|c| c.hop);

    // a weak hit next to a strong one of the same kind is the same event
    let strong: Vec<(usize, TransitionKind)> = candidates
        .iter()
        .filter(|c| c.strength == Strength::Strong)
        .map(|c| (c.hop, c.kind))
        .collect();
    candidates.retain(|c| {
        c.strength == Strength::Strong
            || !strong
                .iter()
                .any(|&(h, k)| k == c.kind && h.abs_diff(c.hop) <= 1)
    });

    let crossings = b.zero_crossings();
    let rate = b.sample_rate();
    let mut out: Vec<Transition> = candidates
        .into_iter()
        .map(|c| {
            let sample = nearest_crossing(&crossings, c.position)
                .unwrap_or_else(|| c.position.round().max(0.0) as usize)
                .min(b.len());
            Transition {
                kind: c.kind,
                strength: c.strength,
                source: c.source,
                sample,
                time: sample as f64 / rate as f64,
                hop_index: c.hop,
            }
        })
        .collect();
    out.sort_by_key(|t| (t.sample, t.strength != Strength::Strong, t.hop_index));
    out.dedup_by_key(|t| t.sample);
    out
}

/// Where a positive-to-negative crossing of `contour` lands at index `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CrossingAt {
    /// Between `m - 1` (positive) and `m` (negative).
    Between,
    /// Exactly on `m`, which is zero.
    On,
}

fn negative_crossing(contour: &[f64], m: usize) -> Option<CrossingAt> {
    let prev = *contour.get(m.checked_sub(1)?)?;
    let here = contour[m];
    if prev <= 0.0 {
        return None;
    }
    if here < 0.0 {
        Some(CrossingAt::Between)
    } else if here == 0.0 && contour.get(m + 1).is_some_and(|&n| n < 0.0) {
        Some(CrossingAt::On)
    } else {
        None
    }
}

fn crossing_position(
    at: CrossingAt,
    m: usize,
    defined: &[(usize, f64, f64)],
    center: impl Fn(usize) -> f64,
) -> f64 {
    match at {
        CrossingAt::On => center(defined[m].0),
        CrossingAt::Between => 0.5 * (center(defined[m - 1].0) + center(defined[m].0)),
    }
}

/// Strict local maximum (or minimum) at `m`; a plateau counts once, at its
/// first index, when both of its outer neighbours are strictly lower
/// (higher). Endpoints never qualify.
fn is_local_extremum(contour: &[f64], m: usize, maximum: bool) -> bool {
    let v = contour[m];
    if m == 0 || contour[m - 1] == v {
        return false;
    }
    let mut end = m;
    while end + 1 < contour.len() && contour[end + 1] == v {
        end += 1;
    }
    let Some(&right) = contour.get(end + 1) else {
        return false;
    };
    let left = contour[m - 1];
    if maximum {
        v > left && v > right
    } else {
        v < left && v < right
    }
}

fn nearest_crossing(crossings: &[usize], position: f64) -> Option<usize> {
    if crossings.is_empty() {
        return None;
    }
    let i = crossings.partition_point(|&z| (z as f64) < position);
    let right = crossings.get(i).copied();
    let left = i.checked_sub(1).map(|j| crossings[j]);
    match (left, right) {
        (Some(l), Some(r)) => {
            if position - l as f64 <= r as f64 - position {
                Some(l)
            } else {
                Some(r)
            }
        }
        (l, r) => l.or(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandpass::{apply_bandpass, BandpassSpec};
    use crate::features::extract_features;
    use crate::signal_io::{quantize_9bit, Utterance};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const RATE: u32 = 16000;

    fn tone(freq: f64, amp: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / RATE as f64).sin())
            .collect()
    }

    /// Sum of sinusoids far above the bandpass, faded in and out over 10 ms.
    fn hiss(amp: f64, len: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let parts: Vec<(f64, f64)> = (0..24)
            .map(|_| (1500.0 + 4500.0 * next(), 2.0 * PI * next()))
            .collect();
        let fade = 160usize;
        (0..len)
            .map(|i| {
                let t = i as f64 / RATE as f64;
                let s: f64 = parts
                    .iter()
                    .map(|&(f, p)| (2.0 * PI * f * t + p).sin())
                    .sum();
                let edge = i.min(len - 1 - i);
                let w = if edge < fade {
                    0.5 - 0.5 * (PI * edge as f64 / fade as f64).cos()
                } else {
                    1.0
                };
                amp * w * s / 24f64.sqrt()
            })
            .collect()
    }

    struct Run {
        features: Vec<FrameFeatures>,
        q: QuantizedSignal,
        b: BpfSignal,
    }

    fn run(x: Vec<f64>) -> Run {
        let u = Utterance::from_samples(x, RATE);
        let b = apply_bandpass(&u, &BandpassSpec::default()).unwrap();
        let features = extract_features(&u, &b, &FramePlan::default()).unwrap();
        Run {
            features,
            q: quantize_9bit(&u),
            b,
        }
    }

    fn features_from_si(si: &[f64]) -> Vec<FrameFeatures> {
        si.iter()
            .enumerate()
            .map(|(k, &s)| FrameFeatures {
                hop_index: k,
                center_sample: 80 * k + 40,
                center_time: (80 * k + 40) as f64 / RATE as f64,
                si: s,
                pfe_ms: None,
                ple_ms: None,
                ade: None,
                ade_reliable: false,
            })
            .collect()
    }

    #[test]
    fn si_drop_gives_one_onset() {
        let si = [1.0, 1.0, 1.0, 1.0, 0.2, 0.1, 0.1, 0.1];
        // silence for four hops, then loud
        let mut x = vec![0.0; 320];
        x.extend(tone(200.0, 1.0, 320));
        let q = quantize_9bit(&Utterance::from_samples(x, RATE));
        let t = detect_si_transitions(
            &features_from_si(&si),
            &q,
            &FramePlan::default(),
            &DetectorParams::default(),
        );
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, TransitionKind::SilenceToNonSilence);
        assert_eq!(t[0].hop_index, 3);
        assert!(t[0].sample.abs_diff(320) <= 16, "{}", t[0].sample);
    }

    #[test]
    fn constant_silence_gives_nothing() {
        let r = run(vec![0.0; 8000]);
        assert!(detect_si_transitions(
            &r.features,
            &r.q,
            &FramePlan::default(),
            &DetectorParams::default()
        )
        .is_empty());
        assert!(
            detect_amplitude_transitions(&r.features, &r.b, &DetectorParams::default()).is_empty()
        );
    }

    #[test]
    fn silence_tone_silence() {
        let mut x = vec![0.0; 4800];
        x.extend(tone(200.0, 1.0, 6400));
        x.extend(vec![0.0; 4800]);
        let r = run(x);
        let t = detect_si_transitions(
            &r.features,
            &r.q,
            &FramePlan::default(),
            &DetectorParams::default(),
        );
        assert_eq!(t.len(), 2, "{t:?}");
        assert_eq!(t[0].kind, TransitionKind::SilenceToNonSilence);
        assert_eq!(t[1].kind, TransitionKind::NonSilenceToSilence);
        assert!((t[0].time - 0.3).abs() <= 0.010);
        assert!((t[1].time - 0.7).abs() <= 0.010);
    }

    #[test]
    fn hard_cut_refines_to_the_millisecond() {
        for cut in [4800usize, 4808, 4813, 5000] {
            let mut x = vec![0.0; cut];
            x.extend(tone(300.0, 1.0, 16000 - cut));
            let r = run(x);
            let t = detect_si_transitions(
                &r.features,
                &r.q,
                &FramePlan::default(),
                &DetectorParams::default(),
            );
            assert_eq!(t.len(), 1);
            assert!(
                t[0].sample.abs_diff(cut) <= 16,
                "cut {cut} -> {}",
                t[0].sample
            );
            if cut % 16 == 0 {
                assert_eq!(t[0].sample, cut);
            }
        }
    }

    #[test]
    fn refine_falls_back_to_hop_centre_on_plateau() {
        // alternating quiet/loud pairs of 8 samples keep every 1 ms SI at 0.5
        let x: Vec<f64> = (0..4000)
            .map(|i| if (i / 8) % 2 == 0 { 0.0 } else { 0.5 })
            .collect();
        let q = quantize_9bit(&Utterance::from_samples(x, RATE));
        let plan = FramePlan::default();
        let params = DetectorParams::default();
        assert_eq!(silence_index(&q, 160, 16, 3), 0.5);
        let hop = 20;
        let c = plan.geometry(RATE).center(hop);
        assert_eq!(
            refine_si_instant(&q, hop, Direction::Falling, &plan, &params, None),
            Some(c)
        );
        assert_eq!(
            refine_si_instant(&q, hop, Direction::Rising, &plan, &params, None),
            Some(c)
        );
        assert_eq!(
            refine_si_instant(&q, hop, Direction::Rising, &plan, &params, Some(c)),
            None
        );
    }

    #[test]
    fn tone_then_hiss_gives_high_to_low() {
        let mut x = tone(200.0, 0.8, 6400);
        x.extend(hiss(0.5, 6400, 3));
        let r = run(x);
        let t = detect_amplitude_transitions(&r.features, &r.b, &DetectorParams::default());
        let hl: Vec<_> = t
            .iter()
            .filter(|t| t.kind == TransitionKind::HighToLow)
            .collect();
        assert_eq!(hl.len(), 1, "{t:?}");
        assert!((hl[0].time - 0.4).abs() <= 0.020, "{:?}", hl[0]);
    }

    #[test]
    fn hiss_then_tone_gives_low_to_high() {
        let mut x = hiss(0.5, 6400, 5);
        x.extend(tone(200.0, 0.8, 6400));
        let r = run(x);
        let t = detect_amplitude_transitions(&r.features, &r.b, &DetectorParams::default());
        let lh: Vec<_> = t
            .iter()
            .filter(|t| t.kind == TransitionKind::LowToHigh)
            .collect();
        assert_eq!(lh.len(), 1, "{t:?}");
        assert!((lh[0].time - 0.4).abs() <= 0.020, "{:?}", lh[0]);
    }

    #[test]
    fn faint_noise_is_gated_by_ade() {
        let r = run(hiss(0.3, 16000, 9));
        let peak = r.b.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 0.005, "bandpass peak {peak}");
        assert!(
            detect_amplitude_transitions(&r.features, &r.b, &DetectorParams::default()).is_empty()
        );
    }

    #[test]
    fn contour_helpers() {
        let c = [-3.0, 2.0, -4.0, 0.0, 1.0, 0.0, -1.0];
        assert_eq!(negative_crossing(&c, 2), Some(CrossingAt::Between));
        assert_eq!(negative_crossing(&c, 5), Some(CrossingAt::On));
        assert_eq!(negative_crossing(&c, 1), None);
        assert_eq!(negative_crossing(&c, 0), None);
        assert!(is_local_extremum(&c, 1, true));
        assert!(is_local_extremum(&c, 4, true));
        assert!(is_local_extremum(&c, 2, false));
        let plateau = [0.0, 2.0, 2.0, 2.0, 1.0];
        assert!(is_local_extremum(&plateau, 1, true));
        assert!(!is_local_extremum(&plateau, 2, true));
        let shelf = [0.0, 2.0, 2.0, 3.0];
        assert!(!is_local_extremum(&shelf, 1, true));
        assert_eq!(nearest_crossing(&[10, 20, 30], 14.0), Some(10));
        assert_eq!(nearest_crossing(&[10, 20, 30], 15.0), Some(10));
        assert_eq!(nearest_crossing(&[10, 20, 30], 16.0), Some(20));
        assert_eq!(nearest_crossing(&[10, 20, 30], 99.0), Some(30));
        assert_eq!(nearest_crossing(&[], 5.0), None);
    }

    fn random_signal() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            (0usize..3, 50.0f64..3000.0, 0.0f64..1.0, 800usize..3200),
            1..5,
        )
        .prop_map(|parts| {
            let mut x = Vec::new();
            for (kind, f, a, len) in parts {
                match kind {
                    0 => x.extend(std::iter::repeat_n(0.0, len)),
                    1 => x.extend(tone(f, a, len)),
                    _ => x.extend(hiss(a, len, f as u64)),
                }
            }
            x
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn detector_invariants(x in random_signal()) {
            let r = run(x);
            let params = DetectorParams::default();
            let si = detect_si_transitions(&r.features, &r.q, &FramePlan::default(), &params);
            for (i, t) in si.iter().enumerate() {
                let expect = if i % 2 == 0 {
                    TransitionKind::SilenceToNonSilence
                } else {
                    TransitionKind::NonSilenceToSilence
                };
                prop_assert_eq!(t.kind, expect);
                prop_assert_eq!(t.strength, Strength::Na);
                prop_assert!(t.sample <= r.q.len());
            }
            prop_assert!(si.windows(2).all(|w| w[0].sample < w[1].sample));

            let amp = detect_amplitude_transitions(&r.features, &r.b, &params);
            prop_assert!(amp.windows(2).all(|w| w[0].sample < w[1].sample));
            for t in &amp {
                prop_assert!(t.kind.is_amplitude());
                prop_assert!(t.strength != Strength::Na);
                prop_assert!(r.features[t.hop_index].ade_reliable);
            }
            prop_assert_eq!(&amp, &detect_amplitude_transitions(&r.features, &r.b, &params));

            let gated = DetectorParams { ade_threshold: f64::INFINITY, ..params };
            prop_assert!(detect_amplitude_transitions(&r.features, &r.b, &gated).is_empty());
        }
    }
}
