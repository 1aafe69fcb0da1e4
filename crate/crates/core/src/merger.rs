//! Merging of silence and amplitude transitions, and class labelling.
//!
//! Silence transitions (S-N, N-S) and amplitude transitions (L-H, H-L) are
//! detected independently and often mark the same event twice. The merger
//! pools both lists, drops amplitude transitions that fall inside silence or
//! sit right next to a silence transition, and the labeller then tiles the
//! utterance with the five classes S, H, L, HL and LH.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transitions::{Transition, TransitionKind};

use TransitionKind::{
    HighToLow as HL, LowToHigh as LH, NonSilenceToSilence as NS, SilenceToNonSilence as SN,
};

/// Separation limits of the redundancy rules, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeParams {
    /// S-N followed by L-H within this distance drops the L-H.
    pub sn_lh_ms: f64,
    /// S-N followed by H-L within this distance drops the H-L.
    pub sn_hl_ms: f64,
    /// L-H or H-L followed by N-S within this distance drops the former.
    pub amp_ns_ms: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            sn_lh_ms: 10.0,
            sn_hl_ms: 20.0,
            amp_ns_ms: 20.0,
        }
    }
}

impl MergeParams {
    pub fn validate(&self) -> Result<()> {
        if [self.sn_lh_ms, self.sn_hl_ms, self.amp_ns_ms]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "merge separations must be >= 0".into(),
            ))
        }
    }
}

/// Result of [`merge_transitions`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Merged {
    /// Surviving transitions, strictly increasing in time.
    pub transitions: Vec<Transition>,
    /// Amplitude transitions dropped by the merger. They still count as
    /// evidence when a speech span must be labelled H or L by majority.
    pub removed: Vec<Transition>,
}

fn tie_rank(kind: TransitionKind) -> u8 {
    // at equal instants: onset first, offset last, so amplitude events land
    // inside the speech span rather than inside silence
    match kind {
        SN => 0,
        LH | HL => 1,
        NS => 2,
    }
}

fn gap_ms(a: &Transition, b: &Transition) -> f64 {
    (b.time - a.time) * 1000.0
}

/// Pools both lists and removes redundant amplitude transitions.
pub fn merge_transitions(si: &[Transition], amp: &[Transition], params: &MergeParams) -> Merged {
    let mut pooled: Vec<Transition> = si.iter().chain(amp).cloned().collect();
    pooled.sort_by_key(|t| (t.sample, tie_rank(t.kind)));

    let mut removed = Vec::new();
    let mut kept: Vec<Transition> = Vec::with_capacity(pooled.len());
    let mut in_silence = true;
    for t in pooled {
        match t.kind {
            SN => in_silence = false,
            NS => in_silence = true,
            _ if in_silence => {
                removed.push(t);
                continue;
            }
            _ => {}
        }
        kept.push(t);
    }

    let eps = 1e-9;
    let mut i = 0;
    while i + 1 < kept.len() {
        let (a, b) = (&kept[i], &kept[i + 1]);
        let gap = gap_ms(a, b);
        match (a.kind, b.kind) {
            (SN, LH) if gap <= params.sn_lh_ms + eps => {
                removed.push(kept.remove(i + 1));
            }
            (SN, HL) if gap <= params.sn_hl_ms + eps => {
                removed.push(kept.remove(i + 1));
            }
            (LH | HL, NS) if gap <= params.amp_ns_ms + eps => {
                removed.push(kept.remove(i));
                i = i.saturating_sub(1);
            }
            _ => i += 1,
        }
    }
    removed.sort_by_key(|t| t.sample);
    Merged {
        transitions: kept,
        removed,
    }
}

/// The five output classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    S,
    H,
    L,
    HL,
    LH,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::H,
        ClassLabel::L,
        ClassLabel::S,
        ClassLabel::HL,
        ClassLabel::LH,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::S => "S",
            ClassLabel::H => "H",
            ClassLabel::L => "L",
            ClassLabel::HL => "HL",
            ClassLabel::LH => "LH",
        }
    }

    /// Column of this label in [`ClassLabel::ALL`].
    pub fn column(self) -> usize {
        match self {
            ClassLabel::H => 0,
            ClassLabel::L => 1,
            ClassLabel::S => 2,
            ClassLabel::HL => 3,
            ClassLabel::LH => 4,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "S" => ClassLabel::S,
            "H" => ClassLabel::H,
            "L" => ClassLabel::L,
            "HL" => ClassLabel::HL,
            "LH" => ClassLabel::LH,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown class label {other:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSegment {
    pub label: ClassLabel,
    pub start_sample: usize,
    pub end_sample: usize,
    pub start: f64,
    pub end: f64,
    /// Indices into [`Segmentation::transitions`] of the bounding transitions
    /// (utterance edges have none).
    pub provenance: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub utterance_id: String,
    pub sample_rate: u32,
    pub num_samples: usize,
    pub transitions: Vec<Transition>,
    pub segments: Vec<ClassSegment>,
}

impl Segmentation {
    pub fn duration(&self) -> f64 {
        self.num_samples as f64 / self.sample_rate as f64
    }

    /// Labels of the segments on either side of sample `at`.
    pub fn labels_around(&self, at: usize) -> (Option<ClassLabel>, Option<ClassLabel>) {
        let before = self
            .segments
            .iter()
            .find(|s| s.start_sample < at && s.end_sample >= at)
            .map(|s| s.label);
        let after = self
            .segments
            .iter()
            .find(|s| s.start_sample <= at && s.end_sample > at)
            .map(|s| s.label);
        (before, after)
    }
}

/// H/L labelling implied by the amplitude transitions alone.
struct AmplitudeTrack {
    events: Vec<(usize, TransitionKind)>,
}

impl AmplitudeTrack {
    fn new(merged: &Merged) -> Self {
        let mut events: Vec<(usize, TransitionKind)> = merged
            .transitions
            .iter()
            .chain(&merged.removed)
            .filter(|t| t.kind.is_amplitude())
            .map(|t| (t.sample, t.kind))
            .collect();
        events.sort();
        Self { events }
    }

    /// Samples labelled H and L inside `[from, to)`, or `None` without evidence.
    fn h_l_durations(&self, from: usize, to: usize) -> Option<(usize, usize)> {
        let first = self.events.first()?;
        let mut pieces: Vec<(usize, usize, ClassLabel)> = Vec::new();
        let lead = if first.1 == LH {
            ClassLabel::L
        } else {
            ClassLabel::H
        };
        pieces.push((0, first.0, lead));
        for w in self.events.windows(2) {
            pieces.push((w[0].0, w[1].0, amplitude_pair_label(w[0].1, w[1].1)));
        }
        let last = self.events[self.events.len() - 1];
        let tail = if last.1 == LH {
            ClassLabel::H
        } else {
            ClassLabel::L
        };
        pieces.push((last.0, usize::MAX, tail));

        let (mut h, mut l) = (0, 0);
        for (a, b, label) in pieces {
            let overlap = b.min(to).saturating_sub(a.max(from));
            match label {
                ClassLabel::H => h += overlap,
                ClassLabel::L => l += overlap,
                _ => {}
            }
        }
        Some((h, l))
    }
}

fn amplitude_pair_label(a: TransitionKind, b: TransitionKind) -> ClassLabel {
    match (a, b) {
        (LH, HL) => ClassLabel::H,
        (HL, LH) => ClassLabel::L,
        (HL, HL) => ClassLabel::LH,
        (LH, LH) => ClassLabel::HL,
        _ => unreachable!("amplitude pair expected"),
    }
}

/// Tiles `[0, num_samples)` with class segments.
///
/// The utterance starts in silence. Merged transitions must therefore
/// follow the grammar `(S-N (L-H | H-L)* N-S)*` with an optional
/// unterminated final speech span; anything else is an
/// [`Error::InconsistentSequence`].
pub fn assign_classes(
    merged: &Merged,
    num_samples: usize,
    sample_rate: u32,
    utterance_id: impl Into<String>,
) -> Result<Segmentation> {
    let ts = &merged.transitions;
    let mut in_silence = true;
    for (i, t) in ts.iter().enumerate() {
        let ok = match t.kind {
            SN => in_silence,
            NS | LH | HL => !in_silence,
        };
        if !ok {
            return Err(Error::InconsistentSequence(format!(
                "{} at sample {} (transition {i}) while {}",
                t.kind,
                t.sample,
                if in_silence {
                    "in silence"
                } else {
                    "in speech"
                }
            )));
        }
        match t.kind {
            SN => in_silence = false,
            NS => in_silence = true,
            _ => {}
        }
        if i > 0 && ts[i - 1].sample >= t.sample {
            return Err(Error::InconsistentSequence(format!(
                "transition times not increasing at transition {i}"
            )));
        }
        if t.sample > num_samples {
            return Err(Error::InconsistentSequence(format!(
                "transition {i} lies past the end of the utterance"
            )));
        }
    }

    let track = AmplitudeTrack::new(merged);
    let majority = |from: usize, to: usize, default: ClassLabel| match track.h_l_durations(from, to)
    {
        Some((h, l)) if h >= l => ClassLabel::H,
        Some(_) => ClassLabel::L,
        None => default,
    };

    let mut spans: Vec<(usize, usize, ClassLabel, Vec<usize>)> = Vec::with_capacity(ts.len() + 1);
    let first_end = ts.first().map_or(num_samples, |t| t.sample);
    spans.push((
        0,
        first_end,
        ClassLabel::S,
        ts.first().map(|_| vec![0]).unwrap_or_default(),
    ));
    for (i, w) in ts.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let label = match (a.kind, b.kind) {
            (NS, SN) => ClassLabel::S,
            (SN, NS) => majority(a.sample, b.sample, ClassLabel::H),
            (SN, LH) => ClassLabel::L,
            (SN, HL) => ClassLabel::H,
            (LH, NS) => ClassLabel::H,
            (HL, NS) => ClassLabel::L,
            (x, y) => amplitude_pair_label(x, y),
        };
        spans.push((a.sample, b.sample, label, vec![i, i + 1]));
    }
    if let Some(last) = ts.last() {
        let label = match last.kind {
            NS => ClassLabel::S,
            SN => majority(last.sample, num_samples, ClassLabel::L),
            LH => ClassLabel::H,
            HL => ClassLabel::L,
        };
        spans.push((last.sample, num_samples, label, vec![ts.len() - 1]));
    }

    let rate = sample_rate as f64;
    let segments = spans
        .into_iter()
        .filter(|(a, b, _, _)| b > a)
        .map(|(a, b, label, provenance)| ClassSegment {
            label,
            start_sample: a,
            end_sample: b,
            start: a as f64 / rate,
            end: b as f64 / rate,
            provenance,
        })
        .collect();

    Ok(Segmentation {
        utterance_id: utterance_id.into(),
        sample_rate,
        num_samples,
        transitions: ts.clone(),
        segments,
    })
}
