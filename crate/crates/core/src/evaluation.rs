//! Scoring of detected transitions and class segments against phone labels.
//!
//! Per-utterance scores are collected into [`EvalCounts`], whose fields are
//! plain integer tallies so that merging is exact and order-independent.
//! [`EvalCounts::report`] turns the tallies into percentages.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merger::{ClassLabel, Segmentation};
use crate::signal_io::ReferenceLabels;
use crate::transitions::{Transition, TransitionKind};

const DEFAULT_PHONE_MAP: &str = include_str!("../data/timit_phones.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhoneCategory {
    Vowel,
    Semivowel,
    Nasal,
    UnvoicedFricative,
    VoicedFricative,
    VoicedStop,
    UnvoicedStop,
    Affricate,
    OtherSilence,
    VoicedClosure,
    UnvoicedClosure,
    /// The glottal stop, which belongs to no broad class.
    Glottal,
}

impl PhoneCategory {
    pub const ALL: [PhoneCategory; 12] = [
        PhoneCategory::Vowel,
        PhoneCategory::Semivowel,
        PhoneCategory::Nasal,
        PhoneCategory::UnvoicedFricative,
        PhoneCategory::VoicedFricative,
        PhoneCategory::VoicedStop,
        PhoneCategory::UnvoicedStop,
        PhoneCategory::Affricate,
        PhoneCategory::OtherSilence,
        PhoneCategory::VoicedClosure,
        PhoneCategory::UnvoicedClosure,
        PhoneCategory::Glottal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhoneCategory::Vowel => "vowel",
            PhoneCategory::Semivowel => "semivowel",
            PhoneCategory::Nasal => "nasal",
            PhoneCategory::UnvoicedFricative => "unvoiced_fricative",
            PhoneCategory::VoicedFricative => "voiced_fricative",
            PhoneCategory::VoicedStop => "voiced_stop",
            PhoneCategory::UnvoicedStop => "unvoiced_stop",
            PhoneCategory::Affricate => "affricate",
            PhoneCategory::OtherSilence => "other_silence",
            PhoneCategory::VoicedClosure => "voiced_closure",
            PhoneCategory::UnvoicedClosure => "unvoiced_closure",
            PhoneCategory::Glottal => "glottal",
        }
    }

    /// Broad classes this category is counted under.
    pub fn broad_classes(self) -> &'static [BroadClass] {
        use BroadClass::*;
        match self {
            PhoneCategory::Vowel | PhoneCategory::Semivowel | PhoneCategory::Nasal => &[Sonorant],
            PhoneCategory::VoicedFricative | PhoneCategory::VoicedStop => {
                &[NonSonorant, VoicedNonSonorant]
            }
            PhoneCategory::UnvoicedFricative
            | PhoneCategory::UnvoicedStop
            | PhoneCategory::Affricate => &[NonSonorant, UnvoicedNonSonorant],
            PhoneCategory::OtherSilence
            | PhoneCategory::VoicedClosure
            | PhoneCategory::UnvoicedClosure => &[Silence],
            PhoneCategory::Glottal => &[],
        }
    }

    pub fn is_sonorant(self) -> bool {
        self.broad_classes().contains(&BroadClass::Sonorant)
    }

    pub fn is_silence(self) -> bool {
        self.broad_classes().contains(&BroadClass::Silence)
    }

    pub fn is_closure(self) -> bool {
        matches!(
            self,
            PhoneCategory::VoicedClosure | PhoneCategory::UnvoicedClosure
        )
    }
}

impl fmt::Display for PhoneCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhoneCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PhoneCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown phone category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BroadClass {
    Sonorant,
    NonSonorant,
    Silence,
    VoicedNonSonorant,
    UnvoicedNonSonorant,
}

impl BroadClass {
    pub const ALL: [BroadClass; 5] = [
        BroadClass::Sonorant,
        BroadClass::NonSonorant,
        BroadClass::Silence,
        BroadClass::VoicedNonSonorant,
        BroadClass::UnvoicedNonSonorant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BroadClass::Sonorant => "sonorant",
            BroadClass::NonSonorant => "non_sonorant",
            BroadClass::Silence => "silence",
            BroadClass::VoicedNonSonorant => "voiced_non_sonorant",
            BroadClass::UnvoicedNonSonorant => "unvoiced_non_sonorant",
        }
    }
}

/// Cuts a `#` comment that starts a word; `h#` is a label, not a comment.
fn strip_comment(line: &str) -> &str {
    let mut word_start = true;
    for (i, ch) in line.char_indices() {
        if ch == '#' && word_start {
            return &line[..i];
        }
        word_start = ch.is_whitespace();
    }
    line
}

/// Phone label to [`PhoneCategory`] lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneClassMap {
    map: HashMap<String, PhoneCategory>,
}

impl Default for PhoneClassMap {
    fn default() -> Self {
        Self::timit()
    }
}

impl PhoneClassMap {
    /// The built-in map covering the 61 TIMIT phone labels.
    pub fn timit() -> Self {
        Self::parse(DEFAULT_PHONE_MAP).expect("built-in phone map is valid")
    }

    /// Parses `label category` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            match fields.as_slice() {
                [] => continue,
                [label, category] => {
                    let category = category
                        .parse::<PhoneCategory>()
                        .map_err(|message| Error::PhoneMap { line, message })?;
                    if map.insert(label.to_string(), category).is_some() {
                        return Err(Error::PhoneMap {
                            line,
                            message: format!("label {label:?} listed twice"),
                        });
                    }
                }
                _ => {
                    return Err(Error::PhoneMap {
                        line,
                        message: "expected `label category`".into(),
                    })
                }
            }
        }
        Ok(Self { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn category(&self, label: &str) -> Option<PhoneCategory> {
        self.map.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Label/category pairs sorted by label.
    pub fn entries(&self) -> Vec<(&str, PhoneCategory)> {
        let mut v: Vec<(&str, PhoneCategory)> =
            self.map.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort();
        v
    }
}

/// One detection/boundary pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub detection: usize,
    pub boundary: usize,
    /// Detected minus reference, in samples.
    pub deviation: i64,
}

impl Match {
    pub fn deviation_ms(&self, sample_rate: u32) -> f64 {
        self.deviation as f64 * 1000.0 / sample_rate as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// Sorted by detection index.
    pub matches: Vec<Match>,
    /// Indices of unmatched detections, ascending.
    pub insertions: Vec<usize>,
}

/// Pairs detections with reference boundaries one-to-one.
///
/// Pairs are taken in increasing order of absolute distance; ties go to the
/// lower detection index, then the lower boundary index. A detection left
/// without a partner is an insertion. With `max_deviation` set, pairs
/// further apart than that many samples are never formed.
pub fn match_transitions(
    detected: &[usize],
    boundaries: &[usize],
    max_deviation: Option<usize>,
) -> Matching {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (d, &ds) in detected.iter().enumerate() {
        for (b, &bs) in boundaries.iter().enumerate() {
            let dist = ds.abs_diff(bs);
            if max_deviation.is_none_or(|m| dist <= m) {
                pairs.push((dist, d, b));
            }
        }
    }
    pairs.sort_unstable();

    let mut det_used = vec![false; detected.len()];
    let mut bnd_used = vec![false; boundaries.len()];
    let mut matches = Vec::new();
    for (_, d, b) in pairs {
        if det_used[d] || bnd_used[b] {
            continue;
        }
        det_used[d] = true;
        bnd_used[b] = true;
        matches.push(Match {
            detection: d,
            boundary: b,
            deviation: detected[d] as i64 - boundaries[b] as i64,
        });
    }
    matches.sort_by_key(|m| m.detection);
    let insertions = (0..detected.len()).filter(|&d| !det_used[d]).collect();
    Matching {
        matches,
        insertions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceAccuracy {
    pub tolerance_ms: f64,
    pub percent: f64,
}

/// Percentage of deviations whose magnitude is within each tolerance.
///
/// An empty list scores 0 at every tolerance.
pub fn accuracy_table(deviations_ms: &[f64], tolerances_ms: &[f64]) -> Vec<ToleranceAccuracy> {
    tolerances_ms
        .iter()
        .map(|&tol| {
            let hits = deviations_ms
                .iter()
                .filter(|d| d.abs() <= tol + 1e-9)
                .count();
            ToleranceAccuracy {
                tolerance_ms: tol,
                percent: percent(hits as u64, deviations_ms.len() as u64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_start_ms: f64,
    pub count: u64,
}

/// Index of the bin of width `bin_ms` centred on `index * bin_ms`.
pub fn histogram_bin(deviation_ms: f64, bin_ms: f64) -> i64 {
    (deviation_ms / bin_ms).round() as i64
}

/// Samples of each class label overlapping each phone category, indexed by
/// [`ClassLabel::column`].
pub type ClassSamples = BTreeMap<PhoneCategory, [u64; 5]>;

/// Apportions every labelled phone among the class segments it overlaps.
///
/// Phones whose label is missing from `map` are skipped; their count is
/// returned alongside.
pub fn class_durations(
    seg: &Segmentation,
    labels: &ReferenceLabels,
    map: &PhoneClassMap,
) -> (ClassSamples, u64) {
    let mut out = ClassSamples::new();
    let mut unmapped = 0;
    for phone in labels.entries() {
        let Some(category) = map.category(&phone.label) else {
            unmapped += 1;
            continue;
        };
        let row = out.entry(category).or_insert([0; 5]);
        let first = seg
            .segments
            .partition_point(|s| s.end_sample <= phone.begin);
        for s in &seg.segments[first..] {
            if s.start_sample >= phone.end {
                break;
            }
            let overlap = s.end_sample.min(phone.end) - s.start_sample.max(phone.begin);
            row[s.label.column()] += overlap as u64;
        }
    }
    (out, unmapped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnsetType {
    /// Sonorant after an unvoiced fricative, unvoiced stop or affricate.
    Sonorant,
    /// Unvoiced fricative or affricate after a sonorant or silence.
    UnvoicedFricative,
    /// Stop closure after a non-silence phone.
    StopClosure,
    /// Stop release after its closure.
    Burst,
}

impl OnsetType {
    pub const ALL: [OnsetType; 4] = [
        OnsetType::Sonorant,
        OnsetType::UnvoicedFricative,
        OnsetType::StopClosure,
        OnsetType::Burst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OnsetType::Sonorant => "sonorant",
            OnsetType::UnvoicedFricative => "unvoiced_fricative",
            OnsetType::StopClosure => "stop_closure",
            OnsetType::Burst => "burst",
        }
    }

    fn classify(prev: PhoneCategory, cur: PhoneCategory) -> Option<OnsetType> {
        use PhoneCategory::*;
        if cur.is_sonorant() && matches!(prev, UnvoicedFricative | UnvoicedStop | Affricate) {
            Some(OnsetType::Sonorant)
        } else if matches!(cur, UnvoicedFricative | Affricate)
            && (prev.is_sonorant() || prev.is_silence())
        {
            Some(OnsetType::UnvoicedFricative)
        } else if cur.is_closure() && !prev.is_silence() {
            Some(OnsetType::StopClosure)
        } else if matches!(cur, VoicedStop | UnvoicedStop) && prev.is_closure() {
            Some(OnsetType::Burst)
        } else {
            None
        }
    }

    /// Whether transition `t` of `seg` is of a kind that marks this onset.
    pub fn accepts(self, t: &Transition, seg: &Segmentation) -> bool {
        use ClassLabel::{H, L};
        use TransitionKind::*;
        let (before, after) = seg.labels_around(t.sample);
        match (self, t.kind) {
            (OnsetType::Sonorant, LowToHigh) => true,
            (OnsetType::Sonorant, SilenceToNonSilence) => after == Some(H),
            (OnsetType::UnvoicedFricative, HighToLow) => true,
            (OnsetType::UnvoicedFricative, SilenceToNonSilence) => after == Some(L),
            (OnsetType::StopClosure, NonSilenceToSilence) => matches!(before, Some(H | L)),
            (OnsetType::Burst, SilenceToNonSilence) => true,
            _ => false,
        }
    }
}

impl fmt::Display for OnsetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Onset {
    pub kind: OnsetType,
    pub sample: usize,
}

/// Onsets of interest in a label file.
///
/// A phone preceded by a gap, or starting the file after sample 0, follows
/// silence. Phones next to an unmapped label are skipped.
pub fn find_onsets(labels: &ReferenceLabels, map: &PhoneClassMap) -> Vec<Onset> {
    let entries = labels.entries();
    let mut out = Vec::new();
    for (i, phone) in entries.iter().enumerate() {
        let Some(cur) = map.category(&phone.label) else {
            continue;
        };
        let prev = match i.checked_sub(1).map(|j| &entries[j]) {
            Some(p) if p.end == phone.begin => match map.category(&p.label) {
                Some(c) => c,
                None => continue,
            },
            None if phone.begin == 0 => continue,
            _ => PhoneCategory::OtherSilence,
        };
        if let Some(kind) = OnsetType::classify(prev, cur) {
            out.push(Onset {
                kind,
                sample: phone.begin,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OnsetCount {
    pub total: u64,
    /// Detected onsets per tolerance.
    pub hits: Vec<u64>,
}

/// Onset totals and hits within each tolerance.
pub fn onset_counts(
    seg: &Segmentation,
    labels: &ReferenceLabels,
    map: &PhoneClassMap,
    tolerances_ms: &[f64],
) -> BTreeMap<OnsetType, OnsetCount> {
    let rate = seg.sample_rate as f64;
    let mut out: BTreeMap<OnsetType, OnsetCount> = OnsetType::ALL
        .into_iter()
        .map(|k| {
            (
                k,
                OnsetCount {
                    total: 0,
                    hits: vec![0; tolerances_ms.len()],
                },
            )
        })
        .collect();
    for onset in find_onsets(labels, map) {
        let nearest = seg
            .transitions
            .iter()
            .filter(|t| onset.kind.accepts(t, seg))
            .map(|t| t.sample.abs_diff(onset.sample))
            .min();
        let c = out.get_mut(&onset.kind).expect("all onset types present");
        c.total += 1;
        if let Some(dist) = nearest {
            let dist_ms = dist as f64 * 1000.0 / rate;
            for (h, &tol) in c.hits.iter_mut().zip(tolerances_ms) {
                if dist_ms <= tol + 1e-9 {
                    *h += 1;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub tolerances_ms: Vec<f64>,
    pub onset_tolerances_ms: Vec<f64>,
    pub histogram_bin_ms: f64,
    /// Pairs further apart than this are never matched; `None` matches freely.
    pub max_deviation_ms: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tolerances_ms: (1..=8).map(|k| 5.0 * k as f64).collect(),
            onset_tolerances_ms: vec![20.0, 30.0, 40.0],
            histogram_bin_ms: 5.0,
            max_deviation_ms: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &f64| v.is_finite() && *v > 0.0;
        if !self
            .tolerances_ms
            .iter()
            .chain(&self.onset_tolerances_ms)
            .all(positive)
        {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        if !positive(&self.histogram_bin_ms) {
            return Err(Error::InvalidParams(
                "histogram bin must be positive".into(),
            ));
        }
        if self.max_deviation_ms.is_some_and(|m| m.is_nan() || m < 0.0) {
            return Err(Error::InvalidParams("max deviation must be >= 0".into()));
        }
        Ok(())
    }
}

/// Integer tallies for one or more utterances.
///
/// Deviations are kept in whole nanoseconds so that sums stay exact.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalCounts {
    pub utterances: u64,
    pub detections: u64,
    pub boundaries: u64,
    pub matched: u64,
    pub within_tolerance: Vec<u64>,
    pub deviation_sum_ns: i128,
    pub deviation_sumsq_ns: i128,
    pub histogram: BTreeMap<i64, u64>,
    pub class_samples: ClassSamples,
    pub onsets: BTreeMap<OnsetType, OnsetCount>,
    pub unmapped_phones: u64,
}

fn samples_to_ns(samples: i64, rate: u32) -> i128 {
    let num = samples as i128 * 1_000_000_000;
    let den = rate as i128;
    // round half away from zero
    let half = den / 2;
    if num >= 0 {
        (num + half) / den
    } else {
        (num - half) / den
    }
}

fn ms_to_ns(ms: f64) -> i128 {
    (ms * 1e6).round() as i128
}

impl EvalCounts {
    /// Zero tallies shaped for `cfg`.
    pub fn new(cfg: &EvalConfig) -> Self {
        Self {
            within_tolerance: vec![0; cfg.tolerances_ms.len()],
            onsets: OnsetType::ALL
                .into_iter()
                .map(|k| {
                    (
                        k,
                        OnsetCount {
                            total: 0,
                            hits: vec![0; cfg.onset_tolerances_ms.len()],
                        },
                    )
                })
                .collect(),
            ..Self::default()
        }
    }

    /// Scores one utterance.
    pub fn score(
        seg: &Segmentation,
        labels: &ReferenceLabels,
        map: &PhoneClassMap,
        cfg: &EvalConfig,
    ) -> Self {
        let rate = seg.sample_rate;
        let mut c = Self::new(cfg);
        c.utterances = 1;

        let detected: Vec<usize> = seg.transitions.iter().map(|t| t.sample).collect();
        let boundaries = labels.boundaries();
        let cap = cfg
            .max_deviation_ms
            .map(|ms| (ms * rate as f64 / 1000.0 + 1e-9).floor() as usize);
        let m = match_transitions(&detected, &boundaries, cap);
        c.detections = detected.len() as u64;
        c.boundaries = boundaries.len() as u64;
        c.matched = m.matches.len() as u64;

        let tol_ns: Vec<i128> = cfg.tolerances_ms.iter().map(|&t| ms_to_ns(t)).collect();
        for mm in &m.matches {
            let ns = samples_to_ns(mm.deviation, rate);
            c.deviation_sum_ns += ns;
            c.deviation_sumsq_ns += ns * ns;
            for (w, &t) in c.within_tolerance.iter_mut().zip(&tol_ns) {
                if ns.abs() <= t {
                    *w += 1;
                }
            }
            *c.histogram
                .entry(histogram_bin(ns as f64 / 1e6, cfg.histogram_bin_ms))
                .or_insert(0) += 1;
        }

        let (class_samples, unmapped) = class_durations(seg, labels, map);
        c.class_samples = class_samples;
        c.unmapped_phones = unmapped;
        c.onsets = onset_counts(seg, labels, map, &cfg.onset_tolerances_ms);
        c
    }

    /// Adds `other` into `self`.
    ///
    /// # Panics
    ///
    /// If the two were built for different tolerance lists.
    pub fn merge(&mut self, other: &EvalCounts) {
        assert_eq!(
            self.within_tolerance.len(),
            other.within_tolerance.len(),
            "tolerance lists differ"
        );
        self.utterances += other.utterances;
        self.detections += other.detections;
        self.boundaries += other.boundaries;
        self.matched += other.matched;
        for (a, b) in self
            .within_tolerance
            .iter_mut()
            .zip(&other.within_tolerance)
        {
            *a += b;
        }
        self.deviation_sum_ns += other.deviation_sum_ns;
        self.deviation_sumsq_ns += other.deviation_sumsq_ns;
        for (k, v) in &other.histogram {
            *self.histogram.entry(*k).or_insert(0) += v;
        }
        for (k, row) in &other.class_samples {
            let mine = self.class_samples.entry(*k).or_insert([0; 5]);
            for (a, b) in mine.iter_mut().zip(row) {
                *a += b;
            }
        }
        for (k, oc) in &other.onsets {
            let mine = self.onsets.entry(*k).or_insert_with(|| OnsetCount {
                total: 0,
                hits: vec![0; oc.hits.len()],
            });
            assert_eq!(
                mine.hits.len(),
                oc.hits.len(),
                "onset tolerance lists differ"
            );
            mine.total += oc.total;
            for (a, b) in mine.hits.iter_mut().zip(&oc.hits) {
                *a += b;
            }
        }
        self.unmapped_phones += other.unmapped_phones;
    }

    pub fn insertions(&self) -> u64 {
        self.detections - self.matched
    }

    pub fn report(&self, cfg: &EvalConfig) -> EvalReport {
        let n = self.matched as i128;
        let (mean, std) = if n == 0 {
            (0.0, 0.0)
        } else {
            let var_num =
                n * self.deviation_sumsq_ns - self.deviation_sum_ns * self.deviation_sum_ns;
            let mean = self.deviation_sum_ns as f64 / n as f64 / 1e6;
            let var = var_num as f64 / (n as f64 * n as f64) / 1e12;
            (mean, var.max(0.0).sqrt())
        };

        let accuracy_by_tolerance = cfg
            .tolerances_ms
            .iter()
            .zip(&self.within_tolerance)
            .map(|(&t, &w)| ToleranceAccuracy {
                tolerance_ms: t,
                percent: percent(w, self.matched),
            })
            .collect();

        let histogram = self
            .histogram
            .iter()
            .map(|(&idx, &count)| HistogramBin {
                bin_start_ms: (idx as f64 - 0.5) * cfg.histogram_bin_ms,
                count,
            })
            .collect();

        let class_distribution = self
            .class_samples
            .iter()
            .filter_map(|(cat, row)| DistributionRow::new(cat.as_str(), row))
            .collect();

        let broad_class_distribution = BroadClass::ALL
            .into_iter()
            .filter_map(|bc| {
                let mut row = [0u64; 5];
                for (cat, r) in &self.class_samples {
                    if cat.broad_classes().contains(&bc) {
                        for (a, b) in row.iter_mut().zip(r) {
                            *a += b;
                        }
                    }
                }
                DistributionRow::new(bc.as_str(), &row)
            })
            .collect();

        let onset_accuracy = self
            .onsets
            .iter()
            .map(|(&onset, oc)| OnsetAccuracy {
                onset,
                count: oc.total,
                by_tolerance: cfg
                    .onset_tolerances_ms
                    .iter()
                    .zip(&oc.hits)
                    .map(|(&t, &h)| ToleranceAccuracy {
                        tolerance_ms: t,
                        percent: percent(h, oc.total),
                    })
                    .collect(),
            })
            .collect();

        EvalReport {
            utterances: self.utterances,
            detections: self.detections,
            boundaries: self.boundaries,
            matched: self.matched,
            insertions: self.insertions(),
            insertion_rate: percent(self.insertions(), self.detections),
            deviation_mean_ms: mean,
            deviation_std_ms: std,
            accuracy_by_tolerance,
            histogram,
            class_distribution,
            broad_class_distribution,
            onset_accuracy,
            unmapped_phones: self.unmapped_phones,
        }
    }
}

fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Percentages over the five classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassShares {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "HL")]
    pub hl: f64,
    #[serde(rename = "LH")]
    pub lh: f64,
}

impl ClassShares {
    pub fn get(&self, label: ClassLabel) -> f64 {
        match label {
            ClassLabel::H => self.h,
            ClassLabel::L => self.l,
            ClassLabel::S => self.s,
            ClassLabel::HL => self.hl,
            ClassLabel::LH => self.lh,
        }
    }

    pub fn sum(&self) -> f64 {
        self.h + self.l + self.s + self.hl + self.lh
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub class: String,
    pub samples: u64,
    pub shares: ClassShares,
}

impl DistributionRow {
    fn new(class: &str, row: &[u64; 5]) -> Option<Self> {
        let total: u64 = row.iter().sum();
        if total == 0 {
            return None;
        }
        let p = |l: ClassLabel| percent(row[l.column()], total);
        Some(Self {
            class: class.to_string(),
            samples: total,
            shares: ClassShares {
                h: p(ClassLabel::H),
                l: p(ClassLabel::L),
                s: p(ClassLabel::S),
                hl: p(ClassLabel::HL),
                lh: p(ClassLabel::LH),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetAccuracy {
    pub onset: OnsetType,
    pub count: u64,
    pub by_tolerance: Vec<ToleranceAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub utterances: u64,
    pub detections: u64,
    pub boundaries: u64,
    pub matched: u64,
    pub insertions: u64,
    /// Insertions as a percentage of all detections.
    pub insertion_rate: f64,
    pub deviation_mean_ms: f64,
    pub deviation_std_ms: f64,
    /// Share of matched detections within each tolerance.
    pub accuracy_by_tolerance: Vec<ToleranceAccuracy>,
    pub histogram: Vec<HistogramBin>,
    pub class_distribution: Vec<DistributionRow>,
    pub broad_class_distribution: Vec<DistributionRow>,
    pub onset_accuracy: Vec<OnsetAccuracy>,
    pub unmapped_phones: u64,
}

impl EvalReport {
    pub fn class_row(&self, class: &str) -> Option<&DistributionRow> {
        self.class_distribution
            .iter()
            .chain(&self.broad_class_distribution)
            .find(|r| r.class == class)
    }

    pub fn onset(&self, onset: OnsetType) -> Option<&OnsetAccuracy> {
        self.onset_accuracy.iter().find(|o| o.onset == onset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merger::{assign_classes, Merged};
    use crate::signal_io::{parse_labels, PhoneSpan};
    use crate::transitions::{Source, Strength};
    use proptest::prelude::*;

    const RATE: u32 = 16000;

    fn tr(kind: TransitionKind, sample: usize) -> Transition {
        Transition {
            kind,
            strength: Strength::Na,
            source: Source::Si,
            sample,
            time: sample as f64 / RATE as f64,
            hop_index: sample / 80,
        }
    }

    fn seg(ts: Vec<Transition>, n: usize) -> Segmentation {
        assign_classes(
            &Merged {
                transitions: ts,
                removed: vec![],
            },
            n,
            RATE,
            "t",
        )
        .unwrap()
    }

    fn labels(spans: &[(usize, usize, &str)]) -> ReferenceLabels {
        ReferenceLabels::new(
            spans
                .iter()
                .map(|&(begin, end, label)| PhoneSpan {
                    begin,
                    end,
                    label: label.into(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn builtin_map_covers_timit() {
        let m = PhoneClassMap::timit();
        assert_eq!(m.len(), 61);
        assert_eq!(m.category("h#"), Some(PhoneCategory::OtherSilence));
        assert_eq!(m.category("q"), Some(PhoneCategory::Glottal));
        assert_eq!(m.category("ax-h"), Some(PhoneCategory::Vowel));
        assert_eq!(m.category("jh"), Some(PhoneCategory::Affricate));
        assert!(PhoneCategory::Glottal.broad_classes().is_empty());
        assert_eq!(m.category("zz"), None);
    }

    #[test]
    fn map_parse_errors() {
        assert!(matches!(
            PhoneClassMap::parse("aa vowel\naa nasal"),
            Err(Error::PhoneMap { line: 2, .. })
        ));
        assert!(matches!(
            PhoneClassMap::parse("aa sonorous"),
            Err(Error::PhoneMap { line: 1, .. })
        ));
        assert!(matches!(
            PhoneClassMap::parse("# c\n\naa vowel x"),
            Err(Error::PhoneMap { line: 3, .. })
        ));
        let m = PhoneClassMap::parse("aa vowel # trailing\n").unwrap();
        assert_eq!(m.entries(), vec![("aa", PhoneCategory::Vowel)]);
    }

    #[test]
    fn matching_examples() {
        // 1 ms = 16 samples
        let m = match_transitions(&[16000], &[16064], None);
        assert_eq!(m.matches.len(), 1);
        assert_eq!(m.matches[0].deviation_ms(RATE), -4.0);
        assert!(m.insertions.is_empty());

        let m = match_transitions(&[16000, 16096], &[16064], None);
        assert_eq!(
            m.matches,
            vec![Match {
                detection: 1,
                boundary: 0,
                deviation: 32
            }]
        );
        assert_eq!(m.insertions, vec![0]);

        let m = match_transitions(&[], &[1, 2, 3], None);
        assert!(m.matches.is_empty() && m.insertions.is_empty());
    }

    #[test]
    fn matching_cap_turns_far_detections_into_insertions() {
        let m = match_transitions(&[100, 5000], &[120], Some(800));
        assert_eq!(m.matches.len(), 1);
        let m = match_transitions(&[5000], &[120], Some(800));
        assert_eq!(m.insertions, vec![0]);
    }

    #[test]
    fn accuracy_examples() {
        let t: Vec<f64> = (1..=8).map(|k| 5.0 * k as f64).collect();
        assert!(accuracy_table(&[0.0, 0.0, 0.0], &t)
            .iter()
            .all(|a| a.percent == 100.0));
        let a = accuracy_table(&[4.0, -12.0], &[5.0, 15.0]);
        assert_eq!(a[0].percent, 50.0);
        assert_eq!(a[1].percent, 100.0);
        assert!(accuracy_table(&[], &t).iter().all(|a| a.percent == 0.0));
    }

    #[test]
    fn histogram_bins_are_centred() {
        assert_eq!(histogram_bin(0.0, 5.0), 0);
        assert_eq!(histogram_bin(2.4, 5.0), 0);
        assert_eq!(histogram_bin(-2.4, 5.0), 0);
        assert_eq!(histogram_bin(2.6, 5.0), 1);
        assert_eq!(histogram_bin(-7.6, 5.0), -2);
    }

    #[test]
    fn single_phone_inside_high_segment() {
        let s = seg(
            vec![
                tr(TransitionKind::SilenceToNonSilence, 1000),
                tr(TransitionKind::HighToLow, 9000),
            ],
            16000,
        );
        let l = labels(&[(2000, 8000, "aa")]);
        let (rows, unmapped) = class_durations(&s, &l, &PhoneClassMap::timit());
        assert_eq!(unmapped, 0);
        assert_eq!(rows[&PhoneCategory::Vowel], [6000, 0, 0, 0, 0]);
    }

    #[test]
    fn phone_straddling_segments_is_apportioned() {
        let s = seg(
            vec![
                tr(TransitionKind::SilenceToNonSilence, 1000),
                tr(TransitionKind::HighToLow, 5000),
            ],
            16000,
        );
        let l = labels(&[(0, 4000, "h#"), (4000, 6000, "s"), (6000, 6100, "xx")]);
        let (rows, unmapped) = class_durations(&s, &l, &PhoneClassMap::timit());
        assert_eq!(unmapped, 1);
        assert_eq!(rows[&PhoneCategory::OtherSilence], [3000, 0, 1000, 0, 0]);
        assert_eq!(
            rows[&PhoneCategory::UnvoicedFricative],
            [1000, 1000, 0, 0, 0]
        );
    }

    #[test]
    fn no_transitions_scores_zero_onsets() {
        let l = parse_labels(
            "0 1000 h#\n1000 2000 s\n2000 4000 aa\n4000 4500 tcl\n4500 4700 t\n4700 6000 iy\n",
        )
        .unwrap();
        let s = seg(vec![], 6000);
        let c = onset_counts(&s, &l, &PhoneClassMap::timit(), &[20.0, 30.0, 40.0]);
        assert_eq!(c[&OnsetType::Sonorant].total, 2);
        assert_eq!(c[&OnsetType::UnvoicedFricative].total, 1);
        assert_eq!(c[&OnsetType::StopClosure].total, 1);
        assert_eq!(c[&OnsetType::Burst].total, 1);
        assert!(c.values().all(|oc| oc.hits.iter().all(|&h| h == 0)));
    }

    #[test]
    fn sonorant_onset_hit_exactly() {
        let l = parse_labels("0 1000 h#\n1000 2000 s\n2000 4000 aa\n4000 5000 h#\n").unwrap();
        let s = seg(
            vec![
                tr(TransitionKind::SilenceToNonSilence, 1000),
                tr(TransitionKind::LowToHigh, 2000),
                tr(TransitionKind::NonSilenceToSilence, 4000),
            ],
            5000,
        );
        let c = onset_counts(&s, &l, &PhoneClassMap::timit(), &[20.0, 30.0, 40.0]);
        assert_eq!(
            c[&OnsetType::Sonorant],
            OnsetCount {
                total: 1,
                hits: vec![1, 1, 1]
            }
        );
        // the S-N is followed by L, so it marks the fricative onset
        assert_eq!(
            c[&OnsetType::UnvoicedFricative],
            OnsetCount {
                total: 1,
                hits: vec![1, 1, 1]
            }
        );
    }

    #[test]
    fn report_shape() {
        let cfg = EvalConfig::default();
        let l = parse_labels("0 1000 h#\n1000 2000 s\n2000 4000 aa\n4000 5000 h#\n").unwrap();
        let s = seg(
            vec![
                tr(TransitionKind::SilenceToNonSilence, 1016),
                tr(TransitionKind::LowToHigh, 1900),
                tr(TransitionKind::NonSilenceToSilence, 4000),
            ],
            5000,
        );
        let r = EvalCounts::score(&s, &l, &PhoneClassMap::timit(), &cfg).report(&cfg);
        assert_eq!(
            (r.detections, r.boundaries, r.matched, r.insertions),
            (3, 3, 3, 0)
        );
        // deviations +1 ms, -6.25 ms, 0 ms
        assert!((r.deviation_mean_ms - (1.0 - 6.25) / 3.0).abs() < 1e-9);
        assert_eq!(r.accuracy_by_tolerance[0].percent, 200.0 / 3.0);
        assert_eq!(r.accuracy_by_tolerance[1].percent, 100.0);
        assert_eq!(r.histogram.iter().map(|b| b.count).sum::<u64>(), 3);
        for row in r
            .class_distribution
            .iter()
            .chain(&r.broad_class_distribution)
        {
            assert!((row.shares.sum() - 100.0).abs() < 1e-9);
        }
        assert_eq!(r.onset_accuracy.len(), 4);
    }

    /// Repeatedly scans every unmatched pair for the global minimum.
    fn oracle(detected: &[usize], boundaries: &[usize]) -> Vec<(usize, usize)> {
        let mut dfree = vec![true; detected.len()];
        let mut bfree = vec![true; boundaries.len()];
        let mut out = Vec::new();
        loop {
            let mut best: Option<(usize, usize, usize)> = None;
            for d in 0..detected.len() {
                for b in 0..boundaries.len() {
                    if !dfree[d] || !bfree[b] {
                        continue;
                    }
                    let dist = detected[d].abs_diff(boundaries[b]);
                    if best.is_none_or(|(bd, _, _)| dist < bd) {
                        best = Some((dist, d, b));
                    }
                }
            }
            let Some((_, d, b)) = best else { break };
            dfree[d] = false;
            bfree[b] = false;
            out.push((d, b));
        }
        out.sort();
        out
    }

    fn arb_counts() -> impl Strategy<Value = EvalCounts> {
        (
            prop::collection::btree_set(0usize..4000, 0..10),
            prop::collection::btree_set(1usize..3999, 0..8),
        )
            .prop_map(|(det, bnd)| {
                let kinds = [
                    TransitionKind::SilenceToNonSilence,
                    TransitionKind::NonSilenceToSilence,
                ];
                let ts = det
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| tr(kinds[i % 2], s))
                    .collect();
                let s = seg(ts, 4000);
                let mut edges: Vec<usize> = vec![0];
                edges.extend(bnd);
                edges.push(4000);
                let phones = ["aa", "s", "tcl", "t", "h#", "m"];
                let l = labels(
                    &edges
                        .windows(2)
                        .enumerate()
                        .map(|(i, w)| (w[0], w[1], phones[i % phones.len()]))
                        .collect::<Vec<_>>(),
                );
                EvalCounts::score(&s, &l, &PhoneClassMap::timit(), &EvalConfig::default())
            })
    }

    proptest! {
        #[test]
        fn matching_agrees_with_oracle(
            det in prop::collection::vec(0usize..60, 0..=8),
            bnd in prop::collection::vec(0usize..60, 0..=8),
        ) {
            let m = match_transitions(&det, &bnd, None);
            let got: Vec<(usize, usize)> = m.matches.iter().map(|x| (x.detection, x.boundary)).collect();
            prop_assert_eq!(got, oracle(&det, &bnd));
            prop_assert_eq!(m.matches.len() + m.insertions.len(), det.len());
            prop_assert_eq!(m.matches.len(), det.len().min(bnd.len()));
        }

        #[test]
        fn accuracy_is_monotone(devs in prop::collection::vec(-60.0f64..60.0, 0..50)) {
            let t: Vec<f64> = (1..=8).map(|k| 5.0 * k as f64).collect();
            let a = accuracy_table(&devs, &t);
            prop_assert!(a.windows(2).all(|w| w[0].percent <= w[1].percent));
        }

        #[test]
        fn merge_is_associative_and_rows_sum(a in arb_counts(), b in arb_counts(), c in arb_counts()) {
            let mut left = a.clone();
            left.merge(&b);
            left.merge(&c);
            let mut bc = b.clone();
            bc.merge(&c);
            let mut right = a.clone();
            right.merge(&bc);
            prop_assert_eq!(&left, &right);

            let r = left.report(&EvalConfig::default());
            prop_assert_eq!(r.insertions + r.matched, r.detections);
            for row in r.class_distribution.iter().chain(&r.broad_class_distribution) {
                prop_assert!((row.shares.sum() - 100.0).abs() <= 0.1);
            }
        }
    }
}
