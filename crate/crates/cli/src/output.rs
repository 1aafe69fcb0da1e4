//! Serialized forms of segmentations, features and reports.

use std::fmt::Write as _;

use broadclass::evaluation::EvalReport;
use broadclass::features::FrameFeatures;
use broadclass::merger::{ClassLabel, ClassSegment, Segmentation};
use broadclass::transitions::{Source, Strength, Transition, TransitionKind};
use serde::{Deserialize, Serialize};

/// Rounds seconds to whole nanoseconds.
fn secs(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub kind: TransitionKind,
    pub strength: Strength,
    pub source: Source,
    pub time: f64,
    pub sample: usize,
    pub hop_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub label: ClassLabel,
    pub start: f64,
    pub end: f64,
    pub start_sample: usize,
    pub end_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRecord {
    pub utterance_id: String,
    pub sample_rate: u32,
    pub num_samples: usize,
    pub duration: f64,
    pub transitions: Vec<TransitionRecord>,
    pub segments: Vec<SegmentRecord>,
}

impl From<&Segmentation> for SegmentationRecord {
    fn from(s: &Segmentation) -> Self {
        Self {
            utterance_id: s.utterance_id.clone(),
            sample_rate: s.sample_rate,
            num_samples: s.num_samples,
            duration: secs(s.duration()),
            transitions: s
                .transitions
                .iter()
                .map(|t| TransitionRecord {
                    kind: t.kind,
                    strength: t.strength,
                    source: t.source,
                    time: secs(t.time),
                    sample: t.sample,
                    hop_index: t.hop_index,
                })
                .collect(),
            segments: s
                .segments
                .iter()
                .map(|g| SegmentRecord {
                    label: g.label,
                    start: secs(g.start),
                    end: secs(g.end),
                    start_sample: g.start_sample,
                    end_sample: g.end_sample,
                })
                .collect(),
        }
    }
}

impl SegmentationRecord {
    /// Rebuilds a segmentation; times are recomputed from the sample fields.
    pub fn to_segmentation(&self) -> Segmentation {
        let rate = self.sample_rate as f64;
        let transitions: Vec<Transition> = self
            .transitions
            .iter()
            .map(|t| Transition {
                kind: t.kind,
                strength: t.strength,
                source: t.source,
                sample: t.sample,
                time: t.sample as f64 / rate,
                hop_index: t.hop_index,
            })
            .collect();
        let segments = self
            .segments
            .iter()
            .map(|g| ClassSegment {
                label: g.label,
                start_sample: g.start_sample,
                end_sample: g.end_sample,
                start: g.start_sample as f64 / rate,
                end: g.end_sample as f64 / rate,
                provenance: transitions
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.sample == g.start_sample || t.sample == g.end_sample)
                    .map(|(i, _)| i)
                    .collect(),
            })
            .collect();
        Segmentation {
            utterance_id: self.utterance_id.clone(),
            sample_rate: self.sample_rate,
            num_samples: self.num_samples,
            transitions,
            segments,
        }
    }
}

pub fn segmentation_json(s: &Segmentation) -> String {
    let mut out = serde_json::to_string_pretty(&SegmentationRecord::from(s)).expect("serializable");
    out.push('\n');
    out
}

/// `start_sample end_sample label` per segment, the same layout as `.phn`.
pub fn segmentation_lab(s: &Segmentation) -> String {
    let mut out = String::new();
    for g in &s.segments {
        let _ = writeln!(out, "{} {} {}", g.start_sample, g.end_sample, g.label);
    }
    out
}

pub fn features_csv(rows: &[FrameFeatures]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out =
        String::from("hop_index,center_sample,center_time,si,pfe_ms,ple_ms,ade,ade_reliable\n");
    for f in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            f.hop_index,
            f.center_sample,
            secs(f.center_time),
            f.si,
            opt(f.pfe_ms),
            opt(f.ple_ms),
            opt(f.ade),
            f.ade_reliable
        );
    }
    out
}

pub fn histogram_csv(r: &EvalReport) -> String {
    let mut out = String::from("bin_start_ms,count\n");
    for b in &r.histogram {
        let _ = writeln!(out, "{},{}", b.bin_start_ms, b.count);
    }
    out
}

pub fn report_json(r: &EvalReport) -> String {
    let mut out = serde_json::to_string_pretty(r).expect("serializable");
    out.push('\n');
    out
}

/// Long-format CSV: `table,row,column,value`.
pub fn report_csv(r: &EvalReport) -> String {
    let mut out = String::from("table,row,column,value\n");
    let mut put = |table: &str, row: &str, col: &str, v: String| {
        let _ = writeln!(out, "{table},{row},{col},{v}");
    };
    for (k, v) in [
        ("utterances", r.utterances as f64),
        ("detections", r.detections as f64),
        ("boundaries", r.boundaries as f64),
        ("matched", r.matched as f64),
        ("insertions", r.insertions as f64),
        ("insertion_rate", r.insertion_rate),
        ("deviation_mean_ms", r.deviation_mean_ms),
        ("deviation_std_ms", r.deviation_std_ms),
        ("unmapped_phones", r.unmapped_phones as f64),
    ] {
        put("summary", k, "value", v.to_string());
    }
    for a in &r.accuracy_by_tolerance {
        put(
            "accuracy",
            &a.tolerance_ms.to_string(),
            "percent",
            a.percent.to_string(),
        );
    }
    for (table, rows) in [
        ("class_distribution", &r.class_distribution),
        ("broad_class_distribution", &r.broad_class_distribution),
    ] {
        for row in rows {
            for label in ClassLabel::ALL {
                put(
                    table,
                    &row.class,
                    label.as_str(),
                    row.shares.get(label).to_string(),
                );
            }
        }
    }
    for o in &r.onset_accuracy {
        put(
            "onset_count",
            o.onset.as_str(),
            "count",
            o.count.to_string(),
        );
        for t in &o.by_tolerance {
            put(
                "onset_accuracy",
                o.onset.as_str(),
                &t.tolerance_ms.to_string(),
                t.percent.to_string(),
            );
        }
    }
    out
}

pub fn report_text(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "utterances     {}", r.utterances);
    let _ = writeln!(out, "detections     {}", r.detections);
    let _ = writeln!(out, "boundaries     {}", r.boundaries);
    let _ = writeln!(
        out,
        "insertions     {} ({:.1}%)",
        r.insertions, r.insertion_rate
    );
    let _ = writeln!(
        out,
        "deviation      mean {:.2} ms, std {:.2} ms",
        r.deviation_mean_ms, r.deviation_std_ms
    );
    let _ = writeln!(out, "\naccuracy by tolerance");
    for a in &r.accuracy_by_tolerance {
        let _ = writeln!(out, "  {:>5} ms  {:6.1}%", a.tolerance_ms, a.percent);
    }
    for (title, rows) in [
        ("class distribution (%)", &r.class_distribution),
        ("broad class distribution (%)", &r.broad_class_distribution),
    ] {
        let _ = writeln!(out, "\n{title}");
        let _ = write!(out, "  {:<24}", "");
        for l in ClassLabel::ALL {
            let _ = write!(out, "{:>7}", l.as_str());
        }
        out.push('\n');
        for row in rows {
            let _ = write!(out, "  {:<24}", row.class);
            for l in ClassLabel::ALL {
                let _ = write!(out, "{:>7.1}", row.shares.get(l));
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "\nonset accuracy (%)");
    for o in &r.onset_accuracy {
        let _ = write!(out, "  {:<20} n={:<7}", o.onset.as_str(), o.count);
        for t in &o.by_tolerance {
            let _ = write!(out, " @{}ms {:5.1}", t.tolerance_ms, t.percent);
        }
        out.push('\n');
    }
    out
}
