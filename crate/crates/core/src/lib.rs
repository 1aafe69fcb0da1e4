//! Detection of transitions between broad phonetic classes in speech.
//!
//! An utterance is split into five kinds of homogeneous span: silence (`S`),
//! high amplitude (`H`), low amplitude (`L`), and the two mixed spans `HL`
//! and `LH`. Silence boundaries come from a silence index measured on a
//! coarsely quantized copy of the signal; high/low boundaries come from where
//! the strongest extrema of a low-frequency bandpass signal sit inside each
//! analysis frame.
//!
//! ```
//! use broadclass::pipeline::{segment, PipelineConfig};
//! use broadclass::signal_io::RawAudio;
//!
//! // 0.3 s of silence, 0.4 s of a 200 Hz tone, 0.3 s of silence
//! let samples: Vec<i16> = (0..16000)
//!     .map(|i| {
//!         let t = i as f64 / 16000.0;
//!         if (0.3..0.7).contains(&t) {
//!             (10000.0 * (2.0 * std::f64::consts::PI * 200.0 * t).sin()) as i16
//!         } else {
//!             0
//!         }
//!     })
//!     .collect();
//! let raw = RawAudio::new(samples, 16000)?;
//! let seg = segment(&raw, &PipelineConfig::default(), "demo")?;
//! let labels: Vec<String> = seg.segments.iter().map(|s| s.label.to_string()).collect();
//! assert_eq!(labels, ["S", "H", "S"]);
//! # Ok::<(), broadclass::Error>(())
//! ```

pub mod bandpass;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod merger;
pub mod pipeline;
pub mod signal_io;
pub mod transitions;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/signal.md")]
    pub mod signal {}
    #[doc = include_str!("../../../book/src/bandpass.md")]
    pub mod bandpass {}
    #[doc = include_str!("../../../book/src/transitions.md")]
    pub mod transitions {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
