//! Zero-phase bell-cosine bandpass filter.
//!
//! The gain curve rises as a half cosine from `f1/2` to `f1`, is flat up to
//! `f2/2`, and falls as a half cosine to zero at `f2`. Filtering is done on
//! the whole utterance in the frequency domain with a real gain, so the
//! output has no group delay and extrema stay where they were.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal_io::Utterance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    /// End of the cosine rise; the rise starts at `f1 / 2`.
    pub f1: f64,
    /// End of the cosine fall; the fall starts at `f2 / 2`.
    pub f2: f64,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        Self {
            f1: 70.0,
            f2: 500.0,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        let ok = self.f1 > 0.0
            && self.f1.is_finite()
            && self.f2.is_finite()
            && self.f1 <= self.f2 / 2.0
            && self.f2 < nyquist;
        if ok {
            Ok(())
        } else {
            Err(Error::SpecInvalidForRate {
                f1: self.f1,
                f2: self.f2,
                sample_rate,
            })
        }
    }
}

/// Gain of the filter at frequency `f` (Hz).
pub fn filter_response(f: f64, spec: &BandpassSpec) -> f64 {
    let (f1, f2) = (spec.f1, spec.f2);
    let (lo, hi) = (f1 / 2.0, f2 / 2.0);
    if f < lo || f > f2 {
        0.0
    } else if f < f1 {
        0.5 - 0.5 * (PI * (f - lo) / lo).cos()
    } else if f <= hi {
        1.0
    } else {
        0.5 + 0.5 * (PI * (f - hi) / hi).cos()
    }
}

/// Bandpass-filtered utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct BpfSignal {
    samples: Vec<f64>,
    sample_rate: u32,
    spec: BandpassSpec,
}

impl BpfSignal {
    /// Wraps an already-filtered sequence, e.g. a synthetic test frame.
    pub fn from_samples(samples: Vec<f64>, sample_rate: u32, spec: BandpassSpec) -> Self {
        Self {
            samples,
            sample_rate,
            spec,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn spec(&self) -> &BandpassSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at a possibly out-of-range index; zero outside the signal.
    #[inline]
    pub fn get_or_zero(&self, idx: isize) -> f64 {
        if idx < 0 {
            return 0.0;
        }
        self.samples.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// Sample indices `i` where the signal changes sign between `i - 1` and `i`.
    ///
    /// A sample that is exactly zero counts as the crossing when the signs on
    /// either side of it differ.
    pub fn zero_crossings(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut last_sign = 0i8;
        for (i, &v) in self.samples.iter().enumerate() {
            let sign = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            };
            if sign == 0 {
                continue;
            }
            if last_sign != 0 && sign != last_sign {
                // place the crossing on the exact zero when there is one
                let mut at = i;
                while at > 0 && self.samples[at - 1] == 0.0 {
                    at -= 1;
                }
                out.push(at);
            }
            last_sign = sign;
        }
        out
    }
}

/// Filters the whole utterance with the zero-phase bell-cosine gain.
///
/// The signal is zero-padded to a power of two at least twice its length so
/// that circular wrap-around of the filter tails stays outside the utterance.
pub fn apply_bandpass(u: &Utterance, spec: &BandpassSpec) -> Result<BpfSignal> {
    spec.validate(u.sample_rate())?;
    let n = u.len();
    if n == 0 {
        return Ok(BpfSignal::from_samples(Vec::new(), u.sample_rate(), *spec));
    }
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = u
        .samples()
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(size).process(&mut buf);

    let bin_hz = u.sample_rate() as f64 / size as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let physical = if k <= size / 2 { k } else { size - k };
        *c *= filter_response(physical as f64 * bin_hz, spec);
    }

    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / size as f64;
    let samples = buf[..n].iter().map(|c| c.re * scale).collect();
    Ok(BpfSignal::from_samples(samples, u.sample_rate(), *spec))
}
