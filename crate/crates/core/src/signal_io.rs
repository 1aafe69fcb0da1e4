//! Audio and reference-label ingestion.
//!
//! Input audio is 16-bit mono PCM, delivered either as RIFF/WAV or as a NIST
//! SPHERE file (the TIMIT distribution format). After loading, the waveform is
//! demeaned and peak-normalized to `[-1, 1]`, and a 9-bit staircase copy is
//! derived for the silence measure.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// Lowest sample rate accepted on ingestion.
pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Spacing of the 9-bit grid in 16-bit units (the 7 low bits are zeroed).
pub const QUANT_STEP: i32 = 1 << 7;

/// Scale mapping `[-1, 1]` onto signed 16-bit integers.
pub const PCM_SCALE: f64 = 32767.0;

/// Container format of an audio file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AudioFormat {
    Wav,
    Sphere,
    /// Sniff the magic bytes.
    #[default]
    Auto,
}

/// Decoded 16-bit mono PCM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAudio {
    samples: Vec<i16>,
    sample_rate: u32,
    channels: u16,
}

impl RawAudio {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::UnsupportedFormat("audio contains no samples".into()));
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::UnsupportedFormat(format!(
                "sample rate {sample_rate} Hz is below {MIN_SAMPLE_RATE} Hz"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            channels: 1,
        })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Demeaned, peak-normalized waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Utterance {
    /// Wraps samples that are already on the normalized scale.
    ///
    /// No normalization is applied. This is the entry point for synthetic
    /// signals (including all-zero ones, which [`normalize`] rejects).
    pub fn from_samples(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Staircase signal on the 9-bit grid, in 16-bit integer units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedSignal {
    qsamples: Vec<i32>,
    sample_rate: u32,
}

impl QuantizedSignal {
    pub fn qsamples(&self) -> &[i32] {
        &self.qsamples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.qsamples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qsamples.is_empty()
    }

    /// Sample at a possibly out-of-range index; zero outside the signal.
    #[inline]
    pub fn get_or_zero(&self, idx: isize) -> i32 {
        if idx < 0 {
            return 0;
        }
        self.qsamples.get(idx as usize).copied().unwrap_or(0)
    }
}

/// Demeans and peak-normalizes the waveform.
///
/// The arithmetic is carried out on the exact integers `M·s[n] − Σs`, so the
/// result is bit-identical under any DC offset and any positive gain that
/// keeps the samples integral.
pub fn normalize(raw: &RawAudio) -> Result<Utterance> {
    let count = raw.samples.len() as i64;
    let sum: i64 = raw.samples.iter().map(|&s| s as i64).sum();
    let centered: Vec<i64> = raw
        .samples
        .iter()
        .map(|&s| count * s as i64 - sum)
        .collect();
    let peak = centered.iter().map(|v| v.abs()).max().unwrap_or(0);
    if peak == 0 {
        return Err(Error::DegenerateSignal);
    }
    let peak = peak as f64;
    Ok(Utterance {
        samples: centered.iter().map(|&v| v as f64 / peak).collect(),
        sample_rate: raw.sample_rate,
    })
}

/// Maps a normalized sample to 16-bit scale and zeroes the 7 low magnitude bits.
pub fn quantize_sample(x: f64) -> i32 {
    let scaled = x * PCM_SCALE;
    // snap float noise so grid-aligned input stays on its grid point
    let nearest = scaled.round();
    let integral = if (scaled - nearest).abs() < 1e-6 {
        nearest
    } else {
        scaled.trunc()
    };
    let v = integral.clamp(-32768.0, 32768.0) as i32;
    v.signum() * (v.abs() & !(QUANT_STEP - 1))
}

pub fn quantize_9bit(u: &Utterance) -> QuantizedSignal {
    QuantizedSignal {
        qsamples: u.samples.iter().map(|&x| quantize_sample(x)).collect(),
        sample_rate: u.sample_rate,
    }
}

/// Loads a 16-bit mono PCM file.
pub fn load_audio(path: impl AsRef<Path>, format_hint: AudioFormat) -> Result<RawAudio> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_audio(&bytes, format_hint)
}

/// Decodes an in-memory WAV or SPHERE image.
pub fn decode_audio(bytes: &[u8], format_hint: AudioFormat) -> Result<RawAudio> {
    let format = match format_hint {
        AudioFormat::Auto => sniff(bytes)?,
        other => other,
    };
    match format {
        AudioFormat::Wav => decode_wav(bytes),
        AudioFormat::Sphere => decode_sphere(bytes),
        AudioFormat::Auto => unreachable!(),
    }
}

fn sniff(bytes: &[u8]) -> Result<AudioFormat> {
    if bytes.starts_with(b"RIFF") {
        Ok(AudioFormat::Wav)
    } else if bytes.starts_with(b"NIST_1A") {
        Ok(AudioFormat::Sphere)
    } else {
        Err(Error::UnsupportedFormat(
            "neither a RIFF/WAV nor a NIST SPHERE file".into(),
        ))
    }
}

fn decode_wav(bytes: &[u8]) -> Result<RawAudio> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::NonPcmEncoding("floating-point WAV".into()));
    }
    if spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "{}-bit WAV (only 16-bit is supported)",
            spec.bits_per_sample
        )));
    }
    if spec.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels (only mono is supported)",
            spec.channels
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    RawAudio::new(samples, spec.sample_rate)
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV variant".into()),
        hound::Error::TooWide => Error::UnsupportedFormat("sample width too large".into()),
        hound::Error::FormatError(msg) => Error::CorruptHeader(msg.into()),
        hound::Error::IoError(err) => Error::CorruptHeader(format!("truncated WAV: {err}")),
        other => Error::CorruptHeader(other.to_string()),
    }
}

/// Parsed fields of a NIST SPHERE header.
#[derive(Debug, Default)]
struct SphereHeader {
    header_size: usize,
    sample_count: Option<usize>,
    sample_rate: Option<u32>,
    channel_count: Option<u32>,
    sample_n_bytes: Option<u32>,
    byte_format: Option<String>,
    coding: Option<String>,
}

fn parse_sphere_header(bytes: &[u8]) -> Result<SphereHeader> {
    let corrupt = |msg: &str| Error::CorruptHeader(format!("SPHERE: {msg}"));
    // the header size lives on the second line, inside the first 16 bytes
    let preamble = bytes.get(..16).ok_or_else(|| corrupt("file too short"))?;
    let preamble = std::str::from_utf8(preamble).map_err(|_| corrupt("non-ASCII preamble"))?;
    let mut lines = preamble.lines();
    if lines.next() != Some("NIST_1A") {
        return Err(corrupt("missing NIST_1A magic"));
    }
    let header_size: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| corrupt("bad header size"))?;
    if header_size < 16 || header_size > bytes.len() {
        return Err(corrupt("header size exceeds file length"));
    }
    let text = String::from_utf8_lossy(&bytes[16..header_size]);

    let mut header = SphereHeader {
        header_size,
        ..Default::default()
    };
    let mut saw_end = false;
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim() == "end_head" {
            saw_end = true;
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ' ');
        let (Some(key), Some(ty)) = (parts.next(), parts.next()) else {
            return Err(corrupt(&format!("bad field line {line:?}")));
        };
        let value = parts.next().unwrap_or("");
        let value = match ty.strip_prefix("-s").and_then(|n| n.parse::<usize>().ok()) {
            Some(n) => value.get(..n).unwrap_or(value).to_string(),
            None => value.trim().to_string(),
        };
        let int = || -> Result<i64> {
            value
                .parse()
                .map_err(|_| corrupt(&format!("field {key} is not an integer")))
        };
        match key {
            "sample_count" => header.sample_count = Some(int()?.max(0) as usize),
            "sample_rate" => header.sample_rate = Some(int()?.max(0) as u32),
            "channel_count" => header.channel_count = Some(int()?.max(0) as u32),
            "sample_n_bytes" => header.sample_n_bytes = Some(int()?.max(0) as u32),
            "sample_byte_format" => header.byte_format = Some(value),
            "sample_coding" => header.coding = Some(value),
            _ => {}
        }
    }
    if !saw_end {
        return Err(corrupt("missing end_head"));
    }
    Ok(header)
}

fn decode_sphere(bytes: &[u8]) -> Result<RawAudio> {
    let header = parse_sphere_header(bytes)?;
    if let Some(coding) = &header.coding {
        if coding != "pcm" {
            return Err(Error::NonPcmEncoding(format!(
                "SPHERE sample_coding {coding:?}"
            )));
        }
    }
    match header.sample_n_bytes {
        Some(2) => {}
        Some(n) => {
            return Err(Error::UnsupportedFormat(format!(
                "SPHERE sample_n_bytes {n} (only 2 is supported)"
            )))
        }
        None => {
            return Err(Error::CorruptHeader(
                "SPHERE: missing sample_n_bytes".into(),
            ))
        }
    }
    if let Some(ch) = header.channel_count {
        if ch != 1 {
            return Err(Error::UnsupportedFormat(format!(
                "{ch} channels (only mono is supported)"
            )));
        }
    }
    let big_endian = match header.byte_format.as_deref() {
        None | Some("01") => false,
        Some("10") => true,
        Some(other) => {
            return Err(Error::CorruptHeader(format!(
                "SPHERE: sample_byte_format {other:?}"
            )))
        }
    };
    let sample_rate = header
        .sample_rate
        .ok_or_else(|| Error::CorruptHeader("SPHERE: missing sample_rate".into()))?;
    let data = &bytes[header.header_size..];
    let count = header.sample_count.unwrap_or(data.len() / 2);
    let needed = count * 2;
    if data.len() < needed {
        return Err(Error::CorruptHeader(format!(
            "SPHERE: header declares {count} samples but only {} bytes follow",
            data.len()
        )));
    }
    let samples = data[..needed]
        .chunks_exact(2)
        .map(|b| {
            if big_endian {
                i16::from_be_bytes([b[0], b[1]])
            } else {
                i16::from_le_bytes([b[0], b[1]])
            }
        })
        .collect();
    RawAudio::new(samples, sample_rate)
}

/// One hand-labeled phone: `[begin, end)` in samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneSpan {
    pub begin: usize,
    pub end: usize,
    pub label: String,
}

/// Ordered, non-overlapping phone labels of one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReferenceLabels {
    entries: Vec<PhoneSpan>,
}

impl ReferenceLabels {
    pub fn new(entries: Vec<PhoneSpan>) -> Result<Self> {
        let mut prev_end = 0;
        for (i, e) in entries.iter().enumerate() {
            if e.begin >= e.end || e.begin < prev_end {
                return Err(Error::NonMonotonicSpans { line: i + 1 });
            }
            prev_end = e.end;
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PhoneSpan] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Interior phone boundaries in samples: every begin and end except the
    /// outer edges of the labeled region, deduplicated.
    pub fn boundaries(&self) -> Vec<usize> {
        let n = self.entries.len();
        let mut out: Vec<usize> = self
            .entries
            .iter()
            .enumerate()
            .flat_map(|(i, e)| {
                let b = (i > 0).then_some(e.begin);
                let en = (i + 1 < n).then_some(e.end);
                b.into_iter().chain(en)
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Renders the `.phn` text form.
    pub fn to_phn_string(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {}", e.begin, e.end, e.label);
        }
        s
    }
}

/// Parses `.phn` text: one `begin end label` triple per line.
pub fn parse_labels(text: &str) -> Result<ReferenceLabels> {
    let mut entries = Vec::new();
    let mut prev_end = 0usize;
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = || Error::MalformedLine {
            line: line_no,
            content: raw_line.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [begin, end, label] = fields.as_slice() else {
            return Err(malformed());
        };
        let begin: usize = begin.parse().map_err(|_| malformed())?;
        let end: usize = end.parse().map_err(|_| malformed())?;
        if begin >= end || begin < prev_end {
            return Err(Error::NonMonotonicSpans { line: line_no });
        }
        prev_end = end;
        entries.push(PhoneSpan {
            begin,
            end,
            label: (*label).to_string(),
        });
    }
    Ok(ReferenceLabels { entries })
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<ReferenceLabels> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &ReferenceLabels) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, labels.to_phn_string()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wav_bytes(samples: &[i16], rate: u32, bits: u16, channels: u16) -> Vec<u8> {
        let spec = hound::WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: bits,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cur = Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut cur, spec).unwrap();
            for &s in samples {
                match bits {
                    8 => w.write_sample(s as i8).unwrap(),
                    _ => w.write_sample(s).unwrap(),
                }
            }
            w.finalize().unwrap();
        }
        cur.into_inner()
    }

    pub(crate) fn sphere_bytes(fields: &[&str], payload: &[u8]) -> Vec<u8> {
        let mut header = String::from("NIST_1A\n   1024\n");
        for f in fields {
            header.push_str(f);
            header.push('\n');
        }
        header.push_str("end_head\n");
        let mut bytes = header.into_bytes();
        bytes.resize(1024, b' ');
        bytes.extend_from_slice(payload);
        bytes
    }

    #[test]
    fn silent_wav_decodes_to_zeros() {
        let bytes = wav_bytes(&vec![0; 16000], 16000, 16, 1);
        let raw = decode_audio(&bytes, AudioFormat::Auto).unwrap();
        assert_eq!(raw.len(), 16000);
        assert_eq!(raw.sample_rate(), 16000);
        assert_eq!(raw.channels(), 1);
        assert!(raw.samples().iter().all(|&s| s == 0));
    }

    #[test]
    fn eight_bit_wav_is_unsupported() {
        let bytes = wav_bytes(&[1, 2, 3], 16000, 8, 1);
        let err = decode_audio(&bytes, AudioFormat::Wav).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn stereo_wav_is_rejected() {
        let bytes = wav_bytes(&[1, 2, 3, 4], 16000, 16, 2);
        let err = decode_audio(&bytes, AudioFormat::Auto).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn float_wav_is_non_pcm() {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut cur = Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut cur, spec).unwrap();
            w.write_sample(0.5f32).unwrap();
            w.finalize().unwrap();
        }
        let err = decode_audio(&cur.into_inner(), AudioFormat::Auto).unwrap_err();
        assert!(matches!(err, Error::NonPcmEncoding(_)));
    }

    #[test]
    fn truncated_wav_is_corrupt() {
        let bytes = wav_bytes(&[1; 100], 16000, 16, 1);
        let err = decode_audio(&bytes[..30], AudioFormat::Wav).unwrap_err();
        assert!(matches!(err, Error::CorruptHeader(_)), "{err:?}");
    }

    #[test]
    fn unknown_magic_is_unsupported() {
        let err = decode_audio(b"OggS......", AudioFormat::Auto).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn sphere_both_byte_orders() {
        let samples: Vec<i16> = vec![0, 1, -1, 300, -32768, 32767, 12345];
        let le: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        let be: Vec<u8> = samples.iter().flat_map(|s| s.to_be_bytes()).collect();
        let common = [
            "sample_count -i 7",
            "sample_rate -i 16000",
            "channel_count -i 1",
            "sample_n_bytes -i 2",
            "sample_coding -s3 pcm",
        ];
        let mut f = common.to_vec();
        f.push("sample_byte_format -s2 01");
        let raw = decode_audio(&sphere_bytes(&f, &le), AudioFormat::Auto).unwrap();
        assert_eq!(raw.samples(), samples.as_slice());

        let mut f = common.to_vec();
        f.push("sample_byte_format -s2 10");
        let raw = decode_audio(&sphere_bytes(&f, &be), AudioFormat::Sphere).unwrap();
        assert_eq!(raw.samples(), samples.as_slice());
    }

    #[test]
    fn sphere_uses_declared_sample_count() {
        let payload: Vec<u8> = (0..20i16).flat_map(|s| s.to_le_bytes()).collect();
        let f = [
            "sample_count -i 12",
            "sample_rate -i 16000",
            "sample_n_bytes -i 2",
            "sample_byte_format -s2 01",
        ];
        let raw = decode_audio(&sphere_bytes(&f, &payload), AudioFormat::Auto).unwrap();
        assert_eq!(raw.len(), 12);
        assert_eq!(raw.samples()[11], 11);
    }

    #[test]
    fn sphere_errors() {
        let payload = [0u8; 8];
        let shorten = [
            "sample_rate -i 16000",
            "sample_n_bytes -i 2",
            "sample_coding -s26 pcm,embedded-shorten-v2.00",
        ];
        assert!(matches!(
            decode_audio(&sphere_bytes(&shorten, &payload), AudioFormat::Auto),
            Err(Error::NonPcmEncoding(_))
        ));
        let ulaw = [
            "sample_rate -i 8000",
            "sample_n_bytes -i 1",
            "sample_coding -s4 ulaw",
        ];
        assert!(matches!(
            decode_audio(&sphere_bytes(&ulaw, &payload), AudioFormat::Auto),
            Err(Error::NonPcmEncoding(_))
        ));
        let short = [
            "sample_count -i 100",
            "sample_rate -i 16000",
            "sample_n_bytes -i 2",
        ];
        assert!(matches!(
            decode_audio(&sphere_bytes(&short, &payload), AudioFormat::Auto),
            Err(Error::CorruptHeader(_))
        ));
        let mut no_end = b"NIST_1A\n   1024\nsample_rate -i 16000\n".to_vec();
        no_end.resize(1030, b' ');
        assert!(matches!(
            decode_audio(&no_end, AudioFormat::Auto),
            Err(Error::CorruptHeader(_))
        ));
    }

    #[test]
    fn sphere_matches_wav_decode_of_same_samples() {
        let samples: Vec<i16> = (0..500).map(|i| ((i * 97) % 2001 - 1000) as i16).collect();
        let wav = decode_audio(&wav_bytes(&samples, 16000, 16, 1), AudioFormat::Auto).unwrap();
        let payload: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        let f = [
            "sample_count -i 500",
            "sample_rate -i 16000",
            "channel_count -i 1",
            "sample_n_bytes -i 2",
            "sample_byte_format -s2 01",
        ];
        let sph = decode_audio(&sphere_bytes(&f, &payload), AudioFormat::Auto).unwrap();
        assert_eq!(wav, sph);
    }

    #[test]
    fn low_rate_rejected() {
        assert!(RawAudio::new(vec![1, 2], 4000).is_err());
        assert!(RawAudio::new(vec![], 16000).is_err());
    }

    #[test]
    fn constant_signal_is_degenerate() {
        let raw = RawAudio::new(vec![5; 100], 16000).unwrap();
        assert!(matches!(normalize(&raw), Err(Error::DegenerateSignal)));
    }

    #[test]
    fn zero_mean_input_is_peak_scaled() {
        let raw = RawAudio::new(vec![0, 2, 0, -2], 16000).unwrap();
        assert_eq!(normalize(&raw).unwrap().samples(), &[0.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn half_gain_is_cancelled() {
        let x: Vec<i16> = vec![10, -4, 6, 100, -88, 2];
        let half: Vec<i16> = x.iter().map(|v| v / 2).collect();
        let a = normalize(&RawAudio::new(x, 16000).unwrap()).unwrap();
        let b = normalize(&RawAudio::new(half, 16000).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quantizer_examples() {
        assert_eq!(quantize_sample(1.0), 32640);
        assert_eq!(32767 & !127, 32640);
        assert_eq!(quantize_sample(0.0), 0);
        assert_eq!(quantize_sample(100.0 / PCM_SCALE), 0);
        assert_eq!(quantize_sample(-1.0), -32640);
        assert_eq!(quantize_sample(200.0 / PCM_SCALE), 128);
        assert_eq!(quantize_sample(-255.0 / PCM_SCALE), -128);
    }

    #[test]
    fn label_parsing() {
        let l = parse_labels("0 2400 h#\n2400 4000 sh").unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.entries()[1].label, "sh");
        assert_eq!(l.boundaries(), vec![2400]);

        assert!(matches!(
            parse_labels("0 2400 h#\n2000 4000 sh"),
            Err(Error::NonMonotonicSpans { line: 2 })
        ));
        assert!(matches!(
            parse_labels("0 10 a\nten 20 b"),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_labels("0 10"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(parse_labels("").unwrap().is_empty());
        assert!(parse_labels("").unwrap().boundaries().is_empty());
    }

    #[test]
    fn gapped_labels_report_both_edges() {
        let l = parse_labels("0 10 a\n20 30 b\n30 40 c\n").unwrap();
        assert_eq!(l.boundaries(), vec![10, 20, 30]);
    }

    #[test]
    fn labels_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.phn");
        let l = parse_labels("0 100 h#\n100 250 s\n250 900 iy\n").unwrap();
        write_labels(&p, &l).unwrap();
        assert_eq!(load_labels(&p).unwrap(), l);
        assert!(matches!(
            load_labels(dir.path().join("missing.phn")),
            Err(Error::NotFound(_))
        ));
    }

    fn arb_raw() -> impl Strategy<Value = Vec<i16>> {
        prop::collection::vec(-8000i16..8000, 2..400)
            .prop_filter("non-constant", |v| v.iter().any(|&x| x != v[0]))
    }

    proptest! {
        #[test]
        fn gain_and_dc_invariance(x in arb_raw(), gain in 1i16..4, dc in -4000i16..4000) {
            let base = normalize(&RawAudio::new(x.clone(), 16000).unwrap()).unwrap();
            let scaled: Vec<i16> = x.iter().map(|&v| v * gain).collect();
            let shifted: Vec<i16> = x.iter().map(|&v| v + dc).collect();
            prop_assert_eq!(&normalize(&RawAudio::new(scaled, 16000).unwrap()).unwrap(), &base);
            prop_assert_eq!(&normalize(&RawAudio::new(shifted, 16000).unwrap()).unwrap(), &base);

            let peak = base.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert_eq!(peak, 1.0);
            let mean = base.samples().iter().sum::<f64>() / base.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }

        #[test]
        fn quantizer_is_idempotent_on_grid(steps in prop::collection::vec(-255i32..=255, 1..200)) {
            let grid: Vec<i32> = steps.iter().map(|s| s * QUANT_STEP).collect();
            let u = Utterance::from_samples(grid.iter().map(|&q| q as f64 / PCM_SCALE).collect(), 16000);
            let q = quantize_9bit(&u);
            prop_assert_eq!(q.qsamples(), grid.as_slice());
        }

        #[test]
        fn quantized_values_on_grid(x in prop::collection::vec(-1.0f64..=1.0, 1..200)) {
            let q = quantize_9bit(&Utterance::from_samples(x, 16000));
            for &v in q.qsamples() {
                prop_assert_eq!(v % QUANT_STEP, 0);
                prop_assert!(v.abs() <= 1 << 15);
            }
        }

        #[test]
        fn labels_text_round_trip(lens in prop::collection::vec((1usize..500, 0usize..3), 0..30)) {
            let names = ["h#", "sh", "iy"];
            let mut at = 0;
            let entries = lens.iter().map(|&(len, k)| {
                let e = PhoneSpan { begin: at, end: at + len, label: names[k].to_string() };
                at += len;
                e
            }).collect();
            let l = ReferenceLabels::new(entries).unwrap();
            prop_assert_eq!(parse_labels(&l.to_phn_string()).unwrap(), l);
        }
    }
}
