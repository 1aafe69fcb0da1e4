//! Discovery of audio files and their phone labels under a directory tree.

use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::evaluation::{EvalConfig, EvalCounts, PhoneClassMap};
use crate::pipeline::{segment, PipelineConfig};
use crate::signal_io::{load_audio, load_labels, AudioFormat};

const AUDIO_EXTENSIONS: [&str; 2] = ["wav", "sph"];
const LABEL_EXTENSIONS: [&str; 2] = ["phn", "PHN"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusItem {
    /// Path relative to the corpus root, without the audio extension, using
    /// `/` as separator.
    pub id: String,
    pub audio: PathBuf,
    pub labels: Option<PathBuf>,
}

fn is_audio(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| AUDIO_EXTENSIONS.iter().any(|a| a.eq_ignore_ascii_case(e)))
}

/// Finds every audio file under `root`, sorted by id.
///
/// A converted copy such as `SA1.WAV.wav` next to `SA1.WAV` is skipped in
/// favour of the original.
pub fn discover(root: impl AsRef<Path>) -> Result<Vec<CorpusItem>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let mut items = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || !is_audio(path) {
            continue;
        }
        let stem = path.with_extension("");
        if is_audio(&stem) && stem.is_file() {
            continue;
        }
        let labels = LABEL_EXTENSIONS
            .iter()
            .map(|ext| stem.with_extension(ext))
            .find(|p| p.is_file());
        let rel = stem.strip_prefix(root).unwrap_or(&stem);
        let id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        items.push(CorpusItem {
            id,
            audio: path.to_path_buf(),
            labels,
        });
    }
    items.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(items)
}

/// Segments one item and scores it against its labels.
pub fn evaluate_item(
    item: &CorpusItem,
    cfg: &PipelineConfig,
    map: &PhoneClassMap,
    eval: &EvalConfig,
) -> Result<EvalCounts> {
    let labels_path = item
        .labels
        .as_ref()
        .ok_or_else(|| Error::NotFound(item.audio.with_extension("phn")))?;
    let labels = load_labels(labels_path)?;
    let raw = load_audio(&item.audio, AudioFormat::Auto)?;
    let seg = segment(&raw, cfg, &item.id)?;
    Ok(EvalCounts::score(&seg, &labels, map, eval))
}
