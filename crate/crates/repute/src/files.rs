//! On-disk formats: profiles, few-shot examples, references, mappings,
//! baseline items and JSONL streams.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use repute_core::eval::{BaselineItem, MatchMapping, OverlapLink, Provenance, ReferenceSet};
use repute_core::{CelebrityProfile, FewShotExample};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl FileError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    fn format(path: &Path, message: impl ToString) -> Self {
        Self::Format { path: path.into(), message: message.to_string() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a file's bytes, or of nothing when the file is absent.
pub fn file_digest(path: &Path) -> String {
    match fs::read(path) {
        Ok(bytes) => sha256_hex(&bytes),
        Err(_) => sha256_hex(b""),
    }
}

/// Write through a sibling temporary file and rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    static SEQ: AtomicU64 = AtomicU64::new(0);
    let seq = SEQ.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_file_name(format!(".{name}.{}.{seq}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| FileError::format(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), FileError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| FileError::format(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(|e| FileError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| FileError::format(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), FileError> {
    write_atomic(path, to_jsonl(items).as_bytes()).map_err(|e| FileError::io(path, e))
}

/// Profiles file: a JSON list of profiles, each validated on load.
pub fn load_profiles(path: &Path) -> Result<Vec<CelebrityProfile>, FileError> {
    let profiles: Vec<CelebrityProfile> = read_json(path)?;
    for p in &profiles {
        p.validate().map_err(|e| FileError::format(path, format!("{}: {e}", p.canonical_name)))?;
    }
    Ok(profiles)
}

/// Few-shot file: a JSON list of `{text, label}`.
pub fn load_examples(path: &Path) -> Result<Vec<FewShotExample>, FileError> {
    read_json(path)
}

/// Reference file: `{celebrity: {items: [...], celebrity_label?}}`.
pub fn load_references(path: &Path) -> Result<BTreeMap<String, ReferenceSet>, FileError> {
    let mut sets: BTreeMap<String, ReferenceSet> = read_json(path)?;
    for (name, set) in sets.iter_mut() {
        set.celebrity = name.clone();
    }
    Ok(sets)
}

/// One celebrity's entry in the mapping file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub provenance: Provenance,
    /// `[system aspect, reference aspect]` pairs.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    /// Links from our aspects to baseline item positions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlap: Vec<OverlapLink>,
}

impl MappingEntry {
    pub fn mapping(&self) -> MatchMapping {
        MatchMapping { pairs: self.pairs.clone(), provenance: self.provenance }
    }
}

/// Mapping file: `{celebrity: {provenance, pairs, overlap?}}`.
pub fn load_mappings(path: &Path) -> Result<BTreeMap<String, MappingEntry>, FileError> {
    read_json(path)
}

/// Baseline file: `{celebrity: [{aspect, impression, reason}]}`.
pub fn load_baseline(path: &Path) -> Result<BTreeMap<String, Vec<BaselineItem>>, FileError> {
    read_json(path)
}

/// File-safe name for a celebrity: ASCII words joined by `-`, or a digest
/// prefix for names without ASCII letters.
pub fn slug(name: &str) -> String {
    let words: Vec<String> = name
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_ascii_lowercase)
        .collect();
    if words.is_empty() {
        format!("p-{}", &sha256_hex(name.as_bytes())[..12])
    } else {
        words.join("-")
    }
}
