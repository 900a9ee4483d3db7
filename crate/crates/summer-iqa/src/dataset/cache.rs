//! Sidecar score cache keyed by (metric id, image content hashes), so
//! re-running evaluation variants does not re-score unchanged images.
//!
//! Format (internal, versioned): a `summer-iqa-score-cache v1` header line,
//! then tab-separated `metric  ref_hash:dist_hash  score_bits_hex` lines.
//! Scores round-trip through their exact f64 bit patterns.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::{IqaError, Result};
use crate::metric::MetricId;
use crate::raster::RasterImage;

const HEADER: &str = "summer-iqa-score-cache v1";

/// Hash of decoded image content (dimensions plus raw samples), so the same
/// pixels hash alike regardless of container format.
pub fn content_hash(img: &RasterImage) -> String {
    let mut hasher = Sha256::new();
    hasher.update((img.width() as u64).to_le_bytes());
    hasher.update((img.height() as u64).to_le_bytes());
    for plane in img.planes() {
        for &sample in plane.samples() {
            hasher.update(sample.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// In-memory view of the sidecar; safe for concurrent insertion of distinct
/// keys during a parallel scoring pass.
pub struct ScoreCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, f64>>,
    dirty: Mutex<bool>,
}

impl ScoreCache {
    /// Opens (or initializes) a cache file. A missing file is an empty
    /// cache; a file with a foreign header is rejected.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        match fs::read_to_string(&path) {
            Ok(text) => {
                let mut lines = text.lines();
                match lines.next() {
                    Some(HEADER) => {}
                    Some(other) => {
                        return Err(IqaError::Format {
                            path,
                            detail: format!("unrecognized cache header '{other}'"),
                        })
                    }
                    None => {}
                }
                for line in lines {
                    let mut fields = line.split('\t');
                    let (Some(metric), Some(key), Some(bits)) =
                        (fields.next(), fields.next(), fields.next())
                    else {
                        continue; // tolerate truncated trailing line
                    };
                    if let Ok(bits) = u64::from_str_radix(bits, 16) {
                        entries.insert(format!("{metric}\t{key}"), f64::from_bits(bits));
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(IqaError::io(&path, e)),
        }
        Ok(ScoreCache {
            path,
            entries: Mutex::new(entries),
            dirty: Mutex::new(false),
        })
    }

    fn key(metric: MetricId, ref_hash: &str, dist_hash: &str) -> String {
        format!("{}\t{ref_hash}:{dist_hash}", metric.name())
    }

    pub fn get(&self, metric: MetricId, ref_hash: &str, dist_hash: &str) -> Option<f64> {
        self.entries
            .lock()
            .unwrap()
            .get(&Self::key(metric, ref_hash, dist_hash))
            .copied()
    }

    pub fn insert(&self, metric: MetricId, ref_hash: &str, dist_hash: &str, score: f64) {
        self.entries
            .lock()
            .unwrap()
            .insert(Self::key(metric, ref_hash, dist_hash), score);
        *self.dirty.lock().unwrap() = true;
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the cache back via a temp file and rename; entries are sorted
    /// so the file is deterministic.
    pub fn persist(&self) -> Result<()> {
        if !*self.dirty.lock().unwrap() {
            return Ok(());
        }
        let entries = self.entries.lock().unwrap();
        let mut lines: Vec<String> = entries
            .iter()
            .map(|(key, &score)| format!("{key}\t{:016x}", score.to_bits()))
            .collect();
        lines.sort();
        let mut body = String::with_capacity(lines.len() * 90 + 32);
        body.push_str(HEADER);
        body.push('\n');
        for line in lines {
            body.push_str(&line);
            body.push('\n');
        }
        let tmp = self.path.with_extension("tmp");
        fs::write(&tmp, body).map_err(|e| IqaError::io(&tmp, e))?;
        fs::rename(&tmp, &self.path).map_err(|e| IqaError::io(&self.path, e))
    }
}
