//! Count cache: per-frame co-occurrence matrices keyed by input content.
//!
//! The key hashes the archive bytes, the labels bytes, the vocabulary cap,
//! and the granularity list. Scoring knobs (alpha, beta, percentile, top_k)
//! stay out of the key on purpose: rescoring cached counts is the point.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::InfluenceClass;
use crate::error::{Error, Result};
use crate::graph::{read_cooc_triplets, read_vocab, write_cooc_triplets, write_vocab};
use crate::graph::{CoocMatrix, Vocabulary};

/// Bumped whenever the on-disk layout changes; part of the cache key.
const FORMAT_VERSION: u32 = 1;

const MANIFEST_FILE: &str = "manifest.json";
const VOCAB_FILE: &str = "vocab.txt";

/// One (class, granularity) stack of per-frame count files, in frame order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackEntry {
    pub user_class: String,
    pub granularity_days: u32,
    pub frame_files: Vec<String>,
}

/// Index of everything the cache holds for one detect run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheManifest {
    pub version: u32,
    pub key: String,
    pub origin: i64,
    pub n_terms: u32,
    pub stacks: Vec<StackEntry>,
}

/// Content hash of the counting inputs. Streams both files, so large
/// archives hash without loading into memory.
pub fn cache_key(
    archive: &Path,
    labels: &Path,
    vocab_size: usize,
    granularities: &[u32],
) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(FORMAT_VERSION.to_le_bytes());
    hash_file(&mut hasher, archive)?;
    hash_file(&mut hasher, labels)?;
    hasher.update((vocab_size as u64).to_le_bytes());
    hasher.update((granularities.len() as u64).to_le_bytes());
    for g in granularities {
        hasher.update(g.to_le_bytes());
    }
    Ok(format!("{:x}", hasher.finalize()))
}

fn hash_file(hasher: &mut Sha256, path: &Path) -> Result<()> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(())
}

/// Writer for a fresh cache directory. Frames are added as they are
/// counted; `finish` stamps the manifest last, so a crash mid-write never
/// leaves a manifest pointing at missing files.
pub struct CacheWriter {
    dir: PathBuf,
    manifest: CacheManifest,
}

impl CacheWriter {
    pub fn create(
        dir: &Path,
        key: String,
        origin: i64,
        vocab: &Vocabulary,
    ) -> Result<CacheWriter> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stale = dir.join(MANIFEST_FILE);
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
        }
        write_vocab(vocab, &dir.join(VOCAB_FILE))?;
        Ok(CacheWriter {
            dir: dir.to_path_buf(),
            manifest: CacheManifest {
                version: FORMAT_VERSION,
                key,
                origin,
                n_terms: vocab.len() as u32,
                stacks: Vec::new(),
            },
        })
    }

    /// Persists one (class, granularity) stack of frame matrices.
    pub fn add_stack(
        &mut self,
        class: InfluenceClass,
        granularity_days: u32,
        frames: &[CoocMatrix],
    ) -> Result<()> {
        let mut files = Vec::with_capacity(frames.len());
        for m in frames {
            let name = format!(
                "cooc_{}_{}d_{:05}.txt",
                class.as_str().to_lowercase(),
                granularity_days,
                m.frame_id
            );
            write_cooc_triplets(m, &self.dir.join(&name))?;
            files.push(name);
        }
        self.manifest.stacks.push(StackEntry {
            user_class: class.as_str().to_string(),
            granularity_days,
            frame_files: files,
        });
        Ok(())
    }

    pub fn finish(self) -> Result<CacheManifest> {
        let path = self.dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::data(format!("manifest encode: {e}")))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
    }
}

/// Handle on an existing cache directory.
pub struct CacheReader {
    dir: PathBuf,
    pub manifest: CacheManifest,
}

impl CacheReader {
    /// Loads the manifest if the directory holds one; `None` means an
    /// empty or never-written cache.
    pub fn open(dir: &Path) -> Result<Option<CacheReader>> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let manifest: CacheManifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        if manifest.version != FORMAT_VERSION {
            return Ok(None);
        }
        Ok(Some(CacheReader { dir: dir.to_path_buf(), manifest }))
    }

    pub fn vocab(&self) -> Result<Vocabulary> {
        read_vocab(&self.dir.join(VOCAB_FILE))
    }

    /// The cached (class, granularity) stacks in manifest order.
    pub fn stack_index(&self) -> Vec<(InfluenceClass, u32)> {
        self.manifest
            .stacks
            .iter()
            .filter_map(|s| {
                let class = match s.user_class.as_str() {
                    "IDI" => InfluenceClass::Idi,
                    "MDI" => InfluenceClass::Mdi,
                    _ => return None,
                };
                Some((class, s.granularity_days))
            })
            .collect()
    }

    /// Reads every frame matrix of one stack, in frame order.
    pub fn read_stack(&self, class: InfluenceClass, granularity_days: u32) -> Result<Vec<CoocMatrix>> {
        let entry = self
            .manifest
            .stacks
            .iter()
            .find(|s| s.user_class == class.as_str() && s.granularity_days == granularity_days)
            .ok_or_else(|| {
                Error::data(format!(
                    "cache has no counts for class {} at granularity {}",
                    class.as_str(),
                    granularity_days
                ))
            })?;
        entry.frame_files.iter().map(|f| read_cooc_triplets(&self.dir.join(f))).collect()
    }

    /// Granularities present in the cache, ascending and deduplicated.
    pub fn granularities(&self) -> Vec<u32> {
        let set: BTreeMap<u32, ()> =
            self.manifest.stacks.iter().map(|s| (s.granularity_days, ())).collect();
        set.into_keys().collect()
    }
}
