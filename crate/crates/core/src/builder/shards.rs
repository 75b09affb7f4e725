use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::OrderManifest;
use crate::corpus::{read_jsonl, write_file, write_jsonl, Document};
use crate::{Error, Result};

/// Sidecar written next to the shards.
pub const SHARD_MANIFEST: &str = "manifest.json";

/// Writes the manifest order as JSONL shards of about `shard_tokens` tokens.
///
/// A shard closes once it holds at least `shard_tokens` tokens, so the last
/// document of a shard may overshoot. Every id is resolved before anything
/// is written.
pub fn emit_shards(
    manifest: &OrderManifest,
    docs: &[Document],
    shard_tokens: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if shard_tokens == 0 {
        return Err(Error::Config("shard size must be positive".into()));
    }
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let resolved: Vec<&Document> = manifest
        .sequence
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Integrity(format!("document `{id}` from the manifest is not in the corpus")))
        })
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut paths = Vec::new();
    let mut shard: Vec<Document> = Vec::new();
    let mut tokens = 0u64;
    let mut flush = |shard: &mut Vec<Document>| -> Result<()> {
        let path = out_dir.join(format!("shard-{:05}.jsonl", paths.len()));
        write_jsonl(&path, shard)?;
        paths.push(path);
        shard.clear();
        Ok(())
    };
    for (doc, &t) in resolved.iter().zip(&manifest.token_counts) {
        shard.push((*doc).clone());
        tokens += t;
        if tokens >= shard_tokens {
            flush(&mut shard)?;
            tokens = 0;
        }
    }
    if !shard.is_empty() {
        flush(&mut shard)?;
    }
    let sidecar = out_dir.join(SHARD_MANIFEST);
    write_file(&sidecar, manifest.to_json().as_bytes())?;
    Ok(paths)
}

/// Reads shards back in order.
pub fn read_shards(paths: &[PathBuf]) -> Result<Vec<Document>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_jsonl(p)?);
    }
    Ok(out)
}
