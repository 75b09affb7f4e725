//! JSONL corpus ingest, manifests and score tables.

mod table;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use table::{read_scores, write_scores, ScoreRow, ScoreTable};

use crate::metrics::Tokenizer;
use crate::{Error, Result};

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }

    pub fn byte_len(&self) -> usize {
        self.text.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub shard_paths: Vec<PathBuf>,
    pub doc_count: usize,
    pub token_count: u64,
    pub tokenizer_id: String,
    pub content_hash: String,
    pub malformed_count: usize,
    pub duplicate_count: usize,
    pub empty_count: usize,
}

impl CorpusManifest {
    pub fn to_json(&self) -> String {
        canonical_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }
}

/// Documents in ingest order plus their manifest.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub manifest: CorpusManifest,
}

impl Corpus {
    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index().get(id).map(|&i| &self.documents[i])
    }

    pub fn index(&self) -> std::collections::HashMap<&str, usize> {
        self.documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect()
    }
}

#[derive(Debug, Default)]
struct ShardRead {
    docs: Vec<Document>,
    malformed: usize,
    empty: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
}

fn read_shard(path: &Path) -> Result<ShardRead> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = ShardRead::default();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawRecord>(&line) {
            Ok(r) if r.id.is_empty() => {
                log::warn!("{}:{}: empty id", path.display(), lineno + 1);
                out.malformed += 1;
            }
            Ok(r) if r.text.trim().is_empty() => out.empty += 1,
            Ok(r) => out.docs.push(Document::new(r.id, r.text)),
            Err(e) => {
                log::warn!("{}:{}: malformed record: {e}", path.display(), lineno + 1);
                out.malformed += 1;
            }
        }
    }
    Ok(out)
}

/// SHA-256 over length-prefixed `(id, text)` pairs in order.
pub fn content_hash(docs: &[Document]) -> String {
    let mut h = Sha256::new();
    for d in docs {
        h.update((d.id.len() as u64).to_le_bytes());
        h.update(d.id.as_bytes());
        h.update((d.text.len() as u64).to_le_bytes());
        h.update(d.text.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Reads JSONL shards into a corpus.
///
/// Shards are read in parallel and merged in the given order. Malformed
/// lines and empty texts are counted and skipped; duplicate ids keep the
/// first occurrence.
pub fn ingest(paths: &[PathBuf], tokenizer: &Tokenizer) -> Result<Corpus> {
    let shards: Vec<ShardRead> = paths.par_iter().map(|p| read_shard(p)).collect::<Result<_>>()?;

    let mut seen = HashSet::new();
    let mut documents = Vec::new();
    let (mut malformed, mut empty, mut duplicates) = (0, 0, 0);
    for shard in shards {
        malformed += shard.malformed;
        empty += shard.empty;
        for doc in shard.docs {
            if seen.insert(doc.id.clone()) {
                documents.push(doc);
            } else {
                duplicates += 1;
            }
        }
    }
    if duplicates > 0 {
        log::warn!("{duplicates} duplicate document id(s) dropped, first occurrence kept");
    }
    if malformed > 0 {
        log::warn!("{malformed} malformed line(s) skipped");
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let token_count = documents.par_iter().map(|d| tokenizer.count(&d.text) as u64).sum();
    let manifest = CorpusManifest {
        shard_paths: paths.to_vec(),
        doc_count: documents.len(),
        token_count,
        tokenizer_id: tokenizer.id(),
        content_hash: content_hash(&documents),
        malformed_count: malformed,
        duplicate_count: duplicates,
        empty_count: empty,
    };
    Ok(Corpus { documents, manifest })
}

/// Reads JSONL strictly: any malformed line is an error.
pub fn read_jsonl(path: &Path) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("{}:{}", path.display(), lineno + 1), e.to_string()))?;
        docs.push(Document::new(r.id, r.text));
    }
    Ok(docs)
}

pub fn write_jsonl(path: &Path, docs: &[Document]) -> Result<()> {
    let mut buf = Vec::new();
    for d in docs {
        serde_json::to_writer(&mut buf, d).expect("in-memory serialization");
        buf.push(b'\n');
    }
    write_file(path, &buf)
}

/// Pretty JSON with keys sorted at every level.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable value");
    s.push('\n');
    s
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
