//! Whitespace and greedy merge-rank BPE tokenizers.

use std::path::{Path, PathBuf};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Marks the start of every word after the first, so word boundaries
/// survive subword splitting.
pub const WORD_BOUNDARY: char = '\u{2581}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Whitespace,
    Bpe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub kind: TokenizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merges_path: Option<PathBuf>,
}

impl TokenizerSpec {
    pub fn whitespace() -> Self {
        TokenizerSpec {
            kind: TokenizerKind::Whitespace,
            vocab_path: None,
            merges_path: None,
        }
    }

    pub fn bpe(vocab: impl Into<PathBuf>, merges: impl Into<PathBuf>) -> Self {
        TokenizerSpec {
            kind: TokenizerKind::Bpe,
            vocab_path: Some(vocab.into()),
            merges_path: Some(merges.into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, &self.vocab_path, &self.merges_path) {
            (TokenizerKind::Whitespace, None, None) => Ok(()),
            (TokenizerKind::Whitespace, _, _) => Err(Error::Config(
                "whitespace tokenizer takes no vocab or merges file".into(),
            )),
            (TokenizerKind::Bpe, Some(_), Some(_)) => Ok(()),
            (TokenizerKind::Bpe, _, _) => Err(Error::Config(
                "bpe tokenizer requires both a vocab and a merges file".into(),
            )),
        }
    }

    pub fn load(&self) -> Result<Tokenizer> {
        self.validate()?;
        match self.kind {
            TokenizerKind::Whitespace => Ok(Tokenizer::Whitespace),
            TokenizerKind::Bpe => {
                let vocab = self.vocab_path.as_deref().expect("validated");
                let merges = self.merges_path.as_deref().expect("validated");
                Ok(Tokenizer::Bpe(Bpe::load(vocab, merges)?))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Tokenizer {
    Whitespace,
    Bpe(Bpe),
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
            Tokenizer::Bpe(bpe) => bpe.encode(text),
        }
    }

    /// Same as `tokenize(text).len()` without materializing the tokens.
    pub fn count(&self, text: &str) -> usize {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().count(),
            Tokenizer::Bpe(bpe) => bpe.count(text),
        }
    }

    /// Stable identifier: `whitespace`, or `bpe:` plus a digest of the tables.
    pub fn id(&self) -> String {
        match self {
            Tokenizer::Whitespace => "whitespace".into(),
            Tokenizer::Bpe(bpe) => format!("bpe:{}", &bpe.digest[..16]),
        }
    }
}

/// Byte-pair encoder with a fixed merge table.
///
/// Symbols are interned: every vocab entry, merge operand and merge result
/// gets a symbol id, so merging works on `(u32, u32)` pairs.
#[derive(Debug, Clone)]
pub struct Bpe {
    symbols: Vec<String>,
    in_vocab: Vec<bool>,
    by_str: FxHashMap<String, u32>,
    by_char: FxHashMap<char, u32>,
    merges: FxHashMap<(u32, u32), (u32, u32)>,
    digest: String,
}

#[derive(Clone, Copy)]
enum Sym {
    Known(u32),
    Raw(char),
}

impl Bpe {
    pub fn new(vocab: FxHashMap<String, u32>, merges: Vec<(String, String)>) -> Self {
        let mut h = Sha256::new();
        let mut entries: Vec<_> = vocab.iter().collect();
        entries.sort();
        for (tok, id) in &entries {
            h.update(tok.as_bytes());
            h.update([0]);
            h.update(id.to_le_bytes());
        }
        h.update(b"\x01merges");
        for (a, b) in &merges {
            h.update(a.as_bytes());
            h.update([0]);
            h.update(b.as_bytes());
            h.update([0]);
        }
        let mut bpe = Bpe {
            symbols: Vec::new(),
            in_vocab: Vec::new(),
            by_str: FxHashMap::default(),
            by_char: FxHashMap::default(),
            merges: FxHashMap::default(),
            digest: hex::encode(h.finalize()),
        };
        for (tok, _) in entries {
            let id = bpe.intern(tok);
            bpe.in_vocab[id as usize] = true;
        }
        for (rank, (a, b)) in merges.into_iter().enumerate() {
            let merged = format!("{a}{b}");
            let (a, b, m) = (bpe.intern(&a), bpe.intern(&b), bpe.intern(&merged));
            bpe.merges.entry((a, b)).or_insert((rank as u32, m));
        }
        bpe
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.by_str.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_owned());
        self.in_vocab.push(false);
        self.by_str.insert(s.to_owned(), id);
        let mut chars = s.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            self.by_char.insert(c, id);
        }
        id
    }

    /// Vocab is a JSON object `token -> id`; merges are `left right` lines,
    /// rank given by line order. Blank lines and `#` comments are skipped.
    pub fn load(vocab_path: &Path, merges_path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(vocab_path).map_err(|e| Error::io(vocab_path, e))?;
        let vocab: FxHashMap<String, u32> =
            serde_json::from_str(&raw).map_err(|e| Error::format(vocab_path.display().to_string(), e.to_string()))?;
        let raw = std::fs::read_to_string(merges_path).map_err(|e| Error::io(merges_path, e))?;
        let mut merges = Vec::new();
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => merges.push((a.to_owned(), b.to_owned())),
                _ => {
                    return Err(Error::format(
                        merges_path.display().to_string(),
                        format!("line {}: expected `left right`", lineno + 1),
                    ))
                }
            }
        }
        Ok(Self::new(vocab, merges))
    }

    fn merge_word(&self, word: impl Iterator<Item = char>, syms: &mut Vec<Sym>) {
        syms.clear();
        syms.extend(word.map(|c| match self.by_char.get(&c) {
            Some(&id) => Sym::Known(id),
            None => Sym::Raw(c),
        }));
        loop {
            let mut best: Option<(u32, usize, u32)> = None;
            for i in 0..syms.len().saturating_sub(1) {
                if let (Sym::Known(a), Sym::Known(b)) = (syms[i], syms[i + 1]) {
                    if let Some(&(rank, merged)) = self.merges.get(&(a, b)) {
                        if best.is_none_or(|(r, _, _)| rank < r) {
                            best = Some((rank, i, merged));
                        }
                    }
                }
            }
            let Some((_, i, merged)) = best else { break };
            syms[i] = Sym::Known(merged);
            syms.remove(i + 1);
        }
    }

    fn words<'a>(text: &'a str) -> impl Iterator<Item = (bool, &'a str)> + 'a {
        text.split_whitespace().enumerate().map(|(i, w)| (i > 0, w))
    }

    fn chars_of(boundary: bool, w: &str) -> impl Iterator<Item = char> + '_ {
        boundary.then_some(WORD_BOUNDARY).into_iter().chain(w.chars())
    }

    pub fn encode(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut syms = Vec::new();
        for (boundary, w) in Self::words(text) {
            self.merge_word(Self::chars_of(boundary, w), &mut syms);
            for &sym in &syms {
                match sym {
                    Sym::Known(id) if self.in_vocab[id as usize] => out.push(self.symbols[id as usize].clone()),
                    Sym::Known(id) => out.extend(self.symbols[id as usize].bytes().map(|b| format!("<0x{b:02X}>"))),
                    Sym::Raw(c) => {
                        let mut buf = [0u8; 4];
                        out.extend(c.encode_utf8(&mut buf).bytes().map(|b| format!("<0x{b:02X}>")))
                    }
                }
            }
        }
        out
    }

    pub fn count(&self, text: &str) -> usize {
        let mut n = 0;
        let mut syms = Vec::new();
        for (boundary, w) in Self::words(text) {
            self.merge_word(Self::chars_of(boundary, w), &mut syms);
            n += syms
                .iter()
                .map(|&sym| match sym {
                    Sym::Known(id) if self.in_vocab[id as usize] => 1,
                    Sym::Known(id) => self.symbols[id as usize].len(),
                    Sym::Raw(c) => c.len_utf8(),
                })
                .sum::<usize>();
        }
        n
    }
}
