//! Deterministic synthetic corpora with controllable difficulty.
//!
//! Each document draws a latent difficulty `z` that sets both the mean
//! sentence length and the share of long, uncommon words, and an independent
//! predictability `q`: the chance that a word is the fixed successor of the
//! previous one rather than a uniform draw. Readability therefore tracks `z`
//! while n-gram perplexity tracks `q`.
//!
//! Distributions `A` and `B` use disjoint familiar-word lists, different
//! invented long words and different successor tables. `Shifted` keeps the
//! vocabulary of `A` with its own successor tables.

use std::collections::HashSet;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Document;
use crate::metrics::text::{syllable_count, DALE_CHALL_EASY_WORDS};
use crate::rng::stream;

const CLASS_SIZE: usize = 250;
const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const CODAS: &[u8] = b"nrstl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    A,
    B,
    Shifted,
}

impl Distribution {
    fn index(self) -> usize {
        match self {
            Distribution::A => 0,
            Distribution::B => 1,
            Distribution::Shifted => 2,
        }
    }

    fn vocabulary(self) -> usize {
        match self {
            Distribution::B => 1,
            _ => 0,
        }
    }
}

struct Lexicon {
    /// `classes[0]` familiar short words, `classes[1]` invented long words.
    classes: [Vec<String>; 2],
    /// `successor[class][w]`: index in `class` following word `w`, where `w`
    /// indexes the concatenation of both classes.
    successor: [Vec<u16>; 2],
}

impl Lexicon {
    fn build(dist: Distribution) -> Lexicon {
        let parity = dist.vocabulary();
        let simple: Vec<String> = DALE_CHALL_EASY_WORDS
            .lines()
            .map(str::trim)
            .filter(|w| (3..=7).contains(&w.len()) && w.bytes().all(|b| b.is_ascii_lowercase()))
            .filter(|w| syllable_count(w) <= 2)
            .skip(parity)
            .step_by(2)
            .step_by(3)
            .take(CLASS_SIZE)
            .map(str::to_owned)
            .collect();
        assert_eq!(simple.len(), CLASS_SIZE, "bundled word list too small");

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + parity as u64);
        let mut seen = HashSet::new();
        let mut complex = Vec::with_capacity(CLASS_SIZE);
        while complex.len() < CLASS_SIZE {
            let syllables = rng.random_range(3..=5);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
                w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
            }
            w.push(CODAS[rng.random_range(0..CODAS.len())] as char);
            if seen.insert(w.clone()) {
                complex.push(w);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1000 + dist.index() as u64);
        let total = 2 * CLASS_SIZE;
        let successor = [0, 1].map(|_| (0..total).map(|_| rng.random_range(0..CLASS_SIZE) as u16).collect());
        Lexicon {
            classes: [simple, complex],
            successor,
        }
    }

    fn get(dist: Distribution) -> &'static Lexicon {
        static CELLS: [OnceLock<Lexicon>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        CELLS[dist.index()].get_or_init(|| Lexicon::build(dist))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub distribution: Distribution,
    pub min_words: usize,
    pub max_words: usize,
    /// Share of documents with 1 to 6 words.
    pub short_doc_rate: f64,
}

impl SynthConfig {
    pub fn new(seed: u64) -> Self {
        SynthConfig {
            seed,
            distribution: Distribution::A,
            min_words: 60,
            max_words: 400,
            short_doc_rate: 0.0,
        }
    }

    pub fn distribution(mut self, d: Distribution) -> Self {
        self.distribution = d;
        self
    }

    pub fn words(mut self, min: usize, max: usize) -> Self {
        self.min_words = min.max(1);
        self.max_words = max.max(self.min_words);
        self
    }

    pub fn short_doc_rate(mut self, r: f64) -> Self {
        self.short_doc_rate = r;
        self
    }

    /// Text of document `index`; depends only on the config and the index.
    pub fn text(&self, index: usize) -> String {
        let lex = Lexicon::get(self.distribution);
        let mut rng = stream(self.seed, 0x5157_0000 + self.distribution.index() as u32, index as u32);
        let z: f64 = rng.random();
        let q: f64 = rng.random_range(0.05..0.95);
        let n_words = if rng.random_bool(self.short_doc_rate.clamp(0.0, 1.0)) {
            rng.random_range(1..=6)
        } else {
            rng.random_range(self.min_words..=self.max_words)
        };
        let mean_len = 5.0 + 20.0 * z;
        let complex_share = 0.02 + 0.4 * z;

        let mut out = String::with_capacity(n_words * 8);
        let mut prev: Option<usize> = None;
        let mut written = 0;
        while written < n_words {
            let len = ((mean_len * rng.random_range(0.7..1.3)).round() as usize).clamp(1, n_words - written);
            for _ in 0..len {
                let class = usize::from(rng.random_bool(complex_share));
                let w = match prev {
                    Some(p) if rng.random_bool(q) => lex.successor[class][p] as usize,
                    _ => rng.random_range(0..CLASS_SIZE),
                };
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(&lex.classes[class][w]);
                prev = Some(class * CLASS_SIZE + w);
            }
            out.push_str(" .");
            written += len;
        }
        out
    }

    pub fn doc(&self, index: usize, prefix: &str) -> Document {
        Document::new(format!("{prefix}-{index:06}"), self.text(index))
    }

    pub fn docs(&self, n: usize, prefix: &str) -> Vec<Document> {
        (0..n).into_par_iter().map(|i| self.doc(i, prefix)).collect()
    }

    /// Generates documents until their text reaches `bytes` in total.
    pub fn docs_until_bytes(&self, bytes: usize, prefix: &str) -> Vec<Document> {
        let mut out = Vec::new();
        let mut total = 0;
        const BATCH: usize = 4096;
        while total < bytes {
            let start = out.len();
            let batch: Vec<Document> = (start..start + BATCH)
                .into_par_iter()
                .map(|i| self.doc(i, prefix))
                .collect();
            for d in batch {
                if total >= bytes {
                    break;
                }
                total += d.text.len();
                out.push(d);
            }
        }
        out
    }
}
