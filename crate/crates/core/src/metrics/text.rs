//! Word, sentence and syllable counting shared by the readability formulas.

use std::collections::HashSet;

use super::MetricId;
use crate::{Error, Result};

/// Surface counts of a document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TextStats {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    /// Alphabetic characters.
    pub characters: usize,
    /// Words of three or more syllables.
    pub complex_words: usize,
    /// Words absent from the Dale–Chall list; `None` when no list was loaded.
    pub difficult_words: Option<usize>,
    /// Subword tokens under the configured tokenizer.
    pub tokens: usize,
}

impl TextStats {
    pub fn from_text(text: &str, dale_chall: Option<&WordList>) -> Self {
        let mut stats = TextStats {
            sentences: count_sentences(text),
            characters: text.chars().filter(|c| c.is_alphabetic()).count(),
            difficult_words: dale_chall.map(|_| 0),
            ..Default::default()
        };
        let mut lower = String::new();
        for word in words(text) {
            stats.words += 1;
            lower.clear();
            lower.extend(word.chars().flat_map(char::to_lowercase));
            let syl = syllable_count(&lower);
            stats.syllables += syl;
            if syl >= 3 {
                stats.complex_words += 1;
            }
            if let (Some(list), Some(d)) = (dale_chall, stats.difficult_words.as_mut()) {
                if lower.chars().any(char::is_alphabetic) && !list.contains(&lower) {
                    *d += 1;
                }
            }
        }
        if stats.words > 0 && stats.sentences == 0 {
            stats.sentences = 1;
        }
        stats
    }

    pub fn with_tokens(mut self, tokens: usize) -> Self {
        self.tokens = tokens;
        self
    }

    pub(crate) fn require_words(&self, metric: MetricId) -> Result<()> {
        if self.words == 0 {
            return Err(Error::degenerate(metric, "no words"));
        }
        if self.sentences == 0 {
            return Err(Error::degenerate(metric, "no sentences"));
        }
        Ok(())
    }
}

/// Whitespace-separated pieces with leading and trailing punctuation removed.
/// Pieces with no alphanumeric character are skipped.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
}

/// Lowercased [`words`], the token stream used by the lexical-diversity metrics.
pub fn word_tokens(text: &str) -> Vec<String> {
    words(text).map(str::to_lowercase).collect()
}

/// Sentences end at `.`, `!` or `?` followed by whitespace or end of text.
/// Segments without any alphanumeric character are not counted.
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut has_content = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_alphanumeric() {
            has_content = true;
        } else if matches!(c, '.' | '!' | '?') {
            let at_boundary = chars.peek().is_none_or(|n| n.is_whitespace());
            if at_boundary && has_content {
                count += 1;
                has_content = false;
            }
        }
    }
    if has_content {
        count += 1;
    }
    count
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable heuristic.
///
/// Counts maximal runs of `aeiouy`, drops a trailing silent `e` except in a
/// consonant + `le` ending, and never returns less than one. Non-ASCII letters
/// count as consonants. Expects lowercase input.
pub fn syllable_count(word: &str) -> usize {
    let mut groups = 0;
    let mut prev_vowel = false;
    for c in word.chars() {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let bytes = word.as_bytes();
    if groups > 1 && bytes.last() == Some(&b'e') {
        let consonant_le = bytes.len() >= 3
            && bytes[bytes.len() - 2] == b'l'
            && !is_vowel(bytes[bytes.len() - 3] as char)
            && bytes[bytes.len() - 3].is_ascii_alphabetic();
        if !consonant_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Lowercase word list, one word per line.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    words: HashSet<String>,
}

pub(crate) const DALE_CHALL_EASY_WORDS: &str = include_str!("../../data/dale_chall_easy_words.txt");

impl WordList {
    pub fn parse(contents: &str) -> Self {
        let words = contents
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        WordList { words }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&contents))
    }

    /// The bundled Dale–Chall list of familiar words.
    pub fn dale_chall() -> Self {
        Self::parse(DALE_CHALL_EASY_WORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllables() {
        assert_eq!(syllable_count("cat"), 1);
        assert_eq!(syllable_count("table"), 2);
        assert_eq!(syllable_count("rhythm"), 1);
        assert_eq!(syllable_count("the"), 1);
        assert_eq!(syllable_count("make"), 1);
        assert_eq!(syllable_count("people"), 2);
        assert_eq!(syllable_count("whole"), 1);
        assert_eq!(syllable_count("beautiful"), 3);
        assert_eq!(syllable_count("1990"), 1);
        assert_eq!(syllable_count("naïve"), 1);
    }

    #[test]
    fn sentences() {
        assert_eq!(count_sentences("The cat sat on the mat."), 1);
        assert_eq!(count_sentences("One. Two! Three? Four"), 4);
        assert_eq!(count_sentences("Version 1.5 is out. Yes"), 2);
        assert_eq!(count_sentences("Wait?! Yes."), 2);
        assert_eq!(count_sentences("no terminator"), 1);
        assert_eq!(count_sentences("... !"), 0);
    }

    #[test]
    fn cat_sentence_stats() {
        let s = TextStats::from_text("The cat sat on the mat.", None);
        assert_eq!((s.words, s.sentences, s.syllables), (6, 1, 6));
        assert_eq!(s.characters, 17);
        assert_eq!(s.complex_words, 0);
        assert_eq!(s.difficult_words, None);
    }

    #[test]
    fn dale_chall_counts_unfamiliar_words() {
        let list = WordList::dale_chall();
        assert!(list.len() > 2900);
        let s = TextStats::from_text("The cat sat on the photosynthesis.", Some(&list));
        assert_eq!(s.difficult_words, Some(1));
    }

    #[test]
    fn complex_never_exceeds_words() {
        let s = TextStats::from_text("Extraordinary administrative responsibilities everywhere.", None);
        assert!(s.complex_words <= s.words);
        assert_eq!(s.words, 4);
    }
}
