//! Regenerates the bundled test corpora and a small BPE tokenizer learned
//! from them.
//!
//! ```text
//! cargo run -p curricula --example gen_corpus -- crates/core/tests/data
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use curricula::corpus::{write_jsonl, Document};
use curricula::metrics::WORD_BOUNDARY;
use curricula::synth::SynthConfig;

const MERGES: usize = 400;

/// Classic merge learning over word frequencies; ties go to the
/// lexicographically smallest pair so the output is reproducible.
fn learn_bpe(docs: &[Document]) -> (BTreeMap<String, u32>, Vec<(String, String)>) {
    let mut freq: HashMap<Vec<String>, u64> = HashMap::new();
    for d in docs {
        for w in d.text.split_whitespace() {
            let syms = std::iter::once(WORD_BOUNDARY)
                .chain(w.chars())
                .map(String::from)
                .collect();
            *freq.entry(syms).or_insert(0) += 1;
        }
    }
    let mut words: Vec<(Vec<String>, u64)> = freq.into_iter().collect();
    words.sort();
    let mut vocab: BTreeMap<String, u32> = BTreeMap::new();
    for (syms, _) in &words {
        for s in syms {
            vocab.entry(s.clone()).or_insert(0);
        }
    }
    let mut merges = Vec::new();
    for _ in 0..MERGES {
        let mut pairs: HashMap<(&str, &str), u64> = HashMap::new();
        for (syms, n) in &words {
            for p in syms.windows(2) {
                *pairs.entry((&p[0], &p[1])).or_insert(0) += n;
            }
        }
        let Some(((a, b), _)) = pairs
            .into_iter()
            .max_by(|x, y| x.1.cmp(&y.1).then_with(|| y.0.cmp(&x.0)))
        else {
            break;
        };
        let (a, b) = (a.to_owned(), b.to_owned());
        let merged = format!("{a}{b}");
        for (syms, _) in words.iter_mut() {
            let mut i = 0;
            while i + 1 < syms.len() {
                if syms[i] == a && syms[i + 1] == b {
                    syms[i] = merged.clone();
                    syms.remove(i + 1);
                }
                i += 1;
            }
        }
        vocab.insert(merged, 0);
        merges.push((a, b));
    }
    for (id, v) in vocab.values_mut().enumerate() {
        *v = id as u32;
    }
    (vocab, merges)
}

fn main() -> curricula::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "crates/core/tests/data".into()),
    );
    std::fs::create_dir_all(&out).map_err(|e| curricula::Error::io(&out, e))?;

    let golden = SynthConfig::new(20_240_601)
        .words(40, 320)
        .short_doc_rate(0.04)
        .docs(200, "golden");
    write_jsonl(&out.join("golden.jsonl"), &golden)?;

    let sample = SynthConfig::new(500).docs(500, "sample");
    write_jsonl(&out.join("sample500.jsonl"), &sample)?;

    let mut all = golden.clone();
    all.extend(sample.iter().cloned());
    let (vocab, merges) = learn_bpe(&all);
    let vocab_json = serde_json::to_string_pretty(&vocab).expect("serializable") + "\n";
    let path = out.join("bpe_vocab.json");
    std::fs::write(&path, vocab_json).map_err(|e| curricula::Error::io(&path, e))?;
    let merges_txt: String = merges.iter().map(|(a, b)| format!("{a} {b}\n")).collect();
    let path = out.join("bpe_merges.txt");
    std::fs::write(&path, format!("# {MERGES} merges\n{merges_txt}")).map_err(|e| curricula::Error::io(&path, e))?;

    println!(
        "wrote {} + {} documents and a {}-token BPE vocabulary to {}",
        golden.len(),
        sample.len(),
        vocab.len(),
        out.display()
    );
    Ok(())
}
