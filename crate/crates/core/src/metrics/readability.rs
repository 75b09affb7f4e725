//! Published readability formulas over [`TextStats`].

use super::{MetricId, TextStats};
use crate::{Error, Result, Scalar};

fn ratio<F: Scalar>(a: usize, b: usize) -> F {
    F::count(a) / F::count(b)
}

/// Flesch Reading Ease. Higher means easier.
pub fn flesch_reading_ease<F: Scalar>(s: &TextStats) -> Result<F> {
    s.require_words(MetricId::FleschReadingEase)?;
    Ok(F::lit(206.835)
        - F::lit(1.015) * ratio::<F>(s.words, s.sentences)
        - F::lit(84.6) * ratio::<F>(s.syllables, s.words))
}

/// Grade-level and index formulas of the readability family.
///
/// `which` must be one of the readability metrics; Flesch Reading Ease is
/// accepted too and forwards to [`flesch_reading_ease`].
pub fn readability_family<F: Scalar>(s: &TextStats, which: MetricId) -> Result<F> {
    s.require_words(which)?;
    let wps = ratio::<F>(s.words, s.sentences);
    let hundred = F::lit(100.0);
    let value = match which {
        MetricId::FleschReadingEase => return flesch_reading_ease(s),
        MetricId::FkGrade => F::lit(0.39) * wps + F::lit(11.8) * ratio::<F>(s.syllables, s.words) - F::lit(15.59),
        MetricId::ColemanLiau => {
            let letters = ratio::<F>(s.characters, s.words) * hundred;
            let sentences = ratio::<F>(s.sentences, s.words) * hundred;
            F::lit(0.0588) * letters - F::lit(0.296) * sentences - F::lit(15.8)
        }
        MetricId::Ari => F::lit(4.71) * ratio::<F>(s.characters, s.words) + F::lit(0.5) * wps - F::lit(21.43),
        MetricId::GunningFog => F::lit(0.4) * (wps + hundred * ratio::<F>(s.complex_words, s.words)),
        MetricId::Smog => {
            let per30 = F::count(s.complex_words) * F::lit(30.0) / F::count(s.sentences);
            F::lit(1.0430) * per30.sqrt() + F::lit(3.1291)
        }
        MetricId::DaleChall => {
            let difficult = s
                .difficult_words
                .ok_or_else(|| Error::Config("dale_chall requested but no Dale–Chall word list is loaded".into()))?;
            let pct = hundred * ratio::<F>(difficult, s.words);
            let raw = F::lit(0.1579) * pct + F::lit(0.0496) * wps;
            if pct > F::lit(5.0) {
                raw + F::lit(3.6365)
            } else {
                raw
            }
        }
        MetricId::LinsearWrite => {
            let hard = s.complex_words;
            let easy = s.words - hard;
            let r = F::count(easy + 3 * hard) / F::count(s.sentences);
            if r > F::lit(20.0) {
                r / F::lit(2.0)
            } else {
                (r - F::lit(2.0)) / F::lit(2.0)
            }
        }
        other => return Err(Error::Config(format!("{other} is not a readability formula"))),
    };
    Ok(value)
}
