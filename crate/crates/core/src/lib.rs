//! Core of a pinyin-IME noise simulator for Chinese spelling correction.
//!
//! Correct sentences are "retyped" through a simulated pinyin input method
//! whose candidate ranking comes from a character n-gram model; the wrong
//! candidates that get picked become spelling errors. The crate also holds
//! the error tagger, a correct-sentence filter and the evaluation metrics.
//!
//! `no_std` with `alloc`; file IO and the command line live in `cscime`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

use alloc::collections::BTreeSet;

pub mod filter;
pub mod ime;
pub mod lexicon;
pub mod lm;
pub mod metrics;
pub mod noise;
pub mod pinyin;
pub mod tagger;

#[cfg(test)]
mod testdata;

pub use filter::{CharCategory, FilterReport, LmProbabilityProvider, ProbabilityProvider, Route, Thresholds};
pub use ime::{Candidate, CandidateList, Ime};
pub use lexicon::{Lexicon, LexiconEntry, LexiconError};
pub use lm::{LmError, NGramModel};
pub use metrics::{EvalExample, MetricReport, Prf};
pub use noise::{ErrorSpan, Generator, Granularity, NoiseConfig, Outcome, RunReport, SentencePair};
pub use pinyin::{CharReadings, FuzzyRuleSet, PinyinError, PinyinScheme, PinyinSeq, PinyinTag, Syllable};
pub use tagger::{DistributionReport, SemanticTag, TaggedError, Tagger};

/// CJK unified ideographs, basic block and extension A.
pub fn is_cjk(c: char) -> bool {
    matches!(c, '\u{4E00}'..='\u{9FFF}' | '\u{3400}'..='\u{4DBF}')
}

/// Function characters whose errors are tagged and filtered separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialChars(BTreeSet<char>);

impl SpecialChars {
    pub const DEFAULT: &'static str = "他她它的地得";

    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Self {
        SpecialChars(chars.into_iter().filter(|c| !c.is_whitespace() && *c != ',').collect())
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for SpecialChars {
    fn default() -> Self {
        SpecialChars::from_chars(SpecialChars::DEFAULT.chars())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cjk_ranges() {
        assert!(is_cjk('在') && is_cjk('\u{3400}') && is_cjk('\u{9FFF}'));
        assert!(!is_cjk('a') && !is_cjk('，') && !is_cjk('\u{4DC0}'));
    }

    #[test]
    fn special_default() {
        let s = SpecialChars::default();
        assert_eq!(s.len(), 6);
        assert!(s.contains('得') && !s.contains('在'));
        assert_eq!(SpecialChars::from_chars("的, 地".chars()).len(), 2);
    }
}
