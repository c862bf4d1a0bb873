//! Pinyin-level and semantic-level error tags, and corpus distributions.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::pinyin::{CharReadings, PinyinScheme, PinyinTag};
use crate::SpecialChars;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("source has {source_len} characters but target has {target_len}")]
    LengthMismatch { source_len: usize, target_len: usize },
    #[error("segmentation does not concatenate to the target sentence")]
    Segmentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticTag {
    EntityWord,
    NormalWord,
    SpecialChar,
    NormalChar,
}

impl SemanticTag {
    pub const ALL: [SemanticTag; 4] =
        [SemanticTag::EntityWord, SemanticTag::NormalWord, SemanticTag::SpecialChar, SemanticTag::NormalChar];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticTag::EntityWord => "entity_word",
            SemanticTag::NormalWord => "normal_word",
            SemanticTag::SpecialChar => "special_char",
            SemanticTag::NormalChar => "normal_char",
        }
    }

    // Entity > Special > NormalWord > NormalChar
    fn precedence(self) -> u8 {
        match self {
            SemanticTag::EntityWord => 0,
            SemanticTag::SpecialChar => 1,
            SemanticTag::NormalWord => 2,
            SemanticTag::NormalChar => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedError {
    pub offset: usize,
    pub wrong: char,
    pub correct: char,
    pub pinyin_tag: PinyinTag,
    pub semantic_tag: SemanticTag,
    pub enclosing_correct_word: String,
    pub enclosing_wrong_word: String,
    /// Character range of the enclosing word.
    pub word_start: usize,
    pub word_end: usize,
}

impl TaggedError {
    pub fn word_range(&self) -> Range<usize> {
        self.word_start..self.word_end
    }
}

/// Pinyin relation of two characters, using the closest pair of readings.
/// Characters without readings relate as dissimilar.
pub fn char_pair_tag(scheme: &PinyinScheme, readings: &CharReadings, correct: char, wrong: char) -> PinyinTag {
    if correct == wrong {
        return PinyinTag::SamePinyin;
    }
    match (readings.get(correct), readings.get(wrong)) {
        (Some(c), Some(w)) => scheme.best_tag(c, w).unwrap_or(PinyinTag::DissimilarPinyin),
        _ => PinyinTag::DissimilarPinyin,
    }
}

/// Everything the tagger needs.
#[derive(Debug, Clone, Copy)]
pub struct Tagger<'a> {
    pub scheme: &'a PinyinScheme,
    pub readings: &'a CharReadings,
    pub lexicon: &'a Lexicon,
    pub special: &'a SpecialChars,
}

impl<'a> Tagger<'a> {
    /// One tagged error per differing character position.
    pub fn tag_pair(&self, source: &str, target: &str) -> Result<Vec<TaggedError>, TagError> {
        let src: Vec<char> = source.chars().collect();
        let tgt: Vec<char> = target.chars().collect();
        if src.len() != tgt.len() {
            return Err(TagError::LengthMismatch { source_len: src.len(), target_len: tgt.len() });
        }
        if src == tgt {
            return Ok(Vec::new());
        }
        let words = self.lexicon.segment_spans(target);
        Ok(self.tag_spans(&src, &tgt, words))
    }

    /// Like [`Tagger::tag_pair`] with the target's word segmentation supplied
    /// by the caller instead of forward maximum matching.
    pub fn tag_pair_segmented(
        &self,
        source: &str,
        target: &str,
        target_tokens: &[&str],
    ) -> Result<Vec<TaggedError>, TagError> {
        let src: Vec<char> = source.chars().collect();
        let tgt: Vec<char> = target.chars().collect();
        if src.len() != tgt.len() {
            return Err(TagError::LengthMismatch { source_len: src.len(), target_len: tgt.len() });
        }
        if target_tokens.iter().any(|t| t.is_empty()) || target_tokens.concat() != target {
            return Err(TagError::Segmentation);
        }
        let mut start = 0;
        let words = target_tokens
            .iter()
            .map(|t| {
                let r = start..start + t.chars().count();
                start = r.end;
                r
            })
            .collect();
        Ok(self.tag_spans(&src, &tgt, words))
    }

    fn tag_spans(&self, src: &[char], tgt: &[char], words: Vec<Range<usize>>) -> Vec<TaggedError> {
        let mut out = Vec::new();
        for word in words {
            for i in word.clone() {
                if src[i] == tgt[i] {
                    continue;
                }
                let correct_word: String = tgt[word.clone()].iter().collect();
                let wrong_word: String = src[word.clone()].iter().collect();
                let semantic = if self.lexicon.is_entity(&correct_word) {
                    SemanticTag::EntityWord
                } else if self.special.contains(tgt[i]) {
                    SemanticTag::SpecialChar
                } else if word.len() >= 2 && self.lexicon.contains(&wrong_word) {
                    SemanticTag::NormalWord
                } else {
                    SemanticTag::NormalChar
                };
                out.push(TaggedError {
                    offset: i,
                    wrong: src[i],
                    correct: tgt[i],
                    pinyin_tag: char_pair_tag(self.scheme, self.readings, tgt[i], src[i]),
                    semantic_tag: semantic,
                    enclosing_correct_word: correct_word,
                    enclosing_wrong_word: wrong_word,
                    word_start: word.start,
                    word_end: word.end,
                });
            }
        }
        out
    }
}

/// Raw counts for one counting unit; percentages derive from these.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagCounts {
    pub pinyin: [u64; 4],
    pub semantic: [u64; 4],
    pub total: u64,
}

impl TagCounts {
    pub fn add(&mut self, p: PinyinTag, s: SemanticTag) {
        self.pinyin[p.index()] += 1;
        self.semantic[s.index()] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, o: &TagCounts) {
        for i in 0..4 {
            self.pinyin[i] += o.pinyin[i];
            self.semantic[i] += o.semantic[i];
        }
        self.total += o.total;
    }

    /// `None` when there is nothing to divide by.
    pub fn pinyin_pct(&self, tag: PinyinTag) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.pinyin[tag.index()] as f64 / self.total as f64)
    }

    pub fn semantic_pct(&self, tag: SemanticTag) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.semantic[tag.index()] as f64 / self.total as f64)
    }
}

/// Error distribution counted per character and per enclosing word. In the
/// word counting, errors inside one corrected word form a single unit tagged
/// with its least similar pinyin tag and highest-precedence semantic tag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub pairs: u64,
    pub by_char: TagCounts,
    pub by_word: TagCounts,
}

impl DistributionReport {
    pub fn add_pair(&mut self, errors: &[TaggedError]) {
        self.pairs += 1;
        let mut i = 0;
        while i < errors.len() {
            let mut j = i;
            let mut p = errors[i].pinyin_tag;
            let mut s = errors[i].semantic_tag;
            while j < errors.len() && errors[j].word_start == errors[i].word_start {
                self.by_char.add(errors[j].pinyin_tag, errors[j].semantic_tag);
                p = p.max(errors[j].pinyin_tag);
                if errors[j].semantic_tag.precedence() < s.precedence() {
                    s = errors[j].semantic_tag;
                }
                j += 1;
            }
            self.by_word.add(p, s);
            i = j;
        }
    }

    pub fn merge(&mut self, o: &DistributionReport) {
        self.pairs += o.pairs;
        self.by_char.merge(&o.by_char);
        self.by_word.merge(&o.by_word);
    }
}

/// Aggregates already-tagged pairs.
pub fn distribution<'e, I>(pairs: I) -> DistributionReport
where
    I: IntoIterator<Item = &'e [TaggedError]>,
{
    let mut r = DistributionReport::default();
    for p in pairs {
        r.add_pair(p);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::{lexicon, readings, scheme};

    fn tag(source: &str, target: &str) -> Vec<TaggedError> {
        let (s, r, l) = (scheme(), readings(), lexicon());
        let sp = SpecialChars::default();
        Tagger { scheme: &s, readings: &r, lexicon: &l, special: &sp }.tag_pair(source, target).unwrap()
    }

    #[test]
    fn semantic_examples() {
        let e = tag("卢山", "庐山");
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].offset, e[0].semantic_tag), (0, SemanticTag::EntityWord));
        assert_eq!(e[0].pinyin_tag, PinyinTag::SamePinyin);

        let e = tag("开心的旅游", "开心地旅游");
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].correct, e[0].semantic_tag), ('地', SemanticTag::SpecialChar));

        let e = tag("开心地驴友", "开心地旅游");
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|x| x.semantic_tag == SemanticTag::NormalWord));
        assert_eq!(e[0].enclosing_wrong_word, "驴友");

        let e = tag("开心地旅有", "开心地旅游");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].semantic_tag, SemanticTag::NormalChar);
    }

    #[test]
    fn supplied_segmentation() {
        let (s, r, l) = (scheme(), readings(), lexicon());
        let sp = SpecialChars::default();
        let t = Tagger { scheme: &s, readings: &r, lexicon: &l, special: &sp };
        let fmm = t.tag_pair("开心地驴友", "开心地旅游").unwrap();
        assert_eq!(t.tag_pair_segmented("开心地驴友", "开心地旅游", &["开心", "地", "旅游"]).unwrap(), fmm);
        // split into characters, the wrong side is no longer a word error
        let split = t.tag_pair_segmented("开心地驴友", "开心地旅游", &["开心", "地", "旅", "游"]).unwrap();
        assert!(split.iter().all(|e| e.semantic_tag == SemanticTag::NormalChar));
        assert_eq!(t.tag_pair_segmented("开心地驴友", "开心地旅游", &["开心", "旅游"]), Err(TagError::Segmentation));
        assert_eq!(t.tag_pair_segmented("开心地驴友", "开心地旅游", &["开心地旅游", ""]), Err(TagError::Segmentation));
    }

    #[test]
    fn pinyin_examples() {
        let p = |w: &str| tag(&alloc::format!("现{w}"), "现在")[0].pinyin_tag;
        assert_eq!(p("再"), PinyinTag::SamePinyin);
        assert_eq!(p("宅"), PinyinTag::FuzzyPinyin);
        assert_eq!(p("砸"), PinyinTag::SimilarPinyin);
        assert_eq!(p("太"), PinyinTag::DissimilarPinyin);
    }

    #[test]
    fn errors_and_empty() {
        let (s, r, l) = (scheme(), readings(), lexicon());
        let sp = SpecialChars::default();
        let t = Tagger { scheme: &s, readings: &r, lexicon: &l, special: &sp };
        assert_eq!(t.tag_pair("现在", "现"), Err(TagError::LengthMismatch { source_len: 2, target_len: 1 }));
        assert_eq!(t.tag_pair("现在", "现在"), Ok(Vec::new()));
    }

    #[test]
    fn distribution_percentages() {
        let one = tag("开心地旅有", "开心地旅游");
        let r = distribution([one.as_slice()]);
        assert_eq!(r.by_char.pinyin_pct(PinyinTag::SamePinyin), Some(100.0));
        assert_eq!(r.by_char.semantic_pct(SemanticTag::NormalChar), Some(100.0));

        let a = tag("现再", "现在");
        let b = tag("开心地旅有", "开心地旅游");
        let c = tag("现太", "现在");
        let r = distribution([a.as_slice(), b.as_slice(), c.as_slice()]);
        let same = r.by_char.pinyin_pct(PinyinTag::SamePinyin).unwrap();
        let dis = r.by_char.pinyin_pct(PinyinTag::DissimilarPinyin).unwrap();
        assert!((same - 200.0 / 3.0).abs() < 1e-9 && (dis - 100.0 / 3.0).abs() < 1e-9);

        let empty = distribution(core::iter::empty());
        assert_eq!(empty.by_char.pinyin_pct(PinyinTag::SamePinyin), None);
    }

    #[test]
    fn word_counting_groups_characters() {
        let e = tag("开心地驴友", "开心地旅游");
        let r = distribution([e.as_slice()]);
        assert_eq!(r.by_char.total, 2);
        assert_eq!(r.by_word.total, 1);
        assert_eq!(r.by_word.semantic[SemanticTag::NormalWord.index()], 1);
    }
}
