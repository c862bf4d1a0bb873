//! Pseudo-data generation by simulated pinyin typing.
//!
//! For each correct sentence: draw the number of errors, and for each error a
//! token granularity and a pinyin relation; type the selected token's
//! (possibly mutated) pinyin after the correct prefix, take the IME's pick as
//! the noise, splice it in, and keep the result only if the language model
//! finds it sufficiently less fluent than the original.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ime::Ime;
use crate::is_cjk;
use crate::lm::NGramModel;
use crate::pinyin::{CharReadings, PinyinSeq, PinyinTag};
use crate::tagger::char_pair_tag;

/// How many token choices one error gets before the attempt is abandoned.
const PLACEMENT_TRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Word,
    Char,
}

/// Probabilities over the four pinyin relations, in [`PinyinTag::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinyinDist {
    pub same: f64,
    pub fuzzy: f64,
    pub similar: f64,
    pub dissimilar: f64,
}

impl PinyinDist {
    pub fn weights(&self) -> [f64; 4] {
        [self.same, self.fuzzy, self.similar, self.dissimilar]
    }

    pub fn get(&self, tag: PinyinTag) -> f64 {
        self.weights()[tag.index()]
    }
}

impl Default for PinyinDist {
    fn default() -> Self {
        PinyinDist { same: 0.824, fuzzy: 0.08, similar: 0.074, dissimilar: 0.022 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenDist {
    pub word: f64,
    pub char: f64,
}

impl Default for TokenDist {
    fn default() -> Self {
        TokenDist { word: 0.4, char: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub pinyin_dist: PinyinDist,
    pub token_dist: TokenDist,
    /// (number of errors, probability)
    pub num_dist: Vec<(u32, f64)>,
    /// Minimum relative perplexity increase; a pair is kept only above it.
    pub delta: f64,
    pub max_attempts: u32,
    pub enable_lm_filter: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            pinyin_dist: PinyinDist::default(),
            token_dist: TokenDist::default(),
            num_dist: alloc::vec![(1, 0.91), (2, 0.09)],
            delta: 0.0,
            max_attempts: 10,
            enable_lm_filter: true,
        }
    }
}

/// A configuration problem, keyed by the offending config key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

fn check_dist(key: &str, probs: &[f64], out: &mut Vec<ConfigIssue>) {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        out.push(ConfigIssue { key: key.into(), message: "probabilities must be finite and >= 0".into() });
        return;
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        out.push(ConfigIssue { key: key.into(), message: alloc::format!("probabilities sum to {total}, expected 1") });
    }
}

impl NoiseConfig {
    /// Every violated constraint, keyed `noise.<field>`.
    pub fn validate(&self) -> Result<(), Vec<ConfigIssue>> {
        let mut out = Vec::new();
        check_dist("noise.pinyin_dist", &self.pinyin_dist.weights(), &mut out);
        check_dist("noise.token_dist", &[self.token_dist.word, self.token_dist.char], &mut out);
        if self.num_dist.is_empty() {
            out.push(ConfigIssue { key: "noise.num_dist".into(), message: "must not be empty".into() });
        } else {
            if self.num_dist.iter().any(|(n, _)| *n == 0) {
                out.push(ConfigIssue {
                    key: "noise.num_dist".into(),
                    message: "error counts must be positive integers".into(),
                });
            }
            let probs: Vec<f64> = self.num_dist.iter().map(|(_, p)| *p).collect();
            check_dist("noise.num_dist", &probs, &mut out);
        }
        if self.delta.is_nan() {
            out.push(ConfigIssue { key: "noise.delta".into(), message: "must be a number".into() });
        }
        if self.max_attempts == 0 {
            out.push(ConfigIssue { key: "noise.max_attempts".into(), message: "must be at least 1".into() });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSpan {
    /// 0-based character offset into the sentence.
    pub offset: usize,
    pub wrong: String,
    pub correct: String,
    pub pinyin_tag: PinyinTag,
    pub granularity: Granularity,
}

impl ErrorSpan {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.correct.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: String,
    pub target: String,
    pub spans: Vec<ErrorSpan>,
}

impl SentencePair {
    /// Checks the pair invariants: equal lengths, sorted non-overlapping
    /// spans, and differences exactly on the span ranges.
    pub fn check(&self) -> Result<(), String> {
        let src: Vec<char> = self.source.chars().collect();
        let tgt: Vec<char> = self.target.chars().collect();
        if src.len() != tgt.len() {
            return Err(alloc::format!("length {} != {}", src.len(), tgt.len()));
        }
        let mut covered = alloc::vec![false; src.len()];
        let mut last_end = 0;
        for (i, s) in self.spans.iter().enumerate() {
            let r = s.range();
            if s.wrong.chars().count() != r.len() || r.is_empty() {
                return Err(alloc::format!("span {i}: wrong and correct lengths differ"));
            }
            if s.wrong == s.correct {
                return Err(alloc::format!("span {i}: wrong equals correct"));
            }
            if i > 0 && r.start < last_end {
                return Err(alloc::format!("span {i}: overlapping or unsorted"));
            }
            if r.end > src.len() {
                return Err(alloc::format!("span {i}: out of range"));
            }
            let w: String = src[r.clone()].iter().collect();
            let c: String = tgt[r.clone()].iter().collect();
            if w != s.wrong || c != s.correct {
                return Err(alloc::format!("span {i}: text does not match the pair"));
            }
            covered[r.clone()].iter_mut().for_each(|x| *x = true);
            last_end = r.end;
        }
        for (i, (a, b)) in src.iter().zip(&tgt).enumerate() {
            if (a != b) != covered[i] {
                return Err(alloc::format!("position {i}: difference and span coverage disagree"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Emitted(SentencePair),
    /// The sentence has no CJK token that could carry noise.
    NoEligibleToken,
    /// No usable IME candidate within the attempt budget.
    NoCandidate,
    /// Every placement that reached the LM filter was rejected.
    FilteredByLm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub attempted: u64,
    pub emitted: u64,
    pub filtered_by_lm: u64,
    pub no_candidate: u64,
    pub no_eligible_token: u64,
}

impl RunReport {
    pub fn record(&mut self, outcome: &Outcome) {
        self.attempted += 1;
        match outcome {
            Outcome::Emitted(_) => self.emitted += 1,
            Outcome::FilteredByLm => self.filtered_by_lm += 1,
            Outcome::NoCandidate => self.no_candidate += 1,
            Outcome::NoEligibleToken => self.no_eligible_token += 1,
        }
    }

    pub fn rejected(&self) -> u64 {
        self.filtered_by_lm + self.no_candidate + self.no_eligible_token
    }

    pub fn merge(&mut self, other: &RunReport) {
        self.attempted += other.attempted;
        self.emitted += other.emitted;
        self.filtered_by_lm += other.filtered_by_lm;
        self.no_candidate += other.no_candidate;
        self.no_eligible_token += other.no_eligible_token;
    }
}

struct Token {
    range: Range<usize>,
    reading: PinyinSeq,
}

/// Generates noised pairs from correct sentences.
pub struct Generator<'a> {
    ime: Ime<'a>,
    readings: &'a CharReadings,
    filter_model: &'a NGramModel,
    config: NoiseConfig,
    tag_sampler: WeightedIndex<f64>,
    token_sampler: WeightedIndex<f64>,
    num_sampler: WeightedIndex<f64>,
}

impl<'a> Generator<'a> {
    /// `ime.model` ranks candidates; `filter_model` scores perplexity.
    pub fn new(
        ime: Ime<'a>,
        readings: &'a CharReadings,
        filter_model: &'a NGramModel,
        config: NoiseConfig,
    ) -> Result<Self, Vec<ConfigIssue>> {
        config.validate()?;
        let bad = |key: &str| alloc::vec![ConfigIssue { key: key.into(), message: "all weights are zero".into() }];
        let tag_sampler = WeightedIndex::new(config.pinyin_dist.weights()).map_err(|_| bad("noise.pinyin_dist"))?;
        let token_sampler = WeightedIndex::new([config.token_dist.word, config.token_dist.char])
            .map_err(|_| bad("noise.token_dist"))?;
        let num_sampler =
            WeightedIndex::new(config.num_dist.iter().map(|(_, p)| *p)).map_err(|_| bad("noise.num_dist"))?;
        Ok(Generator { ime, readings, filter_model, config, tag_sampler, token_sampler, num_sampler })
    }

    pub fn config(&self) -> &NoiseConfig {
        &self.config
    }

    fn sample_tag<R: Rng + ?Sized>(&self, rng: &mut R) -> PinyinTag {
        PinyinTag::ALL[self.tag_sampler.sample(rng)]
    }

    fn eligible(&self, sentence: &str, chars: &[char]) -> (Vec<Token>, Vec<Token>) {
        let lex = self.ime.lexicon;
        let mut words = Vec::new();
        for r in lex.segment_spans(sentence) {
            if r.len() < 2 || !chars[r.clone()].iter().all(|c| is_cjk(*c)) {
                continue;
            }
            let surface: String = chars[r.clone()].iter().collect();
            if let Some(e) = lex.get(&surface) {
                words.push(Token { range: r, reading: e.readings[0].clone() });
            }
        }
        let mut singles = Vec::new();
        for (i, c) in chars.iter().enumerate() {
            if !is_cjk(*c) {
                continue;
            }
            if let Some(r) = self.readings.get(*c).and_then(|r| r.first()) {
                singles.push(Token { range: i..i + 1, reading: r.clone() });
            }
        }
        (words, singles)
    }

    /// Tries to place one error of relation `tag`; returns the token range
    /// and the chosen surface.
    fn place<R: Rng + ?Sized>(
        &self,
        chars: &[char],
        noised: &[char],
        used: &[bool],
        tokens: &(Vec<Token>, Vec<Token>),
        tag: PinyinTag,
        rng: &mut R,
    ) -> Option<(Range<usize>, Vec<char>, Granularity)> {
        for _ in 0..PLACEMENT_TRIES {
            let granularity = if self.token_sampler.sample(rng) == 0 { Granularity::Word } else { Granularity::Char };
            let pool = match granularity {
                Granularity::Word => &tokens.0,
                Granularity::Char => &tokens.1,
            };
            let free: Vec<&Token> = pool.iter().filter(|t| !used[t.range.clone()].contains(&true)).collect();
            let Some(token) = free.choose(rng) else { continue };
            let Ok(typed_pinyin) = self.ime.scheme.mutate(&token.reading, tag, rng) else { continue };
            let correct: String = chars[token.range.clone()].iter().collect();
            let context: String = chars[..token.range.start].iter().collect();
            let fuzzy = tag == PinyinTag::FuzzyPinyin;
            let Some(typed) = self.ime.type_token(&context, &typed_pinyin, fuzzy, &correct, rng) else { continue };
            let wrong: Vec<char> = typed.surface.chars().collect();
            if wrong.len() != token.range.len() {
                continue;
            }
            // every changed character must carry exactly the sampled relation
            let consistent =
                token.range.clone().zip(&wrong).all(|(i, w)| {
                    noised[i] == *w || char_pair_tag(self.ime.scheme, self.readings, noised[i], *w) == tag
                });
            if consistent && wrong.iter().zip(&noised[token.range.clone()]).any(|(a, b)| a != b) {
                return Some((token.range.clone(), wrong, granularity));
            }
        }
        None
    }

    /// Runs the generation procedure on one correct sentence.
    pub fn generate_one<R: Rng + ?Sized>(&self, sentence: &str, rng: &mut R) -> Outcome {
        let chars: Vec<char> = sentence.chars().collect();
        let tokens = self.eligible(sentence, &chars);
        if tokens.0.is_empty() && tokens.1.is_empty() {
            return Outcome::NoEligibleToken;
        }
        let n = self.config.num_dist[self.num_sampler.sample(rng)].0 as usize;
        let mut tags: Vec<PinyinTag> = (0..n).map(|_| self.sample_tag(rng)).collect();
        let mut lm_rejected = false;
        for _ in 0..self.config.max_attempts {
            let mut noised = chars.clone();
            let mut used = alloc::vec![false; chars.len()];
            let mut spans: Vec<ErrorSpan> = Vec::new();
            let mut complete = true;
            for &tag in &tags {
                match self.place(&chars, &noised, &used, &tokens, tag, rng) {
                    Some((range, wrong, granularity)) => {
                        used[range.clone()].iter_mut().for_each(|u| *u = true);
                        for (i, w) in range.clone().zip(&wrong) {
                            noised[i] = *w;
                        }
                        spans.extend(diff_spans(&chars, &noised, range, tag, granularity));
                    }
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete {
                continue;
            }
            spans.sort_by_key(|s| s.offset);
            let source: String = noised.iter().collect();
            if self.config.enable_lm_filter {
                let keep =
                    self.filter_model.relative_ppl_increase(sentence, &source).is_ok_and(|inc| inc > self.config.delta);
                if !keep {
                    lm_rejected = true;
                    // a rejected placement is regenerated with fresh relations
                    tags = (0..n).map(|_| self.sample_tag(rng)).collect();
                    continue;
                }
            }
            return Outcome::Emitted(SentencePair { source, target: sentence.into(), spans });
        }
        if lm_rejected {
            Outcome::FilteredByLm
        } else {
            Outcome::NoCandidate
        }
    }
}

/// Maximal runs of differing characters inside `range`, one span each.
fn diff_spans(
    correct: &[char],
    noised: &[char],
    range: Range<usize>,
    tag: PinyinTag,
    granularity: Granularity,
) -> Vec<ErrorSpan> {
    let mut out = Vec::new();
    let mut i = range.start;
    while i < range.end {
        if correct[i] == noised[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < range.end && correct[i] != noised[i] {
            i += 1;
        }
        out.push(ErrorSpan {
            offset: start,
            wrong: noised[start..i].iter().collect(),
            correct: correct[start..i].iter().collect(),
            pinyin_tag: tag,
            granularity,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::{lexicon, readings, scheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_config_is_valid() {
        assert_eq!(NoiseConfig::default().validate(), Ok(()));
    }

    #[test]
    fn validation_lists_every_key() {
        let cfg = NoiseConfig {
            pinyin_dist: PinyinDist { same: 0.5, fuzzy: 0.1, similar: 0.1, dissimilar: 0.1 },
            token_dist: TokenDist { word: -0.1, char: 1.1 },
            num_dist: alloc::vec![(0, 1.0)],
            delta: f64::NAN,
            max_attempts: 0,
            enable_lm_filter: true,
        };
        let keys: Vec<String> = cfg.validate().unwrap_err().into_iter().map(|i| i.key).collect();
        for k in ["noise.pinyin_dist", "noise.token_dist", "noise.num_dist", "noise.delta", "noise.max_attempts"] {
            assert!(keys.iter().any(|x| x == k), "{k} missing from {keys:?}");
        }
    }

    #[test]
    fn pair_check() {
        let ok = SentencePair {
            source: "现再好".into(),
            target: "现在好".into(),
            spans: alloc::vec![ErrorSpan {
                offset: 1,
                wrong: "再".into(),
                correct: "在".into(),
                pinyin_tag: PinyinTag::SamePinyin,
                granularity: Granularity::Char,
            }],
        };
        assert_eq!(ok.check(), Ok(()));
        let mut bad = ok.clone();
        bad.spans.clear();
        assert!(bad.check().is_err());
        let mut bad = ok;
        bad.source = "现再好啊".into();
        assert!(bad.check().is_err());
    }

    #[test]
    fn diff_spans_split_on_equal_chars() {
        let c: Vec<char> = "ABCD".chars().collect();
        let n: Vec<char> = "XBZD".chars().collect();
        let s = diff_spans(&c, &n, 0..4, PinyinTag::SamePinyin, Granularity::Word);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].offset, s[0].wrong.as_str()), (0, "X"));
        assert_eq!((s[1].offset, s[1].wrong.as_str()), (2, "Z"));
    }

    #[test]
    fn generates_consistent_pairs() {
        let s = scheme();
        let lex = lexicon();
        let rd = readings();
        let lm = NGramModel::train(["现在开心地旅游", "现在他在西安", "开心地旅游"], 3, 0.75).unwrap();
        let cfg = NoiseConfig { enable_lm_filter: false, ..NoiseConfig::default() };
        let g = Generator::new(Ime::new(&s, &lex, &lm), &rd, &lm, cfg).unwrap();
        let mut emitted = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Outcome::Emitted(p) = g.generate_one("现在开心地旅游", &mut rng) {
                p.check().unwrap();
                for span in &p.spans {
                    for (w, c) in span.wrong.chars().zip(span.correct.chars()) {
                        assert_eq!(char_pair_tag(&s, &rd, c, w), span.pinyin_tag);
                    }
                }
                emitted += 1;
            }
        }
        assert!(emitted > 100, "{emitted}");
    }

    #[test]
    fn nothing_to_noise() {
        let s = scheme();
        let lex = lexicon();
        let rd = readings();
        let lm = NGramModel::train(["abc"], 2, 0.75).unwrap();
        let g = Generator::new(Ime::new(&s, &lex, &lm), &rd, &lm, NoiseConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(g.generate_one("abc 123", &mut rng), Outcome::NoEligibleToken);
    }

    #[test]
    fn single_candidate_exhausts_attempts() {
        let s = scheme();
        // every reading has exactly one candidate, the correct character
        let lex = crate::lexicon::Lexicon::parse("砸\tza\t1\t0\n", &s).unwrap();
        let rd = CharReadings::parse("砸\tza\n", &s).unwrap();
        let lm = NGramModel::train(["砸"], 2, 0.75).unwrap();
        let cfg = NoiseConfig {
            pinyin_dist: PinyinDist { same: 1.0, fuzzy: 0.0, similar: 0.0, dissimilar: 0.0 },
            ..NoiseConfig::default()
        };
        let g = Generator::new(Ime::new(&s, &lex, &lm), &rd, &lm, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(g.generate_one("砸砸", &mut rng), Outcome::NoCandidate);
    }
}
