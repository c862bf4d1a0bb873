//! Toneless pinyin: syllable inventory, segmentation, fuzzy rules, the
//! weighted pinyin distance and the four-way pinyin relation tag.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use hashbrown::HashMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest syllable in the inventory ("zhuang", "shuang", "chuang").
pub const MAX_SYLLABLE_LEN: usize = 6;

/// Initials, two-letter ones first so that prefix matching is greedy.
const INITIALS: [&str; 23] = [
    "zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j", "q", "x", "r", "z", "c", "s", "y",
    "w",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PinyinError {
    #[error("invalid pinyin input {0:?}: expected non-empty lowercase ASCII letters")]
    InvalidInput(String),
    #[error("{0:?} is not a syllable of the inventory")]
    UnknownSyllable(String),
    #[error("character {0:?} has no reading in the table")]
    UnknownCharacter(char),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot mutate {seq} into a {target:?} variant")]
    Unachievable { seq: String, target: PinyinTag },
    #[error("pinyin sequence must contain at least one syllable")]
    Empty,
}

/// One toneless syllable, e.g. `zhai` = `zh` + `ai`. Stored inline so it is `Copy`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Syllable {
    bytes: [u8; MAX_SYLLABLE_LEN],
    len: u8,
    initial_len: u8,
}

impl Syllable {
    /// Splits `text` into initial and final without checking inventory membership.
    fn from_text(text: &str) -> Option<Syllable> {
        let b = text.as_bytes();
        if b.is_empty() || b.len() > MAX_SYLLABLE_LEN || !b.iter().all(u8::is_ascii_lowercase) {
            return None;
        }
        let initial_len =
            INITIALS.iter().find(|i| text.starts_with(**i) && text.len() > i.len()).map_or(0, |i| i.len());
        let mut bytes = [0u8; MAX_SYLLABLE_LEN];
        bytes[..b.len()].copy_from_slice(b);
        Some(Syllable { bytes, len: b.len() as u8, initial_len: initial_len as u8 })
    }

    pub fn as_str(&self) -> &str {
        // only ASCII bytes are ever stored
        core::str::from_utf8(&self.bytes[..self.len as usize]).unwrap_or("")
    }

    pub fn initial(&self) -> &str {
        &self.as_str()[..self.initial_len as usize]
    }

    pub fn final_part(&self) -> &str {
        &self.as_str()[self.initial_len as usize..]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Always false: inventory syllables have at least one letter.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl Ord for Syllable {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_str().cmp(other.as_str())
    }
}

impl PartialOrd for Syllable {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A non-empty sequence of syllables, the reading of one token.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PinyinSeq(Vec<Syllable>);

impl PinyinSeq {
    pub fn new(syllables: Vec<Syllable>) -> Result<Self, PinyinError> {
        if syllables.is_empty() {
            return Err(PinyinError::Empty);
        }
        Ok(PinyinSeq(syllables))
    }

    pub fn single(s: Syllable) -> Self {
        PinyinSeq(alloc::vec![s])
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letters with syllable boundaries dropped: `[xi, an]` -> `xian`.
    pub fn flattened(&self) -> String {
        self.0.iter().map(Syllable::as_str).collect()
    }

    /// Syllables joined by `'`, the separator IMEs use: `[xi, an]` -> `xi'an`.
    pub fn key(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                out.push('\'');
            }
            out.push_str(s.as_str());
        }
        out
    }

    fn with_replaced(&self, pos: usize, s: Syllable) -> PinyinSeq {
        let mut v = self.0.clone();
        v[pos] = s;
        PinyinSeq(v)
    }
}

impl fmt::Debug for PinyinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_spaced())
    }
}

impl fmt::Display for PinyinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_spaced())
    }
}

impl PinyinSeq {
    /// Space separated, the lexicon file form.
    pub fn to_spaced(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(s.as_str());
        }
        out
    }
}

/// Relation between the pinyin of a correct and a wrong token, ordered from
/// most to least similar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinyinTag {
    SamePinyin,
    FuzzyPinyin,
    SimilarPinyin,
    DissimilarPinyin,
}

impl PinyinTag {
    pub const ALL: [PinyinTag; 4] =
        [PinyinTag::SamePinyin, PinyinTag::FuzzyPinyin, PinyinTag::SimilarPinyin, PinyinTag::DissimilarPinyin];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PinyinTag::SamePinyin => "same_pinyin",
            PinyinTag::FuzzyPinyin => "fuzzy_pinyin",
            PinyinTag::SimilarPinyin => "similar_pinyin",
            PinyinTag::DissimilarPinyin => "dissimilar_pinyin",
        }
    }
}

/// Removes tone marks and tone digits; `ü` becomes `v`.
pub fn strip_tone(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.trim().chars() {
        let base = match c {
            'ā' | 'á' | 'ǎ' | 'à' => 'a',
            'ē' | 'é' | 'ě' | 'è' | 'ê' => 'e',
            'ī' | 'í' | 'ǐ' | 'ì' => 'i',
            'ō' | 'ó' | 'ǒ' | 'ò' => 'o',
            'ū' | 'ú' | 'ǔ' | 'ù' => 'u',
            'ü' | 'ǖ' | 'ǘ' | 'ǚ' | 'ǜ' => 'v',
            'ń' | 'ň' | 'ǹ' => 'n',
            'ḿ' => 'm',
            '0'..='9' => continue,
            c => c.to_ascii_lowercase(),
        };
        out.push(base);
    }
    out
}

/// Unordered pairs of interchangeable initials or finals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyRuleSet {
    pairs: Vec<(String, String)>,
}

impl FuzzyRuleSet {
    pub fn new<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut out: Vec<(String, String)> = Vec::new();
        for (a, b) in pairs {
            let (a, b) = (a.into(), b.into());
            let p = if a <= b { (a, b) } else { (b, a) };
            if p.0 != p.1 && !out.contains(&p) {
                out.push(p);
            }
        }
        FuzzyRuleSet { pairs: out }
    }

    /// The Sogou-style default set.
    pub fn standard() -> Self {
        FuzzyRuleSet::new([
            ("z", "zh"),
            ("c", "ch"),
            ("s", "sh"),
            ("n", "l"),
            ("f", "h"),
            ("l", "r"),
            ("an", "ang"),
            ("en", "eng"),
            ("in", "ing"),
            ("ian", "iang"),
            ("uan", "uang"),
        ])
    }

    /// One `a,b` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PinyinError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    pairs.push((strip_tone(a), strip_tone(b)))
                }
                _ => {
                    return Err(PinyinError::Parse {
                        line: i + 1,
                        msg: "expected two comma-separated parts".to_string(),
                    })
                }
            }
        }
        Ok(FuzzyRuleSet::new(pairs))
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// True for a listed pair in either direction (never for equal parts).
    pub fn is_pair(&self, a: &str, b: &str) -> bool {
        self.pairs.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }

    /// Every part paired with `part`.
    pub fn partners<'a>(&'a self, part: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.pairs.iter().filter_map(move |(x, y)| {
            if x == part {
                Some(y.as_str())
            } else if y == part {
                Some(x.as_str())
            } else {
                None
            }
        })
    }
}

impl Default for FuzzyRuleSet {
    fn default() -> Self {
        FuzzyRuleSet::standard()
    }
}

/// The syllable inventory together with the fuzzy rules, plus per-syllable
/// neighbour tables used by [`PinyinScheme::mutate`].
#[derive(Debug, Clone)]
pub struct PinyinScheme {
    syllables: Vec<Syllable>,
    fuzzy: FuzzyRuleSet,
    // neighbours[i][tag] = inventory indices j != i with tag(i, j) == tag
    neighbours: Vec<[Vec<u16>; 4]>,
}

impl PinyinScheme {
    pub fn new<'a, I>(syllables: I, fuzzy: FuzzyRuleSet) -> Result<Self, PinyinError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut list = Vec::new();
        for raw in syllables {
            let t = strip_tone(raw);
            let s = Syllable::from_text(&t).ok_or(PinyinError::InvalidInput(t))?;
            list.push(s);
        }
        list.sort();
        list.dedup();
        let mut scheme = PinyinScheme { syllables: list, fuzzy, neighbours: Vec::new() };
        scheme.neighbours = scheme.build_neighbours();
        Ok(scheme)
    }

    /// Parses the inventory file: one syllable per line, `#` comments.
    pub fn parse(inventory: &str, fuzzy: FuzzyRuleSet) -> Result<Self, PinyinError> {
        let mut lines = Vec::new();
        for (i, line) in inventory.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t = strip_tone(line);
            if Syllable::from_text(&t).is_none() {
                return Err(PinyinError::Parse { line: i + 1, msg: alloc::format!("invalid syllable {line:?}") });
            }
            lines.push(line);
        }
        PinyinScheme::new(lines, fuzzy)
    }

    fn build_neighbours(&self) -> Vec<[Vec<u16>; 4]> {
        let n = self.syllables.len();
        let mut out: Vec<[Vec<u16>; 4]> = (0..n).map(|_| Default::default()).collect();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let a = PinyinSeq::single(self.syllables[i]);
                let b = PinyinSeq::single(self.syllables[j]);
                out[i][self.tag(&a, &b).index()].push(j as u16);
            }
        }
        out
    }

    pub fn fuzzy_rules(&self) -> &FuzzyRuleSet {
        &self.fuzzy
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    fn index_of(&self, text: &str) -> Option<usize> {
        self.syllables.binary_search_by(|s| s.as_str().cmp(text)).ok()
    }

    pub fn syllable(&self, text: &str) -> Option<Syllable> {
        self.index_of(text).map(|i| self.syllables[i])
    }

    pub fn contains(&self, text: &str) -> bool {
        self.index_of(text).is_some()
    }

    /// Parses whitespace-separated syllables, e.g. `"lu shan"`.
    pub fn parse_seq(&self, spaced: &str) -> Result<PinyinSeq, PinyinError> {
        let mut v = Vec::new();
        for part in spaced.split_whitespace() {
            let t = strip_tone(part);
            v.push(self.syllable(&t).ok_or(PinyinError::UnknownSyllable(t))?);
        }
        PinyinSeq::new(v)
    }

    /// All segmentations of typed letters into inventory syllables, longest
    /// first syllable first (recursively).
    pub fn segment(&self, raw: &str) -> Result<Vec<PinyinSeq>, PinyinError> {
        if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(PinyinError::InvalidInput(raw.to_string()));
        }
        let n = raw.len();
        // reachable[i]: raw[i..] can be fully segmented
        let mut reachable = alloc::vec![false; n + 1];
        reachable[n] = true;
        for i in (0..n).rev() {
            reachable[i] = (1..=MAX_SYLLABLE_LEN.min(n - i)).any(|l| reachable[i + l] && self.contains(&raw[i..i + l]));
        }
        let mut out = Vec::new();
        if reachable[0] {
            let mut stack = Vec::new();
            self.segment_from(raw, 0, &reachable, &mut stack, &mut out);
        }
        Ok(out)
    }

    fn segment_from(
        &self,
        raw: &str,
        i: usize,
        reachable: &[bool],
        stack: &mut Vec<Syllable>,
        out: &mut Vec<PinyinSeq>,
    ) {
        if i == raw.len() {
            out.push(PinyinSeq(stack.clone()));
            return;
        }
        for l in (1..=MAX_SYLLABLE_LEN.min(raw.len() - i)).rev() {
            if !reachable[i + l] {
                continue;
            }
            if let Some(s) = self.syllable(&raw[i..i + l]) {
                stack.push(s);
                self.segment_from(raw, i + l, reachable, stack, out);
                stack.pop();
            }
        }
    }

    fn parts_related(&self, a: &str, b: &str) -> bool {
        a == b || self.fuzzy.is_pair(a, b)
    }

    /// Syllable-level fuzzy relation: initials and finals each equal or a
    /// listed pair, and the syllables differ.
    pub fn is_fuzzy_syllable(&self, a: Syllable, b: Syllable) -> bool {
        a != b && self.parts_related(a.initial(), b.initial()) && self.parts_related(a.final_part(), b.final_part())
    }

    /// Equal syllable counts and every position equal or fuzzy related.
    pub fn fuzzy_equivalent(&self, a: &PinyinSeq, b: &PinyinSeq) -> bool {
        a.len() == b.len() && a.0.iter().zip(&b.0).all(|(x, y)| x == y || self.is_fuzzy_syllable(*x, *y))
    }

    /// Weighted Levenshtein over the flattened letters. Every edit costs 1,
    /// except substituting a letter of one syllable's initial for a letter of
    /// a different, non-fuzzy initial, which costs 2.
    pub fn distance(&self, a: &PinyinSeq, b: &PinyinSeq) -> u32 {
        let la = letters(a);
        let lb = letters(b);
        let mut prev: Vec<u32> = (0..=lb.len() as u32).collect();
        let mut cur = alloc::vec![0u32; lb.len() + 1];
        for (i, (ca, ia)) in la.iter().enumerate() {
            cur[0] = i as u32 + 1;
            for (j, (cb, ib)) in lb.iter().enumerate() {
                let sub = if ca == cb {
                    0
                } else {
                    match (ia, ib) {
                        (Some(x), Some(y)) if x != y && !self.fuzzy.is_pair(x, y) => 2,
                        _ => 1,
                    }
                };
                cur[j + 1] = (prev[j] + sub).min(prev[j + 1] + 1).min(cur[j] + 1);
            }
            core::mem::swap(&mut prev, &mut cur);
        }
        prev[lb.len()]
    }

    /// Classifies the pinyin relation between a correct and a wrong reading.
    pub fn tag(&self, correct: &PinyinSeq, wrong: &PinyinSeq) -> PinyinTag {
        if correct.flattened() == wrong.flattened() {
            PinyinTag::SamePinyin
        } else if self.fuzzy_equivalent(correct, wrong) {
            PinyinTag::FuzzyPinyin
        } else if self.distance(correct, wrong) == 1 {
            PinyinTag::SimilarPinyin
        } else {
            PinyinTag::DissimilarPinyin
        }
    }

    /// Most similar tag over all reading pairs of two polyphonic tokens.
    pub fn best_tag(&self, correct: &[PinyinSeq], wrong: &[PinyinSeq]) -> Option<PinyinTag> {
        correct.iter().flat_map(|c| wrong.iter().map(move |w| (c, w))).map(|(c, w)| self.tag(c, w)).min()
    }

    /// Inventory syllables that stand in relation `tag` to `s` (excluding `s`).
    pub fn neighbours(&self, s: Syllable, tag: PinyinTag) -> impl Iterator<Item = Syllable> + '_ {
        let list: &[u16] = match self.index_of(s.as_str()) {
            Some(i) => &self.neighbours[i][tag.index()],
            None => &[],
        };
        list.iter().map(move |&j| self.syllables[j as usize])
    }

    /// Produces a reading whose relation to `correct` is `target`, changing at
    /// most one syllable.
    pub fn mutate<R: Rng + ?Sized>(
        &self,
        correct: &PinyinSeq,
        target: PinyinTag,
        rng: &mut R,
    ) -> Result<PinyinSeq, PinyinError> {
        if target == PinyinTag::SamePinyin {
            return Ok(correct.clone());
        }
        let mut proposals: Vec<(usize, Syllable)> = Vec::new();
        for (pos, s) in correct.0.iter().enumerate() {
            proposals.extend(self.neighbours(*s, target).map(|n| (pos, n)));
        }
        // a change is checked against the whole sequence; cross-syllable
        // alignment can occasionally shorten the distance
        while !proposals.is_empty() {
            let k = rng.gen_range(0..proposals.len());
            let (pos, s) = proposals.swap_remove(k);
            let candidate = correct.with_replaced(pos, s);
            if self.tag(correct, &candidate) == target {
                return Ok(candidate);
            }
        }
        Err(PinyinError::Unachievable { seq: correct.to_spaced(), target })
    }

    /// Whether `mutate(correct, target)` can succeed.
    pub fn is_achievable(&self, correct: &PinyinSeq, target: PinyinTag) -> bool {
        target == PinyinTag::SamePinyin
            || correct.0.iter().enumerate().any(|(pos, s)| {
                self.neighbours(*s, target).any(|n| self.tag(correct, &correct.with_replaced(pos, n)) == target)
            })
    }

    /// Random inventory syllable, handy for tests and fuzzing.
    pub fn random_syllable<R: Rng + ?Sized>(&self, rng: &mut R) -> Syllable {
        *self.syllables.choose(rng).expect("inventory is never empty")
    }
}

fn letters(seq: &PinyinSeq) -> Vec<(u8, Option<&str>)> {
    let mut out = Vec::new();
    for s in &seq.0 {
        let ini = s.initial();
        for (k, b) in s.as_str().bytes().enumerate() {
            out.push((b, if k < ini.len() { Some(ini) } else { None }));
        }
    }
    out
}

/// Character -> readings table; the first reading is the primary one.
#[derive(Debug, Clone, Default)]
pub struct CharReadings {
    table: HashMap<char, Vec<PinyinSeq>>,
}

impl CharReadings {
    /// One `char TAB reading,reading,...` line per character.
    pub fn parse(text: &str, scheme: &PinyinScheme) -> Result<Self, PinyinError> {
        let mut table: HashMap<char, Vec<PinyinSeq>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| PinyinError::Parse { line: i + 1, msg };
            let (ch, rest) = line.split_once('\t').ok_or_else(|| err("expected char TAB readings".to_string()))?;
            let mut chars = ch.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(err(alloc::format!("{ch:?} is not a single character"))),
            };
            let slot = table.entry(c).or_default();
            for r in rest.split(',').map(str::trim).filter(|r| !r.is_empty()) {
                let t = strip_tone(r);
                let s = scheme.syllable(&t).ok_or_else(|| err(alloc::format!("unknown syllable {t:?}")))?;
                let seq = PinyinSeq::single(s);
                if !slot.contains(&seq) {
                    slot.push(seq);
                }
            }
            if slot.is_empty() {
                return Err(err("no readings".to_string()));
            }
        }
        Ok(CharReadings { table })
    }

    pub fn insert(&mut self, c: char, readings: Vec<PinyinSeq>) {
        self.table.insert(c, readings);
    }

    pub fn get(&self, c: char) -> Option<&[PinyinSeq]> {
        self.table.get(&c).map(Vec::as_slice)
    }

    pub fn char_to_pinyins(&self, c: char) -> Result<&[PinyinSeq], PinyinError> {
        self.get(c).ok_or(PinyinError::UnknownCharacter(c))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}
