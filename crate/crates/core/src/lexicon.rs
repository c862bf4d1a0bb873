//! Word and character dictionary: readings, frequencies, entity flags,
//! pinyin lookup and forward-maximum-matching segmentation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashMap;
use thiserror::Error;

use crate::pinyin::{PinyinScheme, PinyinSeq, PinyinTag, Syllable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub surface: String,
    pub readings: Vec<PinyinSeq>,
    pub frequency: u64,
    pub is_entity: bool,
}

impl LexiconEntry {
    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    by_surface: HashMap<String, usize>,
    by_key: HashMap<String, Vec<usize>>,
    max_word_chars: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon { entries: Vec::new(), by_surface: HashMap::new(), by_key: HashMap::new(), max_word_chars: 1 }
    }

    /// Parses the TAB-separated lexicon format
    /// `surface  reading  frequency  entity(0/1)`; lines sharing a surface
    /// merge into one entry.
    pub fn parse(text: &str, scheme: &PinyinScheme) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| LexiconError::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(alloc::format!("expected 4 TAB-separated fields, found {}", fields.len())));
            }
            let surface = fields[0].trim();
            if surface.is_empty() {
                return Err(err("empty surface".to_string()));
            }
            let reading = scheme.parse_seq(fields[1]).map_err(|e| err(e.to_string()))?;
            let n = surface.chars().count();
            if reading.len() != n {
                return Err(err(alloc::format!(
                    "reading {:?} has {} syllables for {} characters",
                    fields[1],
                    reading.len(),
                    n
                )));
            }
            let frequency: u64 =
                fields[2].trim().parse().map_err(|_| err(alloc::format!("bad frequency {:?}", fields[2])))?;
            let is_entity = match fields[3].trim() {
                "0" => false,
                "1" => true,
                other => return Err(err(alloc::format!("bad entity flag {other:?}"))),
            };
            lex.add(surface, reading, frequency, is_entity).map_err(err)?;
        }
        Ok(lex)
    }

    /// Adds one (surface, reading) pair, merging into an existing surface.
    pub fn add(&mut self, surface: &str, reading: PinyinSeq, frequency: u64, is_entity: bool) -> Result<(), String> {
        let n = surface.chars().count();
        if reading.len() != n {
            return Err(alloc::format!("reading length {} != surface length {n}", reading.len()));
        }
        let idx = match self.by_surface.get(surface) {
            Some(&idx) => {
                let e = &mut self.entries[idx];
                if e.readings.contains(&reading) {
                    return Err(alloc::format!("duplicate entry {surface} {reading}"));
                }
                e.frequency = e.frequency.max(frequency);
                e.is_entity |= is_entity;
                e.readings.push(reading.clone());
                idx
            }
            None => {
                let idx = self.entries.len();
                self.entries.push(LexiconEntry {
                    surface: surface.to_string(),
                    readings: alloc::vec![reading.clone()],
                    frequency,
                    is_entity,
                });
                self.by_surface.insert(surface.to_string(), idx);
                self.max_word_chars = self.max_word_chars.max(n);
                idx
            }
        };
        self.by_key.entry(reading.key()).or_default().push(idx);
        Ok(())
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<&LexiconEntry> {
        self.by_surface.get(surface).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.by_surface.contains_key(surface)
    }

    pub fn is_entity(&self, surface: &str) -> bool {
        self.get(surface).is_some_and(|e| e.is_entity)
    }

    /// Marks an existing surface as an entity, or adds nothing if unknown.
    pub fn mark_entity(&mut self, surface: &str) -> bool {
        match self.by_surface.get(surface) {
            Some(&i) => {
                self.entries[i].is_entity = true;
                true
            }
            None => false,
        }
    }

    pub fn set_frequency(&mut self, surface: &str, frequency: u64) -> bool {
        match self.by_surface.get(surface) {
            Some(&i) => {
                self.entries[i].frequency = frequency;
                true
            }
            None => false,
        }
    }

    pub fn max_word_chars(&self) -> usize {
        self.max_word_chars
    }

    /// Entries with a reading equal to `p`, or fuzzy-equivalent to it syllable
    /// by syllable when `fuzzy` is set. Results follow lexicon order.
    pub fn lookup_by_pinyin(&self, p: &PinyinSeq, fuzzy: bool, scheme: &PinyinScheme) -> Vec<&LexiconEntry> {
        let mut hits: Vec<usize> = Vec::new();
        if fuzzy {
            for variant in self.fuzzy_variants(p, scheme) {
                if let Some(v) = self.by_key.get(&variant) {
                    hits.extend_from_slice(v);
                }
            }
            hits.sort_unstable();
            hits.dedup();
        } else if let Some(v) = self.by_key.get(&p.key()) {
            hits.extend_from_slice(v);
        }
        hits.into_iter().map(|i| &self.entries[i]).collect()
    }

    /// Keys of every reading fuzzy-equivalent to `p` (including `p` itself).
    fn fuzzy_variants(&self, p: &PinyinSeq, scheme: &PinyinScheme) -> Vec<String> {
        let mut per_pos: Vec<Vec<Syllable>> = Vec::with_capacity(p.len());
        for s in p.syllables() {
            let mut opts = alloc::vec![*s];
            opts.extend(scheme.neighbours(*s, PinyinTag::FuzzyPinyin));
            per_pos.push(opts);
        }
        let mut keys = alloc::vec![String::new()];
        for (pos, opts) in per_pos.iter().enumerate() {
            let mut next = Vec::with_capacity(keys.len() * opts.len());
            for k in &keys {
                for o in opts {
                    let mut nk = k.clone();
                    if pos > 0 {
                        nk.push('\'');
                    }
                    nk.push_str(o.as_str());
                    next.push(nk);
                }
            }
            keys = next;
        }
        keys
    }

    /// Forward maximum matching. Tokens are slices of `sentence` and
    /// concatenate back to it; characters without a match stand alone.
    pub fn segment_text<'a>(&self, sentence: &'a str) -> Vec<&'a str> {
        let bounds: Vec<usize> =
            sentence.char_indices().map(|(i, _)| i).chain(core::iter::once(sentence.len())).collect();
        let n = bounds.len() - 1;
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let max = self.max_word_chars.min(n - i);
            let len = (2..=max)
                .rev()
                .find(|&l| self.by_surface.contains_key(&sentence[bounds[i]..bounds[i + l]]))
                .unwrap_or(1);
            out.push(&sentence[bounds[i]..bounds[i + len]]);
            i += len;
        }
        out
    }

    /// Like [`Lexicon::segment_text`] but as character ranges.
    pub fn segment_spans(&self, sentence: &str) -> Vec<core::ops::Range<usize>> {
        let mut start = 0;
        self.segment_text(sentence)
            .into_iter()
            .map(|t| {
                let n = t.chars().count();
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }
}
