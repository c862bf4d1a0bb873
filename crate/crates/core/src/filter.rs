//! Correct-sentence filter: per-character error probabilities are reduced to
//! one maximum per character category, and a sentence counts as correct only
//! if every category maximum stays below its threshold.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::lm::NGramModel;
use crate::lm::UNK;
use crate::SpecialChars;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("sentence has {chars} characters but {probs} probabilities and {categories} categories")]
    LengthMismatch { chars: usize, probs: usize, categories: usize },
    #[error("threshold {name} = {value} outside [0, 1]")]
    BadThreshold { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharCategory {
    Special,
    Entity,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub special: f64,
    pub entity: f64,
    pub normal: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { special: 0.5, entity: 0.5, normal: 0.5 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), FilterError> {
        for (name, value) in [("special", self.special), ("entity", self.entity), ("normal", self.normal)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(FilterError::BadThreshold { name, value });
            }
        }
        Ok(())
    }

    fn for_category(&self, c: CharCategory) -> f64 {
        match c {
            CharCategory::Special => self.special,
            CharCategory::Entity => self.entity,
            CharCategory::Normal => self.normal,
        }
    }
}

/// Per-character error probabilities for a sentence.
pub trait ProbabilityProvider {
    /// One value in `[0, 1]` per character of `sentence`.
    fn probabilities(&self, sentence: &str) -> Vec<f64>;
}

impl<F> ProbabilityProvider for F
where
    F: Fn(&str) -> Vec<f64>,
{
    fn probabilities(&self, sentence: &str) -> Vec<f64> {
        self(sentence)
    }
}

/// Scores each character by its LM surprisal divided by a cap, clipped to 1.
#[derive(Debug, Clone, Copy)]
pub struct LmProbabilityProvider<'a> {
    model: &'a NGramModel,
    cap: f64,
}

impl<'a> LmProbabilityProvider<'a> {
    /// `cap` in nats; `None` uses the unigram surprisal of `<unk>`, so an
    /// out-of-vocabulary character scores at least 1.
    pub fn new(model: &'a NGramModel, cap: Option<f64>) -> Self {
        let cap = cap.unwrap_or_else(|| -model.ln_prob_ids(&[], UNK)).max(f64::MIN_POSITIVE);
        LmProbabilityProvider { model, cap }
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn score_surprisal(&self, surprisal: f64) -> f64 {
        (surprisal / self.cap).clamp(0.0, 1.0)
    }
}

impl ProbabilityProvider for LmProbabilityProvider<'_> {
    fn probabilities(&self, sentence: &str) -> Vec<f64> {
        self.model.char_ln_probs(sentence).into_iter().map(|lp| self.score_surprisal(-lp)).collect()
    }
}

/// Special characters first, then characters of entity-flagged words, the
/// rest normal.
pub fn categorize(sentence: &str, lexicon: &Lexicon, special: &SpecialChars) -> Vec<CharCategory> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut out = alloc::vec![CharCategory::Normal; chars.len()];
    for (token, range) in lexicon.segment_text(sentence).into_iter().zip(lexicon.segment_spans(sentence)) {
        if lexicon.is_entity(token) {
            out[range].iter_mut().for_each(|c| *c = CharCategory::Entity);
        }
    }
    for (i, c) in chars.iter().enumerate() {
        if special.contains(*c) {
            out[i] = CharCategory::Special;
        }
    }
    out
}

/// Whether each category's maximum probability (0 when the category is
/// empty) is strictly below its threshold.
pub fn is_correct(
    sentence: &str,
    probs: &[f64],
    categories: &[CharCategory],
    thresholds: &Thresholds,
) -> Result<bool, FilterError> {
    let n = sentence.chars().count();
    if probs.len() != n || categories.len() != n {
        return Err(FilterError::LengthMismatch { chars: n, probs: probs.len(), categories: categories.len() });
    }
    let mut max = [0.0f64; 3];
    for (p, c) in probs.iter().zip(categories) {
        let slot = &mut max[*c as usize];
        *slot = slot.max(*p);
    }
    Ok([CharCategory::Special, CharCategory::Entity, CharCategory::Normal]
        .iter()
        .all(|c| max[*c as usize] < thresholds.for_category(*c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Kept,
    Suspect,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: u64,
    pub kept: u64,
    pub suspect: u64,
}

impl FilterReport {
    pub fn record(&mut self, r: Route) {
        self.total += 1;
        match r {
            Route::Kept => self.kept += 1,
            Route::Suspect => self.suspect += 1,
        }
    }

    pub fn merge(&mut self, o: &FilterReport) {
        self.total += o.total;
        self.kept += o.kept;
        self.suspect += o.suspect;
    }

    pub fn kept_rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.kept as f64 / self.total as f64)
    }

    pub fn suspect_rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.suspect as f64 / self.total as f64)
    }
}

/// Routes one sentence with the given probabilities.
pub fn route_with(
    sentence: &str,
    probs: &[f64],
    lexicon: &Lexicon,
    special: &SpecialChars,
    thresholds: &Thresholds,
) -> Result<Route, FilterError> {
    let cats = categorize(sentence, lexicon, special);
    Ok(if is_correct(sentence, probs, &cats, thresholds)? { Route::Kept } else { Route::Suspect })
}

/// Routes one sentence using `provider`.
pub fn route<P: ProbabilityProvider + ?Sized>(
    sentence: &str,
    provider: &P,
    lexicon: &Lexicon,
    special: &SpecialChars,
    thresholds: &Thresholds,
) -> Result<Route, FilterError> {
    route_with(sentence, &provider.probabilities(sentence), lexicon, special, thresholds)
}
