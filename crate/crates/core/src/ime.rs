//! A transparent pinyin IME: lexicon candidates ranked by the language model
//! given the text typed so far.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::lexicon::Lexicon;
use crate::lm::NGramModel;
use crate::pinyin::{PinyinScheme, PinyinSeq};

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub surface: String,
    /// Natural-log LM probability of the surface after the context.
    pub score: f64,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub candidates: Vec<Candidate>,
    pub query_pinyin: PinyinSeq,
    pub fuzzy_used: bool,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.surface.as_str())
    }
}

/// Score descending, then frequency descending, then code-point order.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.total_cmp(&a.score).then(b.frequency.cmp(&a.frequency)).then_with(|| a.surface.cmp(&b.surface))
}

/// The IME view shared by candidate ranking and typing simulation.
#[derive(Debug, Clone, Copy)]
pub struct Ime<'a> {
    pub scheme: &'a PinyinScheme,
    pub lexicon: &'a Lexicon,
    pub model: &'a NGramModel,
}

/// What typing a token produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Typed {
    pub surface: String,
    /// 1-based rank of `surface` in the candidate list.
    pub rank: usize,
}

impl<'a> Ime<'a> {
    pub fn new(scheme: &'a PinyinScheme, lexicon: &'a Lexicon, model: &'a NGramModel) -> Self {
        Ime { scheme, lexicon, model }
    }

    /// Ranked candidates for pinyin `p` typed after `context`, truncated to `k`.
    pub fn candidates(&self, context: &str, p: &PinyinSeq, fuzzy: bool, k: usize) -> CandidateList {
        let mut candidates: Vec<Candidate> = self
            .lexicon
            .lookup_by_pinyin(p, fuzzy, self.scheme)
            .into_iter()
            .map(|e| Candidate {
                surface: e.surface.clone(),
                score: self.model.ln_prob_continuation(context, &e.surface),
                frequency: e.frequency,
            })
            .collect();
        candidates.sort_by(rank_order);
        candidates.dedup_by(|a, b| a.surface == b.surface);
        candidates.truncate(k.max(1));
        CandidateList { candidates, query_pinyin: p.clone(), fuzzy_used: fuzzy }
    }

    /// Simulates picking a candidate while trying to type `correct`: when the
    /// top candidate is `correct` the user lands on rank 2 or 3 (uniformly,
    /// rank 2 if only two exist), otherwise on rank 1. `None` when nothing
    /// other than `correct` is on offer.
    pub fn type_token<R: Rng + ?Sized>(
        &self,
        context: &str,
        p: &PinyinSeq,
        fuzzy: bool,
        correct: &str,
        rng: &mut R,
    ) -> Option<Typed> {
        let list = self.candidates(context, p, fuzzy, DEFAULT_TOP_K.max(3));
        choose_noise(&list, correct, rng)
    }
}

/// The rank-selection rule of [`Ime::type_token`] applied to a ranked list.
pub fn choose_noise<R: Rng + ?Sized>(list: &CandidateList, correct: &str, rng: &mut R) -> Option<Typed> {
    let first = list.candidates.first()?;
    if first.surface != correct {
        return Some(Typed { surface: first.surface.clone(), rank: 1 });
    }
    let rank = match list.len() {
        0 | 1 => return None,
        2 => 2,
        _ => rng.gen_range(2..=3),
    };
    Some(Typed { surface: list.candidates[rank - 1].surface.clone(), rank })
}
