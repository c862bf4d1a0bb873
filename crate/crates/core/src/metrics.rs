//! Spelling-correction metrics at sentence and character level.
//!
//! Character-level correction counts every position (not only the correctly
//! detected ones). Sentence-level detection needs the exact gold position
//! set; sentence-level correction needs the exact gold string.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error(
        "example {index}: source, gold and prediction lengths differ ({source_len}, {gold_len}, {prediction_len})"
    )]
    LengthMismatch { index: usize, source_len: usize, gold_len: usize, prediction_len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalExample {
    pub source: Vec<char>,
    pub gold: Vec<char>,
    pub prediction: Vec<char>,
}

impl EvalExample {
    pub fn new(source: &str, gold: &str, prediction: &str) -> Self {
        EvalExample {
            source: source.chars().collect(),
            gold: gold.chars().collect(),
            prediction: prediction.chars().collect(),
        }
    }

    fn check(&self, index: usize) -> Result<(), MetricsError> {
        let (s, g, p) = (self.source.len(), self.gold.len(), self.prediction.len());
        if s != g || s != p {
            return Err(MetricsError::LengthMismatch { index, source_len: s, gold_len: g, prediction_len: p });
        }
        Ok(())
    }

    fn predicted_positions(&self) -> Vec<usize> {
        (0..self.source.len()).filter(|&i| self.prediction[i] != self.source[i]).collect()
    }

    fn gold_positions(&self) -> Vec<usize> {
        (0..self.source.len()).filter(|&i| self.gold[i] != self.source[i]).collect()
    }
}

/// Counts plus derived precision, recall and F1 (0/0 is taken as 0).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { tp, fp, fn_, precision, recall, f1 }
    }

    /// Sums counts and recomputes the ratios.
    pub fn merge(&self, o: &Prf) -> Prf {
        Prf::from_counts(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

fn check_all(examples: &[EvalExample]) -> Result<(), MetricsError> {
    examples.iter().enumerate().try_for_each(|(i, e)| e.check(i))
}

pub fn char_detection(examples: &[EvalExample]) -> Result<Prf, MetricsError> {
    check_all(examples)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for e in examples {
        for i in 0..e.source.len() {
            let pred = e.prediction[i] != e.source[i];
            let gold = e.gold[i] != e.source[i];
            match (pred, gold) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

pub fn char_correction(examples: &[EvalExample]) -> Result<Prf, MetricsError> {
    check_all(examples)?;
    let (mut tp, mut predicted, mut gold) = (0u64, 0u64, 0u64);
    for e in examples {
        for i in 0..e.source.len() {
            let pred = e.prediction[i] != e.source[i];
            let is_gold = e.gold[i] != e.source[i];
            predicted += pred as u64;
            gold += is_gold as u64;
            tp += (pred && is_gold && e.prediction[i] == e.gold[i]) as u64;
        }
    }
    Ok(Prf::from_counts(tp, predicted - tp, gold - tp))
}

fn sentence_level(examples: &[EvalExample], correction: bool) -> Result<Prf, MetricsError> {
    check_all(examples)?;
    let (mut tp, mut predicted, mut positive) = (0u64, 0u64, 0u64);
    for e in examples {
        let pred = e.predicted_positions();
        let gold = e.gold_positions();
        predicted += !pred.is_empty() as u64;
        positive += !gold.is_empty() as u64;
        let hit =
            !pred.is_empty() && !gold.is_empty() && if correction { e.prediction == e.gold } else { pred == gold };
        tp += hit as u64;
    }
    Ok(Prf::from_counts(tp, predicted - tp, positive - tp))
}

pub fn sentence_detection(examples: &[EvalExample]) -> Result<Prf, MetricsError> {
    sentence_level(examples, false)
}

pub fn sentence_correction(examples: &[EvalExample]) -> Result<Prf, MetricsError> {
    sentence_level(examples, true)
}

/// The twelve numbers: P/R/F1 for detection and correction at both levels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sentence_detection: Prf,
    pub sentence_correction: Prf,
    pub char_detection: Prf,
    pub char_correction: Prf,
}

pub fn evaluate(examples: &[EvalExample]) -> Result<MetricReport, MetricsError> {
    Ok(MetricReport {
        sentence_detection: sentence_detection(examples)?,
        sentence_correction: sentence_correction(examples)?,
        char_detection: char_detection(examples)?,
        char_correction: char_correction(examples)?,
    })
}

/// Human-readable one-line summary of a [`Prf`].
pub fn describe(p: &Prf) -> String {
    alloc::format!("P={:.4} R={:.4} F1={:.4} (tp={} fp={} fn={})", p.precision, p.recall, p.f1, p.tp, p.fp, p.fn_)
}
