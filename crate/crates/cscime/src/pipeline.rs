//! Streaming drivers behind the subcommands.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use cscime_core::filter::{route_with, FilterReport, ProbabilityProvider, Route, Thresholds};
use cscime_core::metrics::{self, EvalExample, MetricReport, MetricsError};
use cscime_core::noise::Outcome;
use cscime_core::tagger::{char_pair_tag, DistributionReport, SemanticTag, Tagger};
use cscime_core::{Generator, Lexicon, NGramModel, PinyinTag, RunReport, SpecialChars};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, IoContext, Result};
use crate::formats::{self, PairFormat};

pub fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker threads: {e}")))
}

/// Reads up to `n` non-empty lines.
fn next_chunk<I>(lines: &mut I, n: usize) -> Result<Vec<(usize, String)>>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    let mut chunk = Vec::with_capacity(n);
    for item in lines.by_ref() {
        chunk.push(item?);
        if chunk.len() == n {
            break;
        }
    }
    Ok(chunk)
}

#[derive(Debug, Clone, Copy)]
pub struct GenerateOptions {
    pub seed: u64,
    pub parallelism: usize,
    pub chunk_size: usize,
    pub max_pairs: Option<u64>,
    pub format: PairFormat,
}

/// Generates pairs for every non-empty input line, in input order. Sentence
/// `i` (0-based, counting non-empty lines) uses the seed `seed + i`, so the
/// output does not depend on `parallelism`.
pub fn generate<R: BufRead, W: Write>(
    generator: &Generator<'_>,
    input: R,
    input_path: &Path,
    out: &mut W,
    out_path: &Path,
    opts: &GenerateOptions,
) -> Result<RunReport> {
    let pool = thread_pool(opts.parallelism)?;
    let mut report = RunReport::default();
    let mut lines = formats::lines(input, input_path);
    let mut index: u64 = 0;
    loop {
        if opts.max_pairs.is_some_and(|m| report.emitted >= m) {
            break;
        }
        let chunk = next_chunk(&mut lines, opts.chunk_size.max(1))?;
        if chunk.is_empty() {
            break;
        }
        let first = index;
        index += chunk.len() as u64;
        let outcomes: Vec<Outcome> = pool.install(|| {
            chunk
                .par_iter()
                .enumerate()
                .map(|(k, (_, sentence))| {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(first + k as u64));
                    generator.generate_one(sentence, &mut rng)
                })
                .collect()
        });
        for outcome in outcomes {
            report.record(&outcome);
            if let Outcome::Emitted(pair) = &outcome {
                formats::write_pair(out, pair, opts.format).at(out_path)?;
            }
            if opts.max_pairs.is_some_and(|m| report.emitted >= m) {
                break;
            }
        }
    }
    out.flush().at(out_path)?;
    Ok(report)
}

/// Where per-character error probabilities come from.
pub enum Probabilities<'a, P: BufRead> {
    Provider(&'a (dyn ProbabilityProvider + Sync)),
    /// One JSON array per corpus line.
    File {
        reader: P,
        path: &'a Path,
    },
}

pub struct FilterOutputs<'a, K: Write, S: Write> {
    pub kept: K,
    pub kept_path: &'a Path,
    pub suspect: S,
    pub suspect_path: &'a Path,
}

/// Routes each sentence of `corpus` into kept or suspect.
#[allow(clippy::too_many_arguments)]
pub fn filter<R: BufRead, P: BufRead, K: Write, S: Write>(
    corpus: R,
    corpus_path: &Path,
    mut probs: Probabilities<'_, P>,
    lexicon: &Lexicon,
    special: &SpecialChars,
    thresholds: &Thresholds,
    out: &mut FilterOutputs<'_, K, S>,
    parallelism: usize,
    chunk_size: usize,
) -> Result<FilterReport> {
    thresholds.validate().map_err(|e| Error::validation(e.to_string()))?;
    let pool = thread_pool(parallelism)?;
    let mut report = FilterReport::default();
    let mut lines = formats::lines(corpus, corpus_path);
    let (provider, mut external) = match &mut probs {
        Probabilities::File { reader, path } => (None, Some((reader.lines().enumerate(), *path))),
        Probabilities::Provider(p) => (Some(*p), None),
    };
    loop {
        let chunk = next_chunk(&mut lines, chunk_size.max(1))?;
        if chunk.is_empty() {
            break;
        }
        let given: Option<Vec<Vec<f64>>> = match &mut external {
            None => None,
            Some((plines, ppath)) => {
                let ppath: &Path = ppath;
                let mut v = Vec::with_capacity(chunk.len());
                for (ln, _) in &chunk {
                    let (pi, line) = plines
                        .next()
                        .ok_or_else(|| Error::parse(ppath, *ln, "fewer probability lines than sentences"))?;
                    let line = line.at(ppath)?;
                    let p: Vec<f64> = serde_json::from_str(&line)
                        .map_err(|e| Error::parse(ppath, pi + 1, format!("expected a JSON array of numbers: {e}")))?;
                    v.push(p);
                }
                Some(v)
            }
        };
        let routes: Vec<Result<Route>> = pool.install(|| {
            chunk
                .par_iter()
                .enumerate()
                .map(|(k, (ln, sentence))| {
                    let p = match (&given, provider) {
                        (Some(v), _) => v[k].clone(),
                        (None, Some(provider)) => provider.probabilities(sentence),
                        (None, None) => unreachable!("file probabilities are read above"),
                    };
                    route_with(sentence, &p, lexicon, special, thresholds)
                        .map_err(|e| Error::parse(corpus_path, *ln, e.to_string()))
                })
                .collect()
        });
        for ((_, sentence), route) in chunk.iter().zip(routes) {
            let route = route?;
            report.record(route);
            match route {
                Route::Kept => writeln!(out.kept, "{sentence}").at(out.kept_path)?,
                Route::Suspect => writeln!(out.suspect, "{sentence}").at(out.suspect_path)?,
            }
        }
    }
    out.kept.flush().at(out.kept_path)?;
    out.suspect.flush().at(out.suspect_path)?;
    Ok(report)
}

/// Trains on the non-empty lines of `corpus`.
pub fn train_lm<R: BufRead>(corpus: R, path: &Path, order: usize, discount: f64) -> Result<NGramModel> {
    let mut failure = None;
    let sentences = formats::lines(corpus, path).map_while(|r| match r {
        Ok((_, s)) => Some(s),
        Err(e) => {
            failure = Some(e);
            None
        }
    });
    let model = NGramModel::train(sentences, order, discount);
    if let Some(e) = failure {
        return Err(e);
    }
    model.map_err(|e| Error::validation(e.to_string()))
}

/// Adds corpus occurrence counts of every lexicon word (by forward maximum
/// matching) to the lexicon frequencies.
pub fn build_dict<R: BufRead>(lexicon: &mut Lexicon, corpus: R, path: &Path) -> Result<u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut sentences = 0;
    for item in formats::lines(corpus, path) {
        let (_, s) = item?;
        sentences += 1;
        for t in lexicon.segment_text(&s) {
            if lexicon.contains(t) {
                *counts.entry(t.to_string()).or_default() += 1;
            }
        }
    }
    let mut words: Vec<_> = counts.into_iter().collect();
    words.sort();
    for (w, c) in words {
        let base = lexicon.get(&w).map(|e| e.frequency).unwrap_or(0);
        lexicon.set_frequency(&w, base + c);
    }
    Ok(sentences)
}

fn next_line<R: BufRead>(it: &mut std::io::Lines<R>, path: &Path) -> Result<Option<String>> {
    Ok(it.next().transpose().at(path)?.map(|l| l.trim_end().to_string()))
}

/// Metrics over aligned source, gold and prediction files, streamed.
pub fn evaluate<A: BufRead, B: BufRead, C: BufRead>(
    src: (A, &Path),
    gold: (B, &Path),
    pred: (C, &Path),
) -> Result<MetricReport> {
    let mut s_lines = src.0.lines();
    let mut g_lines = gold.0.lines();
    let mut p_lines = pred.0.lines();
    let mut total = MetricReport::default();
    let mut n = 0usize;
    loop {
        let (s, g, p) =
            (next_line(&mut s_lines, src.1)?, next_line(&mut g_lines, gold.1)?, next_line(&mut p_lines, pred.1)?);
        let (s, g, p) = match (s, g, p) {
            (None, None, None) => break,
            (Some(s), Some(g), Some(p)) => (s, g, p),
            _ => {
                return Err(Error::validation(format!(
                    "source, gold and prediction files have different line counts (diverging after line {n})"
                )))
            }
        };
        n += 1;
        let ex = [EvalExample::new(&s, &g, &p)];
        let r = metrics::evaluate(&ex).map_err(|e| match e {
            MetricsError::LengthMismatch { source_len, gold_len, prediction_len, .. } => Error::validation(format!(
                "example at line {n}: source, gold and prediction lengths differ ({source_len}, {gold_len}, {prediction_len})"
            )),
        })?;
        total = MetricReport {
            sentence_detection: total.sentence_detection.merge(&r.sentence_detection),
            sentence_correction: total.sentence_correction.merge(&r.sentence_correction),
            char_detection: total.char_detection.merge(&r.char_detection),
            char_correction: total.char_correction.merge(&r.char_correction),
        };
    }
    Ok(total)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TagReport {
    pub distribution: DistributionReport,
    /// Recorded span tags that differ from the re-derived tag.
    pub span_tag_mismatches: u64,
    pub pinyin_pct_by_char: Vec<(String, Option<f64>)>,
    pub semantic_pct_by_char: Vec<(String, Option<f64>)>,
    pub pinyin_pct_by_word: Vec<(String, Option<f64>)>,
    pub semantic_pct_by_word: Vec<(String, Option<f64>)>,
}

impl TagReport {
    fn finish(&mut self) {
        let d = &self.distribution;
        self.pinyin_pct_by_char = PinyinTag::ALL.iter().map(|t| (t.name().into(), d.by_char.pinyin_pct(*t))).collect();
        self.semantic_pct_by_char =
            SemanticTag::ALL.iter().map(|t| (t.name().into(), d.by_char.semantic_pct(*t))).collect();
        self.pinyin_pct_by_word = PinyinTag::ALL.iter().map(|t| (t.name().into(), d.by_word.pinyin_pct(*t))).collect();
        self.semantic_pct_by_word =
            SemanticTag::ALL.iter().map(|t| (t.name().into(), d.by_word.semantic_pct(*t))).collect();
    }

    /// Plain-text table of counts and percentages.
    pub fn table(&self) -> String {
        let d = &self.distribution;
        let pct = |p: Option<f64>| p.map(|v| format!("{v:6.2}%")).unwrap_or_else(|| "    N/A".into());
        let mut s = format!(
            "pairs {}  errors {} (chars)  {} (words)\n\n{:<20}{:>10}{:>9}{:>10}{:>9}\n",
            d.pairs, d.by_char.total, d.by_word.total, "tag", "chars", "", "words", ""
        );
        for t in PinyinTag::ALL {
            s += &format!(
                "{:<20}{:>10}{:>9}{:>10}{:>9}\n",
                t.name(),
                d.by_char.pinyin[t.index()],
                pct(d.by_char.pinyin_pct(t)),
                d.by_word.pinyin[t.index()],
                pct(d.by_word.pinyin_pct(t))
            );
        }
        s.push('\n');
        for t in SemanticTag::ALL {
            s += &format!(
                "{:<20}{:>10}{:>9}{:>10}{:>9}\n",
                t.name(),
                d.by_char.semantic[t.index()],
                pct(d.by_char.semantic_pct(t)),
                d.by_word.semantic[t.index()],
                pct(d.by_word.semantic_pct(t))
            );
        }
        if self.span_tag_mismatches > 0 {
            s += &format!("\nrecorded span tags that disagree with the readings: {}\n", self.span_tag_mismatches);
        }
        s
    }
}

/// Tags every pair in a JSONL or TSV file. With `segmentation`, each
/// non-empty line holds the space-separated words of the matching pair's
/// target and replaces the lexicon segmentation.
pub fn tag<R: BufRead, S: BufRead>(
    tagger: &Tagger<'_>,
    pairs: R,
    path: &Path,
    segmentation: Option<(S, &Path)>,
) -> Result<TagReport> {
    let mut report = TagReport::default();
    let mut seg = segmentation.map(|(r, p)| (formats::lines(r, p), p));
    for item in formats::lines(pairs, path) {
        let (ln, line) = item?;
        let rec = formats::parse_pair_line(&line).map_err(|m| Error::parse(path, ln, m))?;
        let errors = match &mut seg {
            None => tagger.tag_pair(&rec.source, &rec.target).map_err(|e| Error::parse(path, ln, e.to_string()))?,
            Some((lines, seg_path)) => {
                let Some(next) = lines.next() else {
                    return Err(Error::parse(*seg_path, ln, "segmentation file has fewer lines than the pair file"));
                };
                let (seg_ln, words) = next?;
                let tokens: Vec<&str> = words.split_whitespace().collect();
                tagger
                    .tag_pair_segmented(&rec.source, &rec.target, &tokens)
                    .map_err(|e| Error::parse(*seg_path, seg_ln, e.to_string()))?
            }
        };
        report.distribution.add_pair(&errors);
        for span in rec.spans.iter().flatten() {
            for (c, w) in span.correct.chars().zip(span.wrong.chars()) {
                if c != w && char_pair_tag(tagger.scheme, tagger.readings, c, w) != span.pinyin_tag {
                    report.span_tag_mismatches += 1;
                }
            }
        }
    }
    if let Some((lines, seg_path)) = &mut seg {
        if let Some(extra) = lines.next() {
            let (seg_ln, _) = extra?;
            return Err(Error::parse(*seg_path, seg_ln, "segmentation file has more lines than the pair file"));
        }
    }
    report.finish();
    Ok(report)
}
