//! Line-oriented file formats: pair output (JSONL or TSV), pair input, and
//! the lexicon writer.

use std::io::{BufRead, Write};
use std::path::Path;

use cscime_core::noise::ErrorSpan;
use cscime_core::{Lexicon, SentencePair};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PairFormat {
    #[default]
    Jsonl,
    Tsv,
}

pub fn write_pair<W: Write>(out: &mut W, pair: &SentencePair, format: PairFormat) -> std::io::Result<()> {
    match format {
        PairFormat::Jsonl => {
            serde_json::to_writer(&mut *out, pair)?;
            out.write_all(b"\n")
        }
        PairFormat::Tsv => writeln!(out, "{}\t{}", pair.source, pair.target),
    }
}

/// A pair read back from JSONL (with spans) or TSV (without).
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub source: String,
    pub target: String,
    pub spans: Option<Vec<ErrorSpan>>,
}

pub fn parse_pair_line(line: &str) -> std::result::Result<PairRecord, String> {
    if line.trim_start().starts_with('{') {
        let p: SentencePair = serde_json::from_str(line).map_err(|e| e.to_string())?;
        Ok(PairRecord { source: p.source, target: p.target, spans: Some(p.spans) })
    } else {
        let (s, t) = line.split_once('\t').ok_or("expected source TAB target or a JSON object")?;
        Ok(PairRecord { source: s.to_string(), target: t.trim_end().to_string(), spans: None })
    }
}

/// Non-empty trimmed lines with 1-based line numbers; read errors carry the
/// line position.
pub fn lines<'a, R: BufRead + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, l)| match l {
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty()).then(|| Ok((i + 1, t.to_string())))
        }
        Err(e) => Some(Err(Error::parse(path, i + 1, format!("read failed: {e}")))),
    })
}

/// Writes one line per (surface, reading).
pub fn write_lexicon<W: Write>(out: &mut W, lex: &Lexicon, path: &Path) -> Result<()> {
    writeln!(out, "# surface\treadings\tfrequency\tentity").at(path)?;
    for e in lex.entries() {
        for r in &e.readings {
            writeln!(out, "{}\t{}\t{}\t{}", e.surface, r.to_spaced(), e.frequency, e.is_entity as u8).at(path)?;
        }
    }
    Ok(())
}
