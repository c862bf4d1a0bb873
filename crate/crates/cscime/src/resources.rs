//! Loading the data files named in the config.

use std::fs;
use std::path::Path;

use cscime_core::{CharReadings, FuzzyRuleSet, Lexicon, NGramModel, PinyinScheme, PinyinSeq, SpecialChars};

use crate::config::Config;
use crate::error::{Error, IoContext, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).at(path)
}

pub fn load_scheme(cfg: &Config) -> Result<PinyinScheme> {
    cfg.require_files(&["paths.syllables", "paths.fuzzy_rules"])?;
    let rules_text = read_text(&cfg.paths.fuzzy_rules)?;
    let rules = FuzzyRuleSet::parse(&rules_text).map_err(|e| parse_err(&cfg.paths.fuzzy_rules, e))?;
    let text = read_text(&cfg.paths.syllables)?;
    PinyinScheme::parse(&text, rules).map_err(|e| parse_err(&cfg.paths.syllables, e))
}

pub fn load_readings(cfg: &Config, scheme: &PinyinScheme) -> Result<CharReadings> {
    cfg.require_files(&["paths.char_readings"])?;
    let text = read_text(&cfg.paths.char_readings)?;
    CharReadings::parse(&text, scheme).map_err(|e| parse_err(&cfg.paths.char_readings, e))
}

pub fn load_lexicon_file(path: &Path, scheme: &PinyinScheme) -> Result<Lexicon> {
    let text = read_text(path)?;
    Lexicon::parse(&text, scheme).map_err(|e| match e {
        cscime_core::LexiconError::Parse { line, msg } => Error::parse(path, line, msg),
    })
}

/// The lexicon plus the optional entity list. Entity words missing from the
/// lexicon are added with their characters' primary readings.
pub fn load_lexicon(cfg: &Config, scheme: &PinyinScheme, readings: &CharReadings) -> Result<Lexicon> {
    cfg.require_files(&["paths.lexicon", "paths.entities"])?;
    let mut lex = load_lexicon_file(&cfg.paths.lexicon, scheme)?;
    if let Some(path) = &cfg.paths.entities {
        let text = read_text(path)?;
        for (i, line) in text.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            if lex.mark_entity(word) {
                continue;
            }
            let syllables: Option<Vec<_>> =
                word.chars().map(|c| readings.get(c).map(|r| r[0].syllables()[0])).collect();
            let Some(syllables) = syllables else {
                return Err(Error::parse(path, i + 1, format!("{word}: a character has no known reading")));
            };
            let reading = PinyinSeq::new(syllables).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            lex.add(word, reading, 0, true).map_err(|m| Error::parse(path, i + 1, m))?;
        }
    }
    Ok(lex)
}

pub fn load_special(cfg: &Config) -> Result<SpecialChars> {
    match &cfg.paths.special_chars {
        None => Ok(SpecialChars::default()),
        Some(path) => {
            cfg.require_files(&["paths.special_chars"])?;
            let text = read_text(path)?;
            let chars = text.lines().filter(|l| !l.starts_with('#')).flat_map(str::chars);
            Ok(SpecialChars::from_chars(chars))
        }
    }
}

pub fn load_model(path: &Path) -> Result<NGramModel> {
    let text = read_text(path)?;
    NGramModel::from_arpa(&text).map_err(|e| match e {
        cscime_core::LmError::Parse { line, msg } => Error::parse(path, line, msg),
        other => Error::parse(path, 1, other.to_string()),
    })
}

fn parse_err(path: &Path, e: cscime_core::PinyinError) -> Error {
    match e {
        cscime_core::PinyinError::Parse { line, msg } => Error::parse(path, line, msg),
        other => Error::parse(path, 0, other.to_string()),
    }
}

/// Everything generation and tagging need.
pub struct Resources {
    pub scheme: PinyinScheme,
    pub readings: CharReadings,
    pub lexicon: Lexicon,
    pub special: SpecialChars,
}

impl Resources {
    pub fn load(cfg: &Config) -> Result<Resources> {
        let scheme = load_scheme(cfg)?;
        let readings = load_readings(cfg, &scheme)?;
        let lexicon = load_lexicon(cfg, &scheme, &readings)?;
        let special = load_special(cfg)?;
        Ok(Resources { scheme, readings, lexicon, special })
    }
}
