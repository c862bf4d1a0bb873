//! TOML configuration shared by all subcommands.
//!
//! Relative paths are resolved against the directory of the config file (or
//! the working directory when no file is given). Any key can be overridden
//! from the command line with `--set section.key=value`.

use std::fs;
use std::path::{Path, PathBuf};

use cscime_core::filter::Thresholds;
use cscime_core::NoiseConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

/// Every config key with a one-line description, in file order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("paths.syllables", "syllable inventory, one toneless syllable per line"),
    ("paths.fuzzy_rules", "fuzzy pinyin pairs, one comma-separated pair per line"),
    ("paths.char_readings", "character readings: char TAB reading,reading"),
    ("paths.lexicon", "lexicon: surface TAB pinyin TAB frequency TAB entity(0/1)"),
    ("paths.lm", "n-gram model file written by train-lm"),
    ("paths.entities", "optional extra entity words, one per line"),
    ("paths.special_chars", "optional special characters file (default 他她它的地得)"),
    ("noise.pinyin_dist", "{ same, fuzzy, similar, dissimilar } probabilities of the pinyin relation"),
    ("noise.token_dist", "{ word, char } probabilities of the token granularity"),
    ("noise.num_dist", "[[errors, probability], ...] distribution of errors per sentence"),
    ("noise.delta", "minimum relative perplexity increase for a pair to be kept"),
    ("noise.max_attempts", "placement attempts per sentence before giving up"),
    ("noise.enable_lm_filter", "apply the perplexity filter (true/false)"),
    ("filter.special", "threshold for special characters, in [0, 1]"),
    ("filter.entity", "threshold for entity characters, in [0, 1]"),
    ("filter.normal", "threshold for other characters, in [0, 1]"),
    ("filter.surprisal_cap", "surprisal in nats that maps to probability 1 (default: <unk> surprisal)"),
    ("lm.order", "n-gram order for train-lm, 1 to 9"),
    ("lm.discount", "absolute discount for train-lm, in (0, 1)"),
    ("run.seed", "base random seed; sentence i uses seed + i"),
    ("run.parallelism", "worker threads for generate and filter"),
    ("run.chunk_size", "sentences read per batch"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub syllables: PathBuf,
    pub fuzzy_rules: PathBuf,
    pub char_readings: PathBuf,
    pub lexicon: PathBuf,
    pub lm: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entities: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub special_chars: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            syllables: "data/syllables.txt".into(),
            fuzzy_rules: "data/fuzzy_rules.txt".into(),
            char_readings: "data/char_readings.tsv".into(),
            lexicon: "data/lexicon.tsv".into(),
            lm: "models/people_daily.lm".into(),
            entities: None,
            special_chars: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub special: f64,
    pub entity: f64,
    pub normal: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surprisal_cap: Option<f64>,
}

impl Default for FilterSection {
    fn default() -> Self {
        let t = Thresholds::default();
        FilterSection { special: t.special, entity: t.entity, normal: t.normal, surprisal_cap: None }
    }
}

impl FilterSection {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { special: self.special, entity: self.entity, normal: self.normal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmSection {
    pub order: usize,
    pub discount: f64,
}

impl Default for LmSection {
    fn default() -> Self {
        LmSection { order: 3, discount: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub parallelism: usize,
    pub chunk_size: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 42, parallelism: 1, chunk_size: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub noise: NoiseConfig,
    pub filter: FilterSection,
    pub lm: LmSection,
    pub run: RunSection,
}

impl Config {
    /// Reads `path` (or starts from defaults), applies `key=value`
    /// overrides, resolves relative paths and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let (mut table, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p).at(p)?;
                let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
                    let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
                    Error::parse(p, line, e.message().to_string())
                })?;
                (table, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: Config = table.try_into().map_err(|e: toml::de::Error| Error::validation(e.message()))?;
        cfg.paths.resolve(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Collects every violated constraint, each prefixed by its key.
    pub fn validate(&self) -> Result<()> {
        let mut issues: Vec<String> = Vec::new();
        if let Err(list) = self.noise.validate() {
            issues.extend(list.into_iter().map(|i| format!("{}: {}", i.key, i.message)));
        }
        for (key, v) in [
            ("filter.special", self.filter.special),
            ("filter.entity", self.filter.entity),
            ("filter.normal", self.filter.normal),
        ] {
            if !(0.0..=1.0).contains(&v) {
                issues.push(format!("{key}: {v} is outside [0, 1]"));
            }
        }
        if let Some(cap) = self.filter.surprisal_cap {
            if !(cap.is_finite() && cap > 0.0) {
                issues.push(format!("filter.surprisal_cap: must be positive, got {cap}"));
            }
        }
        if !(1..=cscime_core::lm::MAX_ORDER).contains(&self.lm.order) {
            issues.push(format!(
                "lm.order: must be between 1 and {}, got {}",
                cscime_core::lm::MAX_ORDER,
                self.lm.order
            ));
        }
        if !(self.lm.discount > 0.0 && self.lm.discount < 1.0) {
            issues.push(format!("lm.discount: must lie in (0, 1), got {}", self.lm.discount));
        }
        if self.run.parallelism == 0 {
            issues.push("run.parallelism: must be at least 1".into());
        }
        if self.run.chunk_size == 0 {
            issues.push("run.chunk_size: must be at least 1".into());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// Fails with one message per missing file among `keys` (e.g. `"paths.lm"`).
    pub fn require_files(&self, keys: &[&str]) -> Result<()> {
        let mut missing = Vec::new();
        for key in keys {
            let path = match *key {
                "paths.syllables" => Some(&self.paths.syllables),
                "paths.fuzzy_rules" => Some(&self.paths.fuzzy_rules),
                "paths.char_readings" => Some(&self.paths.char_readings),
                "paths.lexicon" => Some(&self.paths.lexicon),
                "paths.lm" => Some(&self.paths.lm),
                "paths.entities" => self.paths.entities.as_ref(),
                "paths.special_chars" => self.paths.special_chars.as_ref(),
                other => return Err(Error::Internal(format!("unknown path key {other}"))),
            };
            if let Some(p) = path {
                if !p.is_file() {
                    missing.push(format!("{key}: file {} does not exist", p.display()));
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(missing))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !base.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.syllables, &mut self.fuzzy_rules, &mut self.char_readings, &mut self.lexicon, &mut self.lm]
        {
            fix(p);
        }
        for p in [&mut self.entities, &mut self.special_chars].into_iter().flatten() {
            fix(p);
        }
    }
}

/// Applies one `section.key=value` override. The value is read as a TOML
/// value, falling back to a plain string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Error::validation(format!("--set {spec}: expected section.key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::validation(format!("--set {spec}: key must look like section.key")))?;
    if !CONFIG_KEYS.iter().any(|(k, _)| *k == key.trim()) {
        return Err(Error::validation(format!("--set {spec}: unknown key {}", key.trim())));
    }
    let value: toml::Value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(Error::validation(format!("{section}: expected a table"))),
    }
}
