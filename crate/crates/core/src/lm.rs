//! Character n-gram language model with interpolated absolute discounting,
//! stored and scored in ARPA backoff form.
//!
//! For a history `h` with count `c(h) > 0`:
//!
//! ```text
//! p(w | h) = max(c(h w) - D, 0) / c(h) + D * N(h) / c(h) * p(w | h')
//! ```
//!
//! where `N(h)` is the number of distinct continuations of `h` and `h'` drops
//! the oldest character. Unseen histories defer to `h'`; the unigram level
//! interpolates with a uniform distribution over the vocabulary (characters,
//! `</s>` and `<unk>`), which keeps every probability non-zero.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use hashbrown::HashMap;
use thiserror::Error;

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const UNK: u32 = 2;
const FIRST_CHAR_ID: u32 = 3;

pub const MAX_ORDER: usize = 9;
pub const FORMAT_VERSION: u32 = 1;
const SENTINEL_LOG10: f64 = -99.0;
const LN_10: f64 = core::f64::consts::LN_10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmError {
    #[error("training corpus contains no non-empty sentence")]
    EmptyCorpus,
    #[error("order must be between 1 and {MAX_ORDER}, got {0}")]
    InvalidOrder(usize),
    #[error("discount must lie strictly between 0 and 1, got {0}")]
    InvalidDiscount(f64),
    #[error("cannot score an empty sentence")]
    EmptySentence,
    #[error("unsupported model format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    /// `None` for n-grams that are only ever histories (`<s>`, `<s> <s>`).
    log10_prob: Option<f64>,
    log10_backoff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    discount: f64,
    chars: Vec<char>,
    ids: HashMap<char, u32>,
    table: HashMap<Box<[u32]>, Entry>,
}

#[derive(Default)]
struct Counts {
    grams: HashMap<Box<[u32]>, u64>,
    // history -> (total continuations, distinct continuations)
    histories: HashMap<Box<[u32]>, (u64, u64)>,
}

impl NGramModel {
    /// Trains on `corpus`; empty sentences are skipped.
    pub fn train<I, S>(corpus: I, order: usize, discount: f64) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if order == 0 || order > MAX_ORDER {
            return Err(LmError::InvalidOrder(order));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(LmError::InvalidDiscount(discount));
        }
        let mut model = NGramModel { order, discount, chars: Vec::new(), ids: HashMap::new(), table: HashMap::new() };
        // counts[k] holds (k+1)-grams
        let mut counts: Vec<Counts> = (0..order).map(|_| Counts::default()).collect();
        let mut seq: Vec<u32> = Vec::new();
        let mut any = false;
        for sentence in corpus {
            let sentence = sentence.as_ref();
            if sentence.is_empty() {
                continue;
            }
            any = true;
            seq.clear();
            seq.resize(order - 1, BOS);
            for c in sentence.chars() {
                let id = model.intern(c);
                seq.push(id);
            }
            seq.push(EOS);
            for j in order - 1..seq.len() {
                for (k, level) in counts.iter_mut().enumerate() {
                    let gram = &seq[j - k..=j];
                    *level.grams.entry_ref(gram).or_insert(0) += 1;
                }
            }
        }
        if !any {
            return Err(LmError::EmptyCorpus);
        }
        for level in counts.iter_mut() {
            let mut hist: HashMap<Box<[u32]>, (u64, u64)> = HashMap::new();
            for (gram, &c) in &level.grams {
                let h = hist.entry_ref(&gram[..gram.len() - 1]).or_insert((0, 0));
                h.0 += c;
                h.1 += 1;
            }
            level.histories = hist;
        }
        model.fill_table(&counts);
        Ok(model)
    }

    fn intern(&mut self, c: char) -> u32 {
        if let Some(&id) = self.ids.get(&c) {
            return id;
        }
        let id = FIRST_CHAR_ID + self.chars.len() as u32;
        self.chars.push(c);
        self.ids.insert(c, id);
        id
    }

    fn fill_table(&mut self, counts: &[Counts]) {
        let uniform = 1.0 / self.vocab_size() as f64;
        let d = self.discount;
        // interpolated probability straight from counts
        let prob = |gram: &[u32]| -> f64 {
            let w = gram[gram.len() - 1];
            let (total, distinct) = counts[0].histories[&[][..]];
            let c = counts[0].grams.get(&[w][..]).copied().unwrap_or(0);
            let mut p = (c as f64 - d).max(0.0) / total as f64 + d * distinct as f64 / total as f64 * uniform;
            for k in 1..gram.len() {
                let hist = &gram[gram.len() - 1 - k..gram.len() - 1];
                if let Some(&(total, distinct)) = counts[k].histories.get(hist) {
                    let c = counts[k].grams.get(&gram[gram.len() - 1 - k..]).copied().unwrap_or(0);
                    p = (c as f64 - d).max(0.0) / total as f64 + d * distinct as f64 / total as f64 * p;
                }
            }
            p
        };
        let mut table: HashMap<Box<[u32]>, Entry> = HashMap::new();
        let unigram_ids = [EOS, UNK].into_iter().chain(FIRST_CHAR_ID..FIRST_CHAR_ID + self.chars.len() as u32);
        for w in unigram_ids {
            let e = Entry { log10_prob: Some(libm::log10(prob(&[w]))), log10_backoff: None };
            table.insert(Box::from([w].as_slice()), e);
        }
        for level in &counts[1..] {
            for gram in level.grams.keys() {
                let e = Entry { log10_prob: Some(libm::log10(prob(gram))), log10_backoff: None };
                table.insert(gram.clone(), e);
            }
        }
        for level in &counts[1..] {
            for (hist, &(total, distinct)) in &level.histories {
                let gamma = d * distinct as f64 / total as f64;
                let e = table.entry_ref(&hist[..]).or_insert(Entry { log10_prob: None, log10_backoff: None });
                e.log10_backoff = Some(libm::log10(gamma));
            }
        }
        self.table = table;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Predictable tokens: characters, `</s>` and `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn contains_char(&self, c: char) -> bool {
        self.ids.contains_key(&c)
    }

    /// Number of stored n-grams of each order, index 0 = unigrams.
    pub fn ngram_counts(&self) -> Vec<usize> {
        let mut out = alloc::vec![0; self.order];
        for k in self.table.keys() {
            out[k.len() - 1] += 1;
        }
        out
    }

    fn id(&self, c: char) -> u32 {
        self.ids.get(&c).copied().unwrap_or(UNK)
    }

    /// log10 p(w | history); only the last `order - 1` history ids matter.
    fn log10_cond(&self, history: &[u32], w: u32) -> f64 {
        let keep = history.len().min(self.order - 1);
        let mut h = &history[history.len() - keep..];
        let mut buf = [0u32; MAX_ORDER];
        let mut acc = 0.0;
        loop {
            buf[..h.len()].copy_from_slice(h);
            buf[h.len()] = w;
            if let Some(p) = self.table.get(&buf[..=h.len()]).and_then(|e| e.log10_prob) {
                return acc + p;
            }
            if h.is_empty() {
                // w is always a unigram; reachable only for BOS
                return acc + SENTINEL_LOG10;
            }
            acc += self.table.get(h).and_then(|e| e.log10_backoff).unwrap_or(0.0);
            h = &h[1..];
        }
    }

    /// Natural-log probability of `w` given the preceding ids.
    pub fn ln_prob_ids(&self, history: &[u32], w: u32) -> f64 {
        self.log10_cond(history, w) * LN_10
    }

    /// Token ids of `text` with BOS padding of `order - 1`.
    fn padded(&self, text: &str) -> Vec<u32> {
        let mut v = alloc::vec![BOS; self.order - 1];
        v.extend(text.chars().map(|c| self.id(c)));
        v
    }

    /// Natural-log probability of `continuation` typed after `context`, where
    /// `context` starts at the beginning of a sentence. No end marker.
    pub fn ln_prob_continuation(&self, context: &str, continuation: &str) -> f64 {
        let mut ids = alloc::vec![BOS; self.order - 1];
        // only the tail of the context can influence the score
        let tail: Vec<u32> = context.chars().rev().take(self.order - 1).map(|c| self.id(c)).collect();
        ids.extend(tail.into_iter().rev());
        let mut total = 0.0;
        for c in continuation.chars() {
            let w = self.id(c);
            total += self.ln_prob_ids(&ids, w);
            ids.push(w);
        }
        total
    }

    /// Natural-log probability of every character of `sentence` (no `</s>`).
    pub fn char_ln_probs(&self, sentence: &str) -> Vec<f64> {
        let ids = self.padded(sentence);
        (self.order - 1..ids.len()).map(|j| self.ln_prob_ids(&ids[..j], ids[j])).collect()
    }

    /// Total natural-log probability including the `</s>` transition.
    pub fn sentence_ln_prob(&self, sentence: &str) -> f64 {
        let mut ids = self.padded(sentence);
        ids.push(EOS);
        (self.order - 1..ids.len()).map(|j| self.ln_prob_ids(&ids[..j], ids[j])).sum()
    }

    /// `exp(-(1/N) * sum ln p)`, N = characters + 1 for `</s>`.
    pub fn perplexity(&self, sentence: &str) -> Result<f64, LmError> {
        if sentence.is_empty() {
            return Err(LmError::EmptySentence);
        }
        let n = sentence.chars().count() + 1;
        Ok(libm::exp(-self.sentence_ln_prob(sentence) / n as f64))
    }

    /// `(PPL(noised) - PPL(origin)) / PPL(origin)`.
    pub fn relative_ppl_increase(&self, origin: &str, noised: &str) -> Result<f64, LmError> {
        let base = self.perplexity(origin)?;
        Ok((self.perplexity(noised)? - base) / base)
    }

    /// Every history id sequence the model holds a backoff weight for.
    pub fn histories(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> =
            self.table.iter().filter(|(_, e)| e.log10_backoff.is_some()).map(|(k, _)| k.to_vec()).collect();
        out.push(Vec::new());
        out.sort();
        out
    }

    /// All predictable ids (`</s>`, `<unk>`, characters).
    pub fn predictable_ids(&self) -> impl Iterator<Item = u32> {
        [EOS, UNK].into_iter().chain(FIRST_CHAR_ID..FIRST_CHAR_ID + self.chars.len() as u32)
    }

    /// Id of `c` (`<unk>` when out of vocabulary).
    pub fn char_id(&self, c: char) -> u32 {
        self.id(c)
    }

    fn token_text(&self, id: u32, out: &mut String) {
        match id {
            BOS => out.push_str("<s>"),
            EOS => out.push_str("</s>"),
            UNK => out.push_str("<unk>"),
            _ => {
                let c = self.chars[(id - FIRST_CHAR_ID) as usize];
                if c.is_whitespace() || c.is_control() {
                    let _ = write!(out, "<U+{:04X}>", c as u32);
                } else {
                    out.push(c);
                }
            }
        }
    }

    /// ARPA-style text with a version header. Entries are sorted so equal
    /// models serialize identically.
    pub fn to_arpa(&self) -> String {
        let mut by_order: Vec<Vec<(String, Entry)>> = (0..self.order).map(|_| Vec::new()).collect();
        for (gram, e) in &self.table {
            let mut s = String::new();
            for (i, &id) in gram.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                self.token_text(id, &mut s);
            }
            by_order[gram.len() - 1].push((s, *e));
        }
        // the bare <s> unigram carries the backoff of the empty-history padding
        if !self.table.contains_key(&[BOS][..]) {
            by_order[0].push(("<s>".to_string(), Entry { log10_prob: None, log10_backoff: None }));
        }
        for level in by_order.iter_mut() {
            level.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let mut out = String::new();
        let _ = writeln!(out, "cscime-lm {FORMAT_VERSION}");
        let _ = writeln!(out, "order={}", self.order);
        let _ = writeln!(out, "discount={}", self.discount);
        let _ = writeln!(out, "vocab={}", self.vocab_size());
        out.push_str("\n\\data\\\n");
        for (k, level) in by_order.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", k + 1, level.len());
        }
        for (k, level) in by_order.iter().enumerate() {
            let _ = writeln!(out, "\n\\{}-grams:", k + 1);
            for (gram, e) in level {
                let p = e.log10_prob.unwrap_or(SENTINEL_LOG10);
                match e.log10_backoff {
                    Some(b) => {
                        let _ = writeln!(out, "{p}\t{gram}\t{b}");
                    }
                    None => {
                        let _ = writeln!(out, "{p}\t{gram}");
                    }
                }
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    /// Parses the text written by [`NGramModel::to_arpa`].
    pub fn from_arpa(text: &str) -> Result<Self, LmError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let err = |line: usize, msg: &str| LmError::Parse { line, msg: msg.to_string() };

        fn next_content<'t>(lines: &mut impl Iterator<Item = (usize, &'t str)>) -> Option<(usize, &'t str)> {
            lines.find(|(_, l)| !l.trim().is_empty())
        }
        let (ln, first) = next_content(&mut lines).ok_or_else(|| err(1, "empty model file"))?;
        let version =
            first.strip_prefix("cscime-lm ").ok_or_else(|| err(ln, "missing `cscime-lm <version>` header"))?.trim();
        if version != "1" {
            return Err(LmError::UnsupportedVersion(version.to_string()));
        }
        let mut order = None;
        let mut discount = None;
        let mut last_line = ln;
        loop {
            let (ln, l) = next_content(&mut lines).ok_or_else(|| err(last_line, "missing \\data\\ section"))?;
            last_line = ln;
            if l == "\\data\\" {
                break;
            }
            match l.split_once('=') {
                Some(("order", v)) => order = Some(v.trim().parse::<usize>().map_err(|_| err(ln, "bad order"))?),
                Some(("discount", v)) => discount = Some(v.trim().parse::<f64>().map_err(|_| err(ln, "bad discount"))?),
                Some(("vocab", _)) => {}
                _ => return Err(err(ln, "unexpected header line")),
            }
        }
        let order = order.ok_or_else(|| err(last_line, "header lacks order"))?;
        if order == 0 || order > MAX_ORDER {
            return Err(err(last_line, "order out of range"));
        }
        let discount = discount.unwrap_or(0.0);
        let mut declared = Vec::new();
        for k in 1..=order {
            let (ln, l) = next_content(&mut lines).ok_or_else(|| err(last_line, "truncated \\data\\ section"))?;
            last_line = ln;
            let n = l
                .strip_prefix(&alloc::format!("ngram {k}="))
                .and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| err(ln, "expected `ngram k=count`"))?;
            declared.push(n);
        }
        let mut model = NGramModel { order, discount, chars: Vec::new(), ids: HashMap::new(), table: HashMap::new() };
        for (k, &n) in declared.iter().enumerate() {
            let (ln, l) = next_content(&mut lines).ok_or_else(|| err(last_line, "truncated model file"))?;
            last_line = ln;
            if l != alloc::format!("\\{}-grams:", k + 1) {
                return Err(err(ln, "expected n-gram section header"));
            }
            for _ in 0..n {
                let (ln, l) = lines.next().ok_or_else(|| err(last_line, "truncated n-gram section"))?;
                last_line = ln;
                let mut f = l.split('\t');
                let (p, gram, b) = (f.next(), f.next(), f.next());
                let p: f64 = p.and_then(|v| v.parse().ok()).ok_or_else(|| err(ln, "bad probability"))?;
                let gram = gram.ok_or_else(|| err(ln, "missing n-gram"))?;
                let b: Option<f64> = match b {
                    Some(v) => Some(v.parse().map_err(|_| err(ln, "bad backoff"))?),
                    None => None,
                };
                let mut key = Vec::with_capacity(k + 1);
                for tok in gram.split(' ') {
                    key.push(model.parse_token(tok, k == 0).ok_or_else(|| err(ln, "bad token"))?);
                }
                if key.len() != k + 1 {
                    return Err(err(ln, "n-gram length does not match its section"));
                }
                let e = Entry { log10_prob: (p > SENTINEL_LOG10).then_some(p), log10_backoff: b };
                model.table.insert(key.into_boxed_slice(), e);
            }
        }
        match next_content(&mut lines) {
            Some((_, "\\end\\")) => Ok(model),
            Some((ln, _)) => Err(err(ln, "expected \\end\\")),
            None => Err(err(last_line, "truncated model file: missing \\end\\")),
        }
    }

    fn parse_token(&mut self, tok: &str, define: bool) -> Option<u32> {
        let c = match tok {
            "<s>" => return Some(BOS),
            "</s>" => return Some(EOS),
            "<unk>" => return Some(UNK),
            t if t.starts_with("<U+") && t.ends_with('>') => {
                char::from_u32(u32::from_str_radix(&t[3..t.len() - 1], 16).ok()?)?
            }
            t => {
                let mut it = t.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => c,
                    _ => return None,
                }
            }
        };
        match self.ids.get(&c) {
            Some(&id) => Some(id),
            None if define => Some(self.intern(c)),
            None => None,
        }
    }
}
