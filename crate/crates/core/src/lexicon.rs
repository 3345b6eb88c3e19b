//! SentiWordNet 3.0 ingestion, stemmed sentiment tables and the synonym table.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::porter::porter_stem;

/// The four WordNet word classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosClass {
    Adjective,
    Noun,
    Verb,
    Adverb,
}

impl PosClass {
    pub const ALL: [PosClass; 4] = [
        PosClass::Adjective,
        PosClass::Noun,
        PosClass::Verb,
        PosClass::Adverb,
    ];

    pub fn letter(self) -> char {
        match self {
            PosClass::Adjective => 'a',
            PosClass::Noun => 'n',
            PosClass::Verb => 'v',
            PosClass::Adverb => 'r',
        }
    }
}

impl fmt::Display for PosClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for PosClass {
    type Err = ();

    /// WordNet letters; `s` (satellite adjective) folds into `a`.
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "a" | "s" => Ok(PosClass::Adjective),
            "n" => Ok(PosClass::Noun),
            "v" => Ok(PosClass::Verb),
            "r" => Ok(PosClass::Adverb),
            _ => Err(()),
        }
    }
}

/// Lowercases, keeps ASCII letters only and Porter-stems. `None` when
/// nothing is left. Used for lexicon terms and tweet tokens alike.
pub fn stem_key(word: &str) -> Option<String> {
    let letters: String = word
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if letters.is_empty() {
        None
    } else {
        Some(porter_stem(&letters))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynsetRow {
    pub pos: PosClass,
    pub id: String,
    pub pos_score: f64,
    pub neg_score: f64,
    /// `(word, sense number)` pairs from the `word#sense` list.
    pub terms: Vec<(String, u32)>,
    pub gloss: String,
}

pub fn parse_sentiwordnet(path: impl AsRef<Path>) -> Result<Vec<SynsetRow>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sentiwordnet_str(&content)
}

pub fn parse_sentiwordnet_str(content: &str) -> Result<Vec<SynsetRow>> {
    const CTX: &str = "sentiwordnet";
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(Error::parse(
                CTX,
                line_no,
                format!("expected 6 tab-separated columns, found {}", cols.len()),
            ));
        }
        let pos = cols[0]
            .trim()
            .parse::<PosClass>()
            .map_err(|_| Error::parse(CTX, line_no, format!("unknown POS `{}`", cols[0])))?;
        let score = |s: &str, name: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::parse(CTX, line_no, format!("bad {name} `{s}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    CTX,
                    format!("line {line_no}: {name} {v} outside [0, 1]"),
                ));
            }
            Ok(v)
        };
        let pos_score = score(cols[2], "PosScore")?;
        let neg_score = score(cols[3], "NegScore")?;
        let terms = cols[4]
            .split_whitespace()
            .map(|t| match t.rsplit_once('#') {
                Some((word, sense)) => sense
                    .parse::<u32>()
                    .map(|n| (word.to_string(), n))
                    .map_err(|_| Error::parse(CTX, line_no, format!("bad sense in `{t}`"))),
                None => Err(Error::parse(
                    CTX,
                    line_no,
                    format!("term `{t}` lacks #sense"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(SynsetRow {
            pos,
            id: cols[1].trim().to_string(),
            pos_score,
            neg_score,
            terms,
            gloss: cols[5].to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub pos: f64,
    pub neg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub stem: String,
    pub pos: Option<PosClass>,
    pub weights: Weights,
}

/// Collects every `(key, pos score, neg score)` occurrence and averages per
/// key. Contributions are sorted before summation so the result does not
/// depend on row order.
fn average_by<K, F>(rows: &[SynsetRow], mut key: F) -> HashMap<K, Weights>
where
    K: std::hash::Hash + Eq,
    F: FnMut(&str, PosClass) -> Option<K>,
{
    let mut acc: HashMap<K, Vec<(f64, f64)>> = HashMap::new();
    for row in rows {
        for (word, _sense) in &row.terms {
            // multi-word collocations never match a single tweet token
            if word.contains('_') {
                continue;
            }
            if let Some(k) = key(word, row.pos) {
                acc.entry(k)
                    .or_default()
                    .push((row.pos_score, row.neg_score));
            }
        }
    }
    acc.into_iter()
        .map(|(k, mut v)| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let n = v.len() as f64;
            let pos = v.iter().map(|x| x.0).sum::<f64>() / n;
            let neg = v.iter().map(|x| x.1).sum::<f64>() / n;
            (k, Weights { pos, neg })
        })
        .collect()
}

/// Stem -> weights averaged over every POS and sense; equal-weight stems dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosAgnosticTable {
    entries: HashMap<String, Weights>,
}

impl PosAgnosticTable {
    pub fn get(&self, stem: &str) -> Option<Weights> {
        self.entries.get(stem).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = LexiconEntry> + '_ {
        self.entries.iter().map(|(s, w)| LexiconEntry {
            stem: s.clone(),
            pos: None,
            weights: *w,
        })
    }
}

pub fn build_pos_agnostic_table(rows: &[SynsetRow]) -> PosAgnosticTable {
    let mut entries = average_by(rows, |w, _| stem_key(w));
    entries.retain(|_, w| w.pos != w.neg);
    PosAgnosticTable { entries }
}

/// `(stem, POS)` -> weights averaged over senses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosAwareTable {
    entries: HashMap<String, [Option<Weights>; 4]>,
}

impl PosAwareTable {
    pub fn get(&self, stem: &str, pos: PosClass) -> Option<Weights> {
        self.entries.get(stem).and_then(|slots| slots[pos as usize])
    }

    pub fn len(&self) -> usize {
        self.entries
            .values()
            .flatten()
            .filter(|w| w.is_some())
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = LexiconEntry> + '_ {
        self.entries.iter().flat_map(|(s, slots)| {
            PosClass::ALL.into_iter().filter_map(move |p| {
                slots[p as usize].map(|w| LexiconEntry {
                    stem: s.clone(),
                    pos: Some(p),
                    weights: w,
                })
            })
        })
    }
}

/// With `drop_equal` set, entries whose positive and negative weights are
/// equal are removed, as in the POS-agnostic table. Off by default.
pub fn build_pos_aware_table(rows: &[SynsetRow], drop_equal: bool) -> PosAwareTable {
    let mut averaged = average_by(rows, |w, pos| stem_key(w).map(|s| (s, pos)));
    if drop_equal {
        averaged.retain(|_, w| w.pos != w.neg);
    }
    let mut entries: HashMap<String, [Option<Weights>; 4]> = HashMap::new();
    for ((stem, pos), w) in averaged {
        entries.entry(stem).or_default()[pos as usize] = Some(w);
    }
    PosAwareTable { entries }
}

/// Headword -> synonyms, both lowercase. No list is empty and no headword
/// lists itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymTable {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn get(&self, headword: &str) -> Option<&[String]> {
        self.entries.get(headword).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(content: &str) -> Result<SynonymTable> {
        const CTX: &str = "synonyms";
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, syns) = line.split_once('\t').ok_or_else(|| {
                Error::parse(CTX, i + 1, "missing TAB between headword and synonyms")
            })?;
            let head = head.trim().to_lowercase();
            if head.is_empty() {
                return Err(Error::parse(CTX, i + 1, "empty headword"));
            }
            let list = entries.entry(head.clone()).or_default();
            for syn in syns.split(',') {
                let syn = syn.trim().to_lowercase();
                if syn.is_empty() || syn == head || list.contains(&syn) {
                    continue;
                }
                list.push(syn);
            }
        }
        entries.retain(|_, v| !v.is_empty());
        Ok(SynonymTable { entries })
    }

    pub fn from_pairs<I, S>(pairs: I) -> SynonymTable
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut content = String::new();
        for (h, syns) in pairs {
            let joined: Vec<&str> = syns.iter().map(AsRef::as_ref).collect();
            content.push_str(&format!("{}\t{}\n", h.as_ref(), joined.join(",")));
        }
        SynonymTable::parse(&content).expect("tab-separated by construction")
    }
}

pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymTable> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SynonymTable::parse(&content)
}
