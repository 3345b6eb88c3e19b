//! Keyword lists and party-relevant tweet selection.
//!
//! Keyword file conventions: a leading `#` marks a Twitter topic, a leading
//! `_` marks a term that must appear as a whole, case-sensitive token, and a
//! `_` glued to either side of a word inside an n-gram (`Lib_ _Dem`) marks a
//! required space and is dropped. One-word keywords match case-sensitively;
//! multi-word keywords match when every word appears, in any order, ignoring
//! case.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::corpus::Tweet;
use crate::error::{Error, Result};
use crate::party::Party;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchMode {
    UnigramCaseSensitive,
    NgramAllTerms,
    Topic,
    SpacePrefixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyword {
    pub raw: String,
    pub mode: MatchMode,
    pub terms: Vec<String>,
}

impl Keyword {
    pub fn parse(raw: &str) -> Option<Keyword> {
        let raw = raw.trim();
        if let Some(rest) = raw.strip_prefix('#') {
            let term = rest.trim();
            if term.is_empty() {
                return None;
            }
            return Some(Keyword {
                raw: raw.to_string(),
                mode: MatchMode::Topic,
                terms: vec![term.to_string()],
            });
        }
        let terms: Vec<String> = raw
            .split_whitespace()
            .map(|w| w.trim_matches('_'))
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        if terms.is_empty() {
            return None;
        }
        let mode = if raw.starts_with('_') {
            MatchMode::SpacePrefixed
        } else if terms.len() >= 2 {
            MatchMode::NgramAllTerms
        } else {
            MatchMode::UnigramCaseSensitive
        };
        Some(Keyword {
            raw: raw.to_string(),
            mode,
            terms,
        })
    }

    pub fn matches(&self, tweet: &Tweet) -> bool {
        self.matches_tokens(&tweet.tokens())
    }

    pub fn matches_tokens(&self, tokens: &[String]) -> bool {
        match self.mode {
            MatchMode::UnigramCaseSensitive | MatchMode::SpacePrefixed => self
                .terms
                .iter()
                .all(|term| tokens.iter().any(|t| t == term)),
            MatchMode::NgramAllTerms => self.terms.iter().all(|term| {
                let term = term.to_lowercase();
                tokens.iter().any(|t| t.to_lowercase() == term)
            }),
            MatchMode::Topic => {
                let tag = format!("#{}", self.terms[0]);
                tokens.contains(&tag)
            }
        }
    }
}

pub fn matches(tweet: &Tweet, kw: &Keyword) -> bool {
    kw.matches(tweet)
}

/// Splits on whitespace and strips leading and trailing punctuation, keeping a
/// `#` directly in front of the first alphanumeric character. Case is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|word| {
            let trimmed = word.trim_end_matches(|c: char| !c.is_alphanumeric());
            let start = trimmed.find(|c: char| c.is_alphanumeric())?;
            let start = if trimmed[..start].ends_with('#') {
                start - 1
            } else {
                start
            };
            Some(trimmed[start..].to_string())
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KeywordSet {
    pub party: Party,
    pub keywords: Vec<Keyword>,
}

impl KeywordSet {
    /// Parses one keyword per line. An optional first line `@party: CON`
    /// names the party; `party` overrides it.
    pub fn parse(content: &str, party: Option<Party>) -> Result<KeywordSet> {
        const CTX: &str = "keywords";
        let mut header_party = None;
        let mut keywords: Vec<Keyword> = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@party:") {
                header_party = Some(rest.parse::<Party>()?);
                continue;
            }
            let kw = Keyword::parse(line)
                .ok_or_else(|| Error::parse(CTX, i + 1, format!("unusable keyword `{line}`")))?;
            if !seen.insert(kw.raw.clone()) {
                return Err(Error::parse(
                    CTX,
                    i + 1,
                    format!("duplicate keyword `{line}`"),
                ));
            }
            keywords.push(kw);
        }
        let party = party
            .or(header_party)
            .ok_or_else(|| Error::invalid(CTX, "no party given by flag or @party header"))?;
        if keywords.is_empty() {
            return Err(Error::invalid(CTX, format!("no keywords for {party}")));
        }
        Ok(KeywordSet { party, keywords })
    }

    pub fn from_file(path: impl AsRef<Path>, party: Option<Party>) -> Result<KeywordSet> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeywordSet::parse(&content, party)
    }

    /// The keyword lists shipped with the crate.
    pub fn bundled(party: Party) -> KeywordSet {
        let content = match party {
            Party::Con => include_str!("../../../data/keywords/con.txt"),
            Party::Lab => include_str!("../../../data/keywords/lab.txt"),
            Party::Lib => include_str!("../../../data/keywords/lib.txt"),
        };
        KeywordSet::parse(content, Some(party)).expect("bundled keyword list is valid")
    }

    pub fn matches(&self, tweet: &Tweet) -> bool {
        let tokens = tweet.tokens();
        self.keywords.iter().any(|kw| kw.matches_tokens(&tokens))
    }
}

pub fn parse_keyword_file(path: impl AsRef<Path>, party: Option<Party>) -> Result<KeywordSet> {
    KeywordSet::from_file(path, party)
}

pub fn select_party_tweets(tweets: &[Tweet], ks: &KeywordSet) -> HashSet<String> {
    tweets
        .iter()
        .filter(|t| ks.matches(t))
        .map(|t| t.id.clone())
        .collect()
}
