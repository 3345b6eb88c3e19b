//! Per-tweet positive and negative sentiment under the three lexicon schemes:
//! stems without POS (SnPOS), stems keyed by POS (SPOS), and SPOS over the
//! tweet extended with core-sense synonyms (SPOSW).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Tweet;
use crate::error::{Error, Result};
use crate::lexicon::{stem_key, PosAgnosticTable, PosAwareTable, SynonymTable, Weights};
use crate::tagger::{map_tag, BaselineTagger, Tagger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    SnPos,
    SPos,
    SPosW,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SnPos, Method::SPos, Method::SPosW];

    pub fn label(self) -> &'static str {
        match self {
            Method::SnPos => "SnPOS",
            Method::SPos => "SPOS",
            Method::SPosW => "SPOSW",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snpos" => Ok(Method::SnPos),
            "spos" => Ok(Method::SPos),
            "sposw" => Ok(Method::SPosW),
            other => Err(Error::invalid(
                "method",
                format!("unknown scoring method `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SentimentScore {
    pub pos: f64,
    pub neg: f64,
    pub matched_terms: u32,
}

impl SentimentScore {
    pub fn new(pos: f64, neg: f64, matched_terms: u32) -> Self {
        SentimentScore {
            pos,
            neg,
            matched_terms,
        }
    }

    /// No lexicon word was found; such tweets carry no signal.
    pub fn is_ignorable(&self) -> bool {
        self.matched_terms == 0
    }

    /// `|pos - neg|`; small values are semantically unclear.
    pub fn clarity(&self) -> f64 {
        (self.pos - self.neg).abs()
    }

    fn add(&mut self, w: Weights) {
        self.pos += w.pos;
        self.neg += w.neg;
        self.matched_terms += 1;
    }
}

/// Where POS tags come from.
#[derive(Clone, Copy)]
pub enum Tagging<'a> {
    /// Tag the tokenized text with this tagger.
    Embedded(&'a dyn Tagger),
    /// Use the tweet's own `tagged_tokens`.
    Pretagged,
}

impl fmt::Debug for Tagging<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tagging::Embedded(_) => f.write_str("Embedded"),
            Tagging::Pretagged => f.write_str("Pretagged"),
        }
    }
}

pub fn score_snpos(tweet: &Tweet, table: &PosAgnosticTable) -> SentimentScore {
    score_tokens_snpos(&tweet.tokens(), table)
}

pub fn score_tokens_snpos(tokens: &[String], table: &PosAgnosticTable) -> SentimentScore {
    let mut score = SentimentScore::default();
    for w in tokens
        .iter()
        .filter_map(|t| stem_key(t))
        .filter_map(|s| table.get(&s))
    {
        score.add(w);
    }
    score
}

fn checked_tags(tagger: &dyn Tagger, tokens: &[String]) -> Result<Vec<String>> {
    let tags = tagger.tag(tokens);
    if tags.len() != tokens.len() {
        return Err(Error::TaggerContract {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    Ok(tags)
}

fn pretagged(tweet: &Tweet) -> Result<(Vec<String>, Vec<String>)> {
    let tagged = tweet.tagged_tokens.as_ref().ok_or_else(|| {
        Error::invalid(
            "score",
            format!("tweet {} has no POS tags and no tagger was given", tweet.id),
        )
    })?;
    Ok(tagged.iter().cloned().unzip())
}

pub fn score_tagged(tokens: &[String], tags: &[String], table: &PosAwareTable) -> SentimentScore {
    let mut score = SentimentScore::default();
    for (tok, tag) in tokens.iter().zip(tags) {
        let Some(pos) = map_tag(tag) else { continue };
        let Some(stem) = stem_key(tok) else { continue };
        if let Some(w) = table.get(&stem, pos) {
            score.add(w);
        }
    }
    score
}

pub fn score_spos(
    tweet: &Tweet,
    table: &PosAwareTable,
    tagging: Tagging<'_>,
) -> Result<SentimentScore> {
    let (tokens, tags) = match tagging {
        Tagging::Embedded(tagger) => {
            let tokens = tweet.tokens();
            let tags = checked_tags(tagger, &tokens)?;
            (tokens, tags)
        }
        Tagging::Pretagged => pretagged(tweet)?,
    };
    Ok(score_tagged(&tokens, &tags, table))
}

/// Appends, for every token whose lowercase form is a headword, that
/// headword's synonyms. Multi-word synonyms contribute one token per word.
/// Appended tokens are not expanded again.
pub fn expand_tokens(tokens: &[String], syn: &SynonymTable) -> Vec<String> {
    let mut out = tokens.to_vec();
    for tok in tokens {
        if let Some(list) = syn.get(&tok.to_lowercase()) {
            for s in list {
                out.extend(
                    s.split(|c: char| c.is_whitespace() || c == '_')
                        .filter(|w| !w.is_empty())
                        .map(str::to_string),
                );
            }
        }
    }
    out
}

pub fn expand_tweet(tweet: &Tweet, syn: &SynonymTable) -> Vec<String> {
    expand_tokens(&tweet.tokens(), syn)
}

/// SPOS over the synonym-extended tweet. With an embedded tagger the whole
/// extended sequence is tagged; with pretagged input the original tokens keep
/// their tags and the appended synonyms get baseline tags.
pub fn score_sposw(
    tweet: &Tweet,
    table: &PosAwareTable,
    syn: &SynonymTable,
    tagging: Tagging<'_>,
) -> Result<SentimentScore> {
    let (tokens, tags) = match tagging {
        Tagging::Embedded(tagger) => {
            let tokens = expand_tweet(tweet, syn);
            let tags = checked_tags(tagger, &tokens)?;
            (tokens, tags)
        }
        Tagging::Pretagged => {
            let (tokens, mut tags) = pretagged(tweet)?;
            let extended = expand_tokens(&tokens, syn);
            tags.extend(BaselineTagger.tag(&extended[tokens.len()..]));
            (extended, tags)
        }
    };
    Ok(score_tagged(&tokens, &tags, table))
}

/// The tables a scoring run needs.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub agnostic: PosAgnosticTable,
    pub aware: PosAwareTable,
    pub synonyms: SynonymTable,
}

impl Lexicon {
    pub fn score(
        &self,
        method: Method,
        tweet: &Tweet,
        tagging: Tagging<'_>,
    ) -> Result<SentimentScore> {
        match method {
            Method::SnPos => Ok(score_snpos(tweet, &self.agnostic)),
            Method::SPos => score_spos(tweet, &self.aware, tagging),
            Method::SPosW => score_sposw(tweet, &self.aware, &self.synonyms, tagging),
        }
    }

    pub fn score_all(
        &self,
        method: Method,
        tweets: &[Tweet],
        tagging: Tagging<'_>,
    ) -> Result<Vec<SentimentScore>> {
        tweets
            .iter()
            .map(|t| self.score(method, t, tagging))
            .collect()
    }
}
