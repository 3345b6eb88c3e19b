//! Part-of-speech tagging contract and a suffix-rule baseline tagger.

use crate::lexicon::PosClass;

/// Maps a token sequence to one tag per token. Tags may come from any
/// tagset that [`map_tag`] understands.
pub trait Tagger {
    fn tag(&self, tokens: &[String]) -> Vec<String>;
}

impl<F> Tagger for F
where
    F: Fn(&[String]) -> Vec<String>,
{
    fn tag(&self, tokens: &[String]) -> Vec<String> {
        self(tokens)
    }
}

/// Maps WordNet letters, Penn Treebank and Universal Dependencies tags onto
/// the four lexicon classes; anything else is `None` and is skipped.
pub fn map_tag(tag: &str) -> Option<PosClass> {
    match tag {
        "a" | "s" | "ADJ" => Some(PosClass::Adjective),
        "n" | "NOUN" | "PROPN" => Some(PosClass::Noun),
        "v" | "VERB" | "AUX" => Some(PosClass::Verb),
        "r" | "ADV" => Some(PosClass::Adverb),
        t if t.starts_with("JJ") => Some(PosClass::Adjective),
        t if t.starts_with("NN") => Some(PosClass::Noun),
        t if t.starts_with("VB") => Some(PosClass::Verb),
        t if t.starts_with("RB") => Some(PosClass::Adverb),
        _ => None,
    }
}

pub const OTHER: &str = "other";

const FUNCTION_WORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "either",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "may",
    "me",
    "might",
    "more",
    "most",
    "must",
    "my",
    "myself",
    "neither",
    "no",
    "nor",
    "not",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "ought",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "shall",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "upon",
    "us",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "whose",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

/// Deterministic context-free tagger: function words are `other`, then
/// suffix rules, then noun.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineTagger;

impl BaselineTagger {
    pub fn tag_word(word: &str) -> &'static str {
        let w = word.to_lowercase();
        if FUNCTION_WORDS.binary_search(&w.as_str()).is_ok() {
            return OTHER;
        }
        if w.ends_with("ly") {
            "r"
        } else if ["ous", "ful", "ive", "al"].iter().any(|s| w.ends_with(s)) {
            "a"
        } else if ["tion", "ness", "ment", "er"]
            .iter()
            .any(|s| w.ends_with(s))
        {
            "n"
        } else if ["ize", "ate"].iter().any(|s| w.ends_with(s)) {
            "v"
        } else {
            "n"
        }
    }
}

impl Tagger for BaselineTagger {
    fn tag(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .map(|t| Self::tag_word(t).to_string())
            .collect()
    }
}

pub fn baseline_tagger(tokens: &[String]) -> Vec<String> {
    BaselineTagger.tag(tokens)
}
