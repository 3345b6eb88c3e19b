//! Browser demo: tweet scoring, triplet normalization and a synthetic
//! leave-one-out run. Every export returns a JSON string.

use std::sync::OnceLock;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pollsense::artifacts::{plot_rows, PlotRow};
use pollsense::calibration::{normalize_triplet, CalibrationWeights, InferredTriplet};
use pollsense::evaluation::{loocv, MaeStat};
use pollsense::keywords::{tokenize, KeywordSet};
use pollsense::lexicon::{
    build_pos_agnostic_table, build_pos_aware_table, parse_sentiwordnet_str, stem_key, SynonymTable,
};
use pollsense::scorer::{expand_tokens, score_tagged, score_tokens_snpos, Lexicon, SentimentScore};
use pollsense::synthetic::{planted_dataset, SyntheticConfig};
use pollsense::tagger::{map_tag, BaselineTagger, Tagger};
use pollsense::{Party, PerParty};

const LEXICON: &str = include_str!("../../../data/fixture/lexicon.txt");
const SYNONYMS: &str = include_str!("../../../data/fixture/synonyms.tsv");

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| {
        let rows = parse_sentiwordnet_str(LEXICON).expect("demo lexicon parses");
        Lexicon {
            agnostic: build_pos_agnostic_table(&rows),
            aware: build_pos_aware_table(&rows, false),
            synonyms: SynonymTable::parse(SYNONYMS).expect("demo synonyms parse"),
        }
    })
}

fn keyword_sets() -> &'static PerParty<KeywordSet> {
    static SETS: OnceLock<PerParty<KeywordSet>> = OnceLock::new();
    SETS.get_or_init(|| PerParty::from_fn(KeywordSet::bundled))
}

#[derive(Debug, Serialize)]
pub struct TokenInfo {
    pub token: String,
    pub tag: String,
    pub stem: Option<String>,
    /// SnPOS weights, if the stem is in the lexicon.
    pub any_pos: Option<[f64; 2]>,
    /// SPOS weights for the baseline tag.
    pub tagged: Option<[f64; 2]>,
    pub synonym: bool,
}

#[derive(Debug, Serialize)]
pub struct PartyMatch {
    pub party: Party,
    pub keywords: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Analysis {
    pub tokens: Vec<TokenInfo>,
    pub parties: Vec<PartyMatch>,
    pub snpos: SentimentScore,
    pub spos: SentimentScore,
    pub sposw: SentimentScore,
}

pub fn analyze(text: &str) -> Analysis {
    let lex = lexicon();
    let tokens = tokenize(text);
    let extended = expand_tokens(&tokens, &lex.synonyms);
    let tags = BaselineTagger.tag(&extended);

    let infos = extended
        .iter()
        .zip(&tags)
        .enumerate()
        .map(|(i, (tok, tag))| {
            let stem = stem_key(tok);
            let any_pos = stem
                .as_ref()
                .and_then(|s| lex.agnostic.get(s))
                .map(|w| [w.pos, w.neg]);
            let tagged = stem
                .as_ref()
                .zip(map_tag(tag))
                .and_then(|(s, p)| lex.aware.get(s, p))
                .map(|w| [w.pos, w.neg]);
            TokenInfo {
                token: tok.clone(),
                tag: tag.clone(),
                stem,
                any_pos,
                tagged,
                synonym: i >= tokens.len(),
            }
        })
        .collect();

    let parties = keyword_sets()
        .iter()
        .filter_map(|(party, set)| {
            let hits: Vec<String> = set
                .keywords
                .iter()
                .filter(|k| k.matches_tokens(&tokens))
                .map(|k| k.raw.clone())
                .collect();
            (!hits.is_empty()).then_some(PartyMatch {
                party,
                keywords: hits,
            })
        })
        .collect();

    Analysis {
        tokens: infos,
        parties,
        snpos: score_tokens_snpos(&tokens, &lex.agnostic),
        spos: score_tagged(&tokens, &tags[..tokens.len()], &lex.aware),
        sposw: score_tagged(&extended, &tags, &lex.aware),
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Err { error: String },
}

impl<T> From<pollsense::Result<T>> for Outcome<T> {
    fn from(r: pollsense::Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Err {
                error: e.to_string(),
            },
        }
    }
}

pub fn normalize(con: f64, lab: f64, lib: f64) -> Outcome<InferredTriplet> {
    normalize_triplet([con, lab, lib]).into()
}

#[derive(Debug, Serialize)]
pub struct SyntheticRun {
    pub noise: f64,
    /// Weights fitted on every instance.
    pub weights: CalibrationWeights,
    pub planted: [f64; 3],
    pub mae: PerParty<MaeStat>,
    pub all_parties: MaeStat,
    pub mre: f64,
    pub points: Vec<PlotRow>,
}

pub fn synthetic(noise: f64, seed: u64) -> Outcome<SyntheticRun> {
    let cfg = SyntheticConfig {
        relative_noise: noise,
        seed,
        ..SyntheticConfig::default()
    };
    let run = || -> pollsense::Result<SyntheticRun> {
        let data = planted_dataset(&cfg)?;
        let report = loocv(&data)?;
        let all: Vec<usize> = (0..data.len()).collect();
        Ok(SyntheticRun {
            noise,
            weights: data.fit(&all)?,
            planted: cfg.weights,
            mae: report.per_party,
            all_parties: report.all_parties,
            mre: report.mre,
            points: plot_rows(&report),
        })
    };
    run().into()
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

/// Party matches, per-token lexicon hits and the three scores.
#[wasm_bindgen]
pub fn analyze_tweet(text: &str) -> String {
    json(&analyze(text))
}

#[wasm_bindgen]
pub fn normalize_shares(con: f64, lab: f64, lib: f64) -> String {
    json(&normalize(con, lab, lib))
}

/// `seed` is a u32 so JavaScript numbers pass without BigInt.
#[wasm_bindgen]
pub fn synthetic_loocv(noise: f64, seed: u32) -> String {
    json(&synthetic(noise, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_finds_party_and_sentiment() {
        let a = analyze("Ed Miliband gave a magnificent speech");
        assert_eq!(a.parties.len(), 1);
        assert_eq!(a.parties[0].party, Party::Lab);
        assert!(a.snpos.matched_terms > 0);
        assert!(a.snpos.pos > 0.0);
    }

    #[test]
    fn unknown_words_score_nothing() {
        let a = analyze("zzz qqq");
        assert!(a.parties.is_empty());
        assert_eq!(a.snpos, SentimentScore::default());
        assert_eq!(a.sposw, SentimentScore::default());
    }

    #[test]
    fn synonym_tokens_are_flagged() {
        let a = analyze("a great win");
        let n = tokenize("a great win").len();
        assert!(a.tokens.len() > n);
        assert!(a.tokens[..n].iter().all(|t| !t.synonym));
        assert!(a.tokens[n..].iter().all(|t| t.synonym));
    }

    #[test]
    fn normalization_json() {
        let s = normalize_shares(1.0, 1.0, 2.0);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["lib"], 0.5);
        assert_eq!(v["normalized"], true);
        let bad: serde_json::Value =
            serde_json::from_str(&normalize_shares(-1.0, 0.0, -2.0)).unwrap();
        assert!(bad["error"].is_string());
    }

    #[test]
    fn low_noise_recovers_weights() {
        let Outcome::Ok(run) = synthetic(0.001, 3) else {
            panic!("synthetic run failed")
        };
        assert_eq!(run.points.len(), 68 * 3);
        for (p, w) in run.weights.iter() {
            assert!((w - run.planted[p.index()]).abs() < 0.01, "{p}: {w}");
        }
        assert!(run.all_parties.mean < 0.01);
    }
}
