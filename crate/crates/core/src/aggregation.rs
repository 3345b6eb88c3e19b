//! Semantic-clarity filtering and per-instance aggregation of tweet scores.
//!
//! A tweet's clarity is `|pos - neg|`. A threshold `delta` keeps tweets with
//! clarity `>= delta` that matched at least one lexicon term. The kept set of
//! each party and poll window is collapsed into one value, either the mean
//! thresholded sentiment (MTS, `mean(pos) - mean(neg)`) or the dominant
//! sentiment class (DSC, `(#pos>neg - #neg>pos) / m`).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{TimeInstance, Tweet};
use crate::error::{Error, Result};
use crate::party::{Party, PerParty};
use crate::scorer::SentimentScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMethod {
    Mts,
    Dsc,
}

impl AggregationMethod {
    pub const ALL: [AggregationMethod; 2] = [AggregationMethod::Mts, AggregationMethod::Dsc];
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationMethod::Mts => "MTS",
            AggregationMethod::Dsc => "DSC",
        })
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mts" => Ok(AggregationMethod::Mts),
            "dsc" | "dcs" => Ok(AggregationMethod::Dsc),
            other => Err(Error::invalid(
                "aggregation",
                format!("unknown aggregation method `{other}`"),
            )),
        }
    }
}

/// How semantically unclear tweets are removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Keep tweets with clarity `>= delta`.
    Delta(f64),
    /// Remove exactly this many lowest-clarity tweets from the global pool.
    RemoveTop(usize),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Delta(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub method: AggregationMethod,
    pub threshold: Threshold,
}

impl AggregationConfig {
    pub fn new(method: AggregationMethod, threshold: Threshold) -> Result<Self> {
        match threshold {
            Threshold::Delta(d) if !(d >= 0.0) || !d.is_finite() => Err(Error::invalid(
                "aggregation",
                format!("delta must be a finite value >= 0, got {d}"),
            )),
            Threshold::RemoveTop(0) => Err(Error::invalid(
                "aggregation",
                "removal target must be positive",
            )),
            _ => Ok(AggregationConfig { method, threshold }),
        }
    }
}

/// The tweets that carry a lexicon signal; the pool thresholds are computed over.
fn signal_pool(scores: &[SentimentScore]) -> impl Iterator<Item = (usize, &SentimentScore)> {
    scores.iter().enumerate().filter(|(_, s)| !s.is_ignorable())
}

/// Smallest `delta` with at least `k` pool tweets strictly below it: the
/// first distinct clarity above the k-th smallest one (or the next float up
/// when the k-th smallest is the maximum).
pub fn delta_for_removal(scores: &[SentimentScore], k: usize) -> Result<f64> {
    let mut clarities: Vec<f64> = signal_pool(scores).map(|(_, s)| s.clarity()).collect();
    if k > clarities.len() {
        return Err(Error::Aggregation(format!(
            "cannot remove {k} tweets from a pool of {}",
            clarities.len()
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let (_, kth, above) = clarities.select_nth_unstable_by(k - 1, f64::total_cmp);
    let kth = *kth;
    Ok(above
        .iter()
        .copied()
        .filter(|&c| c > kth)
        .min_by(f64::total_cmp)
        .unwrap_or_else(|| next_up(kth)))
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

/// Result of removing the `k` lowest-clarity tweets from the pool.
#[derive(Debug, Clone)]
pub struct RemovalCut {
    pub delta: f64,
    /// Per tweet, whether it was removed.
    pub removed: Vec<bool>,
}

/// Removes exactly `k` pool tweets, lowest clarity first, ties broken by
/// tweet id. Without ties this is the same set `delta_for_removal` cuts.
pub fn removal_cut(tweets: &[Tweet], scores: &[SentimentScore], k: usize) -> Result<RemovalCut> {
    let delta = delta_for_removal(scores, k)?;
    let mut pool: Vec<usize> = signal_pool(scores).map(|(i, _)| i).collect();
    let by_clarity = |&a: &usize, &b: &usize| -> Ordering {
        scores[a]
            .clarity()
            .total_cmp(&scores[b].clarity())
            .then_with(|| tweets[a].id.cmp(&tweets[b].id))
    };
    let mut removed = vec![false; scores.len()];
    if k > 0 {
        pool.select_nth_unstable_by(k - 1, by_clarity);
        for &i in &pool[..k] {
            removed[i] = true;
        }
    }
    Ok(RemovalCut { delta, removed })
}

pub fn passes(score: &SentimentScore, delta: f64) -> bool {
    !score.is_ignorable() && score.clarity() >= delta
}

pub fn filter_by_delta(scores: &[SentimentScore], delta: f64) -> Vec<SentimentScore> {
    scores
        .iter()
        .copied()
        .filter(|s| passes(s, delta))
        .collect()
}

/// Mean positive minus mean negative; `None` for an empty set.
pub fn senti_mts(kept: &[SentimentScore]) -> Option<f64> {
    if kept.is_empty() {
        return None;
    }
    let m = kept.len() as f64;
    let pos = kept.iter().map(|s| s.pos).sum::<f64>() / m;
    let neg = kept.iter().map(|s| s.neg).sum::<f64>() / m;
    Some(pos - neg)
}

/// Positive-dominant minus negative-dominant count over `m`; ties count in
/// `m` only. `None` for an empty set.
pub fn senti_dsc(kept: &[SentimentScore]) -> Option<f64> {
    if kept.is_empty() {
        return None;
    }
    let (mut up, mut down) = (0i64, 0i64);
    for s in kept {
        match s.pos.partial_cmp(&s.neg) {
            Some(Ordering::Greater) => up += 1,
            Some(Ordering::Less) => down += 1,
            _ => {}
        }
    }
    Some((up - down) as f64 / kept.len() as f64)
}

pub fn senti(method: AggregationMethod, kept: &[SentimentScore]) -> Option<f64> {
    match method {
        AggregationMethod::Mts => senti_mts(kept),
        AggregationMethod::Dsc => senti_dsc(kept),
    }
}

/// One party's aggregate sentiment per time instance. `None` marks an
/// instance whose kept set was empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentSeries {
    pub party: Party,
    pub values: Vec<Option<f64>>,
    pub kept_counts: Vec<usize>,
}

impl SentimentSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SeriesSet {
    pub series: PerParty<SentimentSeries>,
    /// The threshold actually applied.
    pub delta: f64,
    /// `(instance index, party)` pairs with no kept tweets.
    pub missing: Vec<(usize, Party)>,
}

/// `scores[i]` belongs to `tweets[i]`; instance buckets index into both.
pub fn build_series(
    instances: &[TimeInstance],
    tweets: &[Tweet],
    scores: &[SentimentScore],
    cfg: &AggregationConfig,
) -> Result<SeriesSet> {
    if tweets.len() != scores.len() {
        return Err(Error::Aggregation(format!(
            "{} tweets but {} scores",
            tweets.len(),
            scores.len()
        )));
    }
    let (delta, removed) = match cfg.threshold {
        Threshold::Delta(d) => (d, None),
        Threshold::RemoveTop(k) => {
            let cut = removal_cut(tweets, scores, k)?;
            (cut.delta, Some(cut.removed))
        }
    };
    let keep = |i: usize| match &removed {
        Some(r) => !r[i] && !scores[i].is_ignorable(),
        None => passes(&scores[i], delta),
    };

    let mut missing = Vec::new();
    let series = PerParty::from_fn(|party| {
        let mut values = Vec::with_capacity(instances.len());
        let mut kept_counts = Vec::with_capacity(instances.len());
        for (n, inst) in instances.iter().enumerate() {
            let kept: Vec<SentimentScore> = inst.party_tweets[party]
                .iter()
                .copied()
                .filter(|&i| keep(i))
                .map(|i| scores[i])
                .collect();
            let value = senti(cfg.method, &kept);
            if value.is_none() {
                log::warn!("instance {} has no kept {party} tweets", n + 1);
                missing.push((n, party));
            }
            values.push(value);
            kept_counts.push(kept.len());
        }
        SentimentSeries {
            party,
            values,
            kept_counts,
        }
    });
    missing.sort();
    Ok(SeriesSet {
        series,
        delta,
        missing,
    })
}
