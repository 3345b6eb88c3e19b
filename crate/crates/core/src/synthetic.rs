//! Seeded synthetic polls, sentiment series and scored corpora with a known
//! linear relation between sentiment and vote share.

use std::collections::HashSet;

use chrono::{Days, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calibration::Dataset;
use crate::corpus::{PollRecord, Tweet};
use crate::error::Result;
use crate::party::{Party, PerParty};
use crate::scorer::SentimentScore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub instances: usize,
    /// Share = weight * sentiment, per party.
    pub weights: [f64; 3],
    /// Noise standard deviation as a fraction of each sentiment value.
    pub relative_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            instances: 68,
            weights: [2.2, 2.6, 1.4],
            relative_noise: 0.01,
            seed: 2015,
        }
    }
}

fn first_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 9, 1).expect("valid date")
}

/// Raw poll percentages drifting slowly around a fixed three-party picture,
/// one single-day poll every other day.
pub fn poll_records(n: usize, seed: u64) -> Result<Vec<PollRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, 0.4).expect("finite sd");
    let mut drift = [0.0f64; 3];
    (0..n)
        .map(|i| {
            let t = i as f64;
            for d in &mut drift {
                *d = (*d + step.sample(&mut rng)).clamp(-2.0, 2.0);
            }
            let raw = [
                34.0 + 2.0 * (t / 9.0).sin() + drift[0],
                32.0 + 2.0 * (t / 13.0).cos() + drift[1],
                13.0 + 1.5 * (t / 7.0).sin() + drift[2],
            ];
            let day = first_day() + Days::new(2 * i as u64);
            PollRecord::new(day, day, raw)
        })
        .collect()
}

fn targets(polls: &[PollRecord]) -> Vec<[f64; 3]> {
    polls.iter().map(|p| p.shares.to_array()).collect()
}

/// Per-party sentiment `share / weight`, perturbed by Gaussian noise scaled
/// to each value.
pub fn planted_series(polls: &[PollRecord], cfg: &SyntheticConfig) -> PerParty<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut series = PerParty::from_fn(|_| Vec::with_capacity(polls.len()));
    for poll in polls {
        for p in Party::ALL {
            let signal = poll.shares.get(p) / cfg.weights[p.index()];
            let noise = unit.sample(&mut rng) * cfg.relative_noise * signal.abs();
            series[p].push(signal + noise);
        }
    }
    series
}

pub fn planted_dataset(cfg: &SyntheticConfig) -> Result<Dataset> {
    let polls = poll_records(cfg.instances, cfg.seed)?;
    let series = planted_series(&polls, cfg);
    Dataset::new(
        series.map(|_, v| v.iter().map(|&x| Some(x)).collect()),
        targets(&polls),
    )
}

/// Same polls as [`planted_dataset`], with sentiment drawn independently of
/// them.
pub fn noise_dataset(cfg: &SyntheticConfig) -> Result<Dataset> {
    let polls = poll_records(cfg.instances, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0dd5);
    let senti = PerParty::from_fn(|_| {
        (0..polls.len())
            .map(|_| Some(rng.random_range(0.05..0.35)))
            .collect()
    });
    Dataset::new(senti, targets(&polls))
}

/// Tweets with precomputed scores whose per-instance MTS equals a given
/// series exactly (up to rounding).
#[derive(Debug, Clone)]
pub struct ScoredCorpus {
    pub tweets: Vec<Tweet>,
    pub scores: Vec<SentimentScore>,
    pub polls: Vec<PollRecord>,
    pub selections: PerParty<HashSet<String>>,
}

/// `per_bucket` tweets (even, at least 2) per party and poll. Each tweet's
/// positive weight is its negative weight plus the target plus a jitter;
/// jitters cancel in pairs.
pub fn scored_corpus(
    polls: &[PollRecord],
    series: &PerParty<Vec<f64>>,
    per_bucket: usize,
    seed: u64,
) -> ScoredCorpus {
    let per_bucket = per_bucket.max(2) & !1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tweets = Vec::new();
    let mut scores = Vec::new();
    let mut selections: PerParty<HashSet<String>> = PerParty::default();
    for (i, poll) in polls.iter().enumerate() {
        let noon =
            Utc.from_utc_datetime(&poll.start_date.and_hms_opt(12, 0, 0).expect("valid time"));
        for p in Party::ALL {
            let v = series[p][i];
            for j in 0..per_bucket / 2 {
                let jitter = rng.random_range(-0.5..0.5) * v.abs();
                for (k, e) in [jitter, -jitter].into_iter().enumerate() {
                    let neg = rng.random_range(0.0..0.2);
                    let id = format!("s{}-{}-{}", i + 1, p.as_str().to_lowercase(), 2 * j + k);
                    tweets.push(Tweet::new(id.clone(), noon, p.as_str()));
                    scores.push(SentimentScore::new((neg + v + e).max(0.0), neg, 1));
                    selections[p].insert(id);
                }
            }
        }
    }
    ScoredCorpus {
        tweets,
        scores,
        polls: polls.to_vec(),
        selections,
    }
}

/// `n` scores with continuous weights in `[0, 1)`, all with matches.
pub fn clarity_pool(n: usize, seed: u64) -> Vec<SentimentScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| SentimentScore::new(rng.random(), rng.random(), 1 + rng.random_range(0..5)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{build_series, AggregationConfig, AggregationMethod, Threshold};
    use crate::corpus::build_time_instances;

    #[test]
    fn polls_are_reproducible_and_disjoint() {
        let a = poll_records(68, 1).unwrap();
        assert_eq!(a, poll_records(68, 1).unwrap());
        assert_ne!(a, poll_records(68, 2).unwrap());
        assert!(a.windows(2).all(|w| w[0].end_date < w[1].start_date));
        for p in &a {
            let s = p.shares.to_array();
            assert!(s[0] > s[2] && s[1] > s[2]);
        }
    }

    #[test]
    fn zero_noise_is_exactly_linear() {
        let cfg = SyntheticConfig {
            relative_noise: 0.0,
            ..SyntheticConfig::default()
        };
        let d = planted_dataset(&cfg).unwrap();
        for (i, t) in d.polls.iter().enumerate() {
            let s = d.senti_at(i).unwrap();
            for k in 0..3 {
                assert!((s[k] * cfg.weights[k] - t[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scored_corpus_reproduces_series_under_mts() {
        let cfg = SyntheticConfig {
            instances: 5,
            ..SyntheticConfig::default()
        };
        let polls = poll_records(cfg.instances, cfg.seed).unwrap();
        let series = planted_series(&polls, &cfg);
        let c = scored_corpus(&polls, &series, 6, 3);
        assert_eq!(c.tweets.len(), 5 * 3 * 6);
        let w = build_time_instances(&c.tweets, &c.polls, &c.selections);
        let agg = AggregationConfig::new(AggregationMethod::Mts, Threshold::Delta(0.0)).unwrap();
        let set = build_series(&w.instances, &c.tweets, &c.scores, &agg).unwrap();
        for p in Party::ALL {
            for (got, want) in set.series[p].values.iter().zip(&series[p]) {
                assert!((got.unwrap() - want).abs() < 1e-12);
            }
        }
    }
}
