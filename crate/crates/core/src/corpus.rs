//! Tweet and poll ingestion, plus windowing of tweets into poll time instances.
//!
//! Tweets file: one record per line, `id<TAB>timestamp<TAB>text[<TAB>token/TAG ...]`.
//! Literal tabs, newlines and backslashes inside text are written as `\t`, `\n`
//! and `\\`. Polls file: CSV `start_date,end_date,con,lab,lib` with raw
//! percentages in `[0, 100]`.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keywords::tokenize;
use crate::party::{Party, PerParty};

#[derive(Debug, Clone, PartialEq)]
pub struct Tweet {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub tagged_tokens: Option<Vec<(String, String)>>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, timestamp: DateTime<Utc>, text: impl Into<String>) -> Self {
        Tweet {
            id: id.into(),
            timestamp,
            text: text.into(),
            tagged_tokens: None,
        }
    }

    pub fn with_tags(mut self, tagged: Vec<(String, String)>) -> Self {
        self.tagged_tokens = Some(tagged);
        self
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    /// Whitespace tokens of the text with surrounding punctuation removed.
    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Abort on the first malformed line.
    #[default]
    FailFast,
    /// Skip malformed lines and count them.
    Lenient,
}

#[derive(Debug, Clone, Default)]
pub struct TweetLoad {
    pub tweets: Vec<Tweet>,
    /// `(line number, reason)` for each skipped line in lenient mode.
    pub skipped: Vec<(usize, String)>,
}

pub fn load_tweets(path: impl AsRef<Path>, mode: LoadMode) -> Result<TweetLoad> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tweets(&content, mode)
}

pub fn parse_tweets(content: &str, mode: LoadMode) -> Result<TweetLoad> {
    let mut load = TweetLoad::default();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_tweet_line(line, line_no) {
            Ok(t) => load.tweets.push(t),
            Err(e) => match mode {
                LoadMode::FailFast => return Err(e),
                LoadMode::Lenient => {
                    log::warn!("skipping tweet record: {e}");
                    load.skipped.push((line_no, e.to_string()));
                }
            },
        }
    }
    log::info!(
        "loaded {} tweets ({} skipped)",
        load.tweets.len(),
        load.skipped.len()
    );
    Ok(load)
}

fn parse_tweet_line(line: &str, line_no: usize) -> Result<Tweet> {
    const CTX: &str = "tweets";
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 && fields.len() != 4 {
        return Err(Error::parse(
            CTX,
            line_no,
            format!(
                "expected 3 or 4 tab-separated fields, found {}",
                fields.len()
            ),
        ));
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return Err(Error::parse(CTX, line_no, "empty id"));
    }
    let timestamp = parse_timestamp(fields[1])
        .ok_or_else(|| Error::parse(CTX, line_no, format!("bad timestamp `{}`", fields[1])))?;
    let text = unescape(fields[2]);
    if text.trim().is_empty() {
        return Err(Error::parse(CTX, line_no, "empty text"));
    }
    let tagged_tokens = match fields.get(3) {
        Some(tags) => Some(parse_tagged(tags).map_err(|m| Error::parse(CTX, line_no, m))?),
        None => None,
    };
    Ok(Tweet {
        id: id.to_string(),
        timestamp,
        text,
        tagged_tokens,
    })
}

/// RFC 3339 timestamps, or a bare `YYYY-MM-DDTHH:MM:SS` / date, read as UTC.
fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(t.and_utc());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

fn parse_tagged(field: &str) -> std::result::Result<Vec<(String, String)>, String> {
    field
        .split_whitespace()
        .map(|pair| {
            let (tok, tag) = pair
                .rsplit_once('/')
                .ok_or_else(|| format!("tagged token `{pair}` lacks a /TAG suffix"))?;
            if tok.is_empty() {
                return Err(format!("empty token in `{pair}`"));
            }
            Ok((unescape(tok), tag.to_string()))
        })
        .collect()
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_tweets<W: Write>(mut w: W, tweets: &[Tweet]) -> std::io::Result<()> {
    for t in tweets {
        write!(
            w,
            "{}\t{}\t{}",
            t.id,
            t.timestamp.format("%Y-%m-%dT%H:%M:%SZ"),
            escape(&t.text)
        )?;
        if let Some(tags) = &t.tagged_tokens {
            let joined: Vec<String> = tags
                .iter()
                .map(|(tok, tag)| format!("{}/{}", escape(tok), tag))
                .collect();
            write!(w, "\t{}", joined.join(" "))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Three-party shares summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shares {
    pub con: f64,
    pub lab: f64,
    pub lib: f64,
}

impl Shares {
    pub fn to_array(self) -> [f64; 3] {
        [self.con, self.lab, self.lib]
    }

    pub fn get(self, party: Party) -> f64 {
        self.to_array()[party.index()]
    }
}

/// Rescale a raw three-party triplet so that it sums to one.
pub fn normalize_ground_truth(raw: [f64; 3]) -> Result<Shares> {
    if raw.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!(
            "poll percentages must be strictly positive, got {raw:?}"
        )));
    }
    let total: f64 = raw.iter().sum();
    Ok(Shares {
        con: raw[0] / total,
        lab: raw[1] / total,
        lib: raw[2] / total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PollRecord {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Percentages as published, in `[0, 100]`.
    pub raw: [f64; 3],
    pub shares: Shares,
}

impl PollRecord {
    pub fn new(start_date: NaiveDate, end_date: NaiveDate, raw: [f64; 3]) -> Result<Self> {
        const CTX: &str = "polls";
        if end_date < start_date {
            return Err(Error::invalid(
                CTX,
                format!("end date {end_date} precedes start date {start_date}"),
            ));
        }
        let span = (end_date - start_date).num_days();
        if span > 1 {
            return Err(Error::invalid(
                CTX,
                format!("poll {start_date}..{end_date} spans {span} days; at most 1 allowed"),
            ));
        }
        for (party, v) in Party::ALL.iter().zip(raw) {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::invalid(
                    CTX,
                    format!("{party} percentage {v} outside [0, 100]"),
                ));
            }
        }
        let shares = normalize_ground_truth(raw)?;
        Ok(PollRecord {
            start_date,
            end_date,
            raw,
            shares,
        })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start_date <= date && date <= self.end_date
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct PollRow {
    start_date: NaiveDate,
    end_date: NaiveDate,
    con: f64,
    lab: f64,
    lib: f64,
}

pub fn load_polls(path: impl AsRef<Path>) -> Result<Vec<PollRecord>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polls(&content)
}

pub fn parse_polls(content: &str) -> Result<Vec<PollRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut polls = Vec::new();
    for (i, row) in reader.deserialize::<PollRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| Error::parse("polls", line, e.to_string()))?;
        let poll = PollRecord::new(row.start_date, row.end_date, [row.con, row.lab, row.lib])
            .map_err(|e| Error::parse("polls", line, e.to_string()))?;
        polls.push(poll);
    }
    polls.sort_by_key(|p| (p.start_date, p.end_date));
    Ok(polls)
}

/// Writes polls with their raw percentages; `f64` display is round-trip exact.
pub fn write_polls<W: Write>(w: W, polls: &[PollRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for p in polls {
        writer.serialize(PollRow {
            start_date: p.start_date,
            end_date: p.end_date,
            con: p.raw[0],
            lab: p.raw[1],
            lib: p.raw[2],
        })?;
    }
    writer.flush().map_err(|e| Error::io("<polls writer>", e))?;
    Ok(())
}

/// The tweets of one poll window, bucketed by party as indices into the
/// tweet list the instances were built from.
#[derive(Debug, Clone)]
pub struct TimeInstance {
    pub poll: PollRecord,
    pub party_tweets: PerParty<Vec<usize>>,
}

#[derive(Debug, Clone, Default)]
pub struct Windowing {
    pub instances: Vec<TimeInstance>,
    /// `(instance index, party)` pairs whose bucket came out empty.
    pub empty_buckets: Vec<(usize, Party)>,
}

/// Assign selected tweets to every poll window (inclusive on both ends)
/// containing their UTC date. A tweet can land in several buckets.
pub fn build_time_instances(
    tweets: &[Tweet],
    polls: &[PollRecord],
    selections: &PerParty<HashSet<String>>,
) -> Windowing {
    let mut instances: Vec<TimeInstance> = polls
        .iter()
        .map(|p| TimeInstance {
            poll: p.clone(),
            party_tweets: PerParty::default(),
        })
        .collect();

    for (idx, tweet) in tweets.iter().enumerate() {
        let parties: Vec<Party> = Party::ALL
            .into_iter()
            .filter(|&p| selections[p].contains(&tweet.id))
            .collect();
        if parties.is_empty() {
            continue;
        }
        let date = tweet.date();
        for inst in instances.iter_mut().filter(|i| i.poll.contains(date)) {
            for &p in &parties {
                inst.party_tweets[p].push(idx);
            }
        }
    }

    let mut empty_buckets = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        for (p, bucket) in inst.party_tweets.iter() {
            if bucket.is_empty() {
                log::warn!(
                    "poll {} ({}..{}) has no {p} tweets",
                    i + 1,
                    inst.poll.start_date,
                    inst.poll.end_date
                );
                empty_buckets.push((i, p));
            }
        }
    }
    Windowing {
        instances,
        empty_buckets,
    }
}
