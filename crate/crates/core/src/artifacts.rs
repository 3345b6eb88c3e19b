//! Flat-file formats for intermediate results. Every writer has a matching
//! reader. Floats are written in shortest round-trip form so files re-read
//! to identical values.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::SeriesSet;
use crate::calibration::{CalibrationWeights, InferredTriplet};
use crate::error::{Error, Result};
use crate::evaluation::EvaluationReport;
use crate::party::{Party, PerParty};
use crate::scorer::SentimentScore;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn read_rows<T, R>(r: R, context: &'static str) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv_reader(r);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(context, i + 2, e.to_string())))
        .collect()
}

fn write_rows<T: Serialize, W: Write>(w: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io("<output>", e))
}

// ---- selections -----------------------------------------------------------

/// One `party<TAB>id` line per selected tweet, parties in fixed order and
/// ids sorted.
pub fn write_selections<W: Write>(mut w: W, sel: &PerParty<HashSet<String>>) -> Result<()> {
    for (party, ids) in sel.iter() {
        let mut ids: Vec<&String> = ids.iter().collect();
        ids.sort();
        for id in ids {
            writeln!(w, "{party}\t{id}").map_err(|e| Error::io("<output>", e))?;
        }
    }
    Ok(())
}

pub fn read_selections<R: BufRead>(r: R) -> Result<PerParty<HashSet<String>>> {
    let mut sel: PerParty<HashSet<String>> = PerParty::default();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<selections>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (party, id) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse("selections", n + 1, "expected party<TAB>id"))?;
        let party: Party = party
            .parse()
            .map_err(|e: Error| Error::parse("selections", n + 1, e.to_string()))?;
        sel[party].insert(id.trim().to_string());
    }
    Ok(sel)
}

pub fn load_selections(path: impl AsRef<Path>) -> Result<PerParty<HashSet<String>>> {
    read_selections(BufReader::new(open(path.as_ref())?))
}

pub fn save_selections(path: impl AsRef<Path>, sel: &PerParty<HashSet<String>>) -> Result<()> {
    write_selections(create(path.as_ref())?, sel)
}

// ---- scores ---------------------------------------------------------------

pub const SCORES_HEADER: &str = "id\tpos\tneg\tmatched";

pub fn write_scores<W: Write>(mut w: W, ids: &[String], scores: &[SentimentScore]) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    writeln!(w, "{SCORES_HEADER}").map_err(io)?;
    for (id, s) in ids.iter().zip(scores) {
        writeln!(w, "{id}\t{}\t{}\t{}", s.pos, s.neg, s.matched_terms).map_err(io)?;
    }
    Ok(())
}

/// Reads `id<TAB>pos<TAB>neg<TAB>matched` rows; a header line is optional.
pub fn read_scores<R: BufRead>(r: R) -> Result<Vec<(String, SentimentScore)>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<scores>", e))?;
        if line.trim().is_empty() || (n == 0 && line == SCORES_HEADER) {
            continue;
        }
        let bad = |m: &str| Error::parse("scores", n + 1, m.to_string());
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        let pos: f64 = f[1].trim().parse().map_err(|_| bad("bad pos"))?;
        let neg: f64 = f[2].trim().parse().map_err(|_| bad("bad neg"))?;
        let m: u32 = f[3].trim().parse().map_err(|_| bad("bad matched count"))?;
        out.push((f[0].to_string(), SentimentScore::new(pos, neg, m)));
    }
    Ok(out)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<(String, SentimentScore)>> {
    read_scores(BufReader::new(open(path.as_ref())?))
}

// ---- series ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub instance: usize,
    pub party: Party,
    pub senti: Option<f64>,
    pub m: usize,
}

pub fn series_rows(set: &SeriesSet) -> Vec<SeriesRow> {
    let n = set.series.con.len();
    (0..n)
        .flat_map(|i| {
            Party::ALL.into_iter().map(move |p| SeriesRow {
                instance: i + 1,
                party: p,
                senti: set.series[p].values[i],
                m: set.series[p].kept_counts[i],
            })
        })
        .collect()
}

pub fn write_series<W: Write>(w: W, set: &SeriesSet) -> Result<()> {
    write_rows(w, &series_rows(set))
}

/// Per-party sentiment series rebuilt from rows. Instances must be numbered
/// 1..=n with exactly one row per party.
pub fn series_from_rows(rows: &[SeriesRow]) -> Result<PerParty<Vec<Option<f64>>>> {
    let n = rows.iter().map(|r| r.instance).max().unwrap_or(0);
    let mut seen: BTreeMap<(usize, Party), Option<f64>> = BTreeMap::new();
    for r in rows {
        if r.instance == 0 {
            return Err(Error::invalid("series", "instances are numbered from 1"));
        }
        if seen.insert((r.instance, r.party), r.senti).is_some() {
            return Err(Error::invalid(
                "series",
                format!("duplicate row for instance {} {}", r.instance, r.party),
            ));
        }
    }
    PerParty::try_from_fn(|p| {
        (1..=n)
            .map(|i| {
                seen.get(&(i, p))
                    .copied()
                    .ok_or_else(|| Error::invalid("series", format!("no {p} row for instance {i}")))
            })
            .collect()
    })
}

pub fn read_series<R: Read>(r: R) -> Result<PerParty<Vec<Option<f64>>>> {
    series_from_rows(&read_rows::<SeriesRow, _>(r, "series")?)
}

pub fn load_series(path: impl AsRef<Path>) -> Result<PerParty<Vec<Option<f64>>>> {
    read_series(open(path.as_ref())?)
}

pub fn save_series(path: impl AsRef<Path>, set: &SeriesSet) -> Result<()> {
    write_series(create(path.as_ref())?, set)
}

// ---- weights --------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct WeightRow {
    party: Party,
    weight: f64,
}

pub fn write_weights<W: Write>(w: W, weights: &CalibrationWeights) -> Result<()> {
    let rows: Vec<WeightRow> = weights
        .iter()
        .map(|(party, &weight)| WeightRow { party, weight })
        .collect();
    write_rows(w, &rows)
}

pub fn read_weights<R: Read>(r: R) -> Result<CalibrationWeights> {
    let rows: Vec<WeightRow> = read_rows(r, "weights")?;
    PerParty::try_from_fn(|p| {
        let mut hits = rows.iter().filter(|r| r.party == p);
        match (hits.next(), hits.next()) {
            (Some(r), None) => Ok(r.weight),
            (None, _) => Err(Error::invalid("weights", format!("no weight for {p}"))),
            _ => Err(Error::invalid(
                "weights",
                format!("several weights for {p}"),
            )),
        }
    })
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<CalibrationWeights> {
    read_weights(open(path.as_ref())?)
}

pub fn save_weights(path: impl AsRef<Path>, weights: &CalibrationWeights) -> Result<()> {
    write_weights(create(path.as_ref())?, weights)
}

// ---- inference ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceRow {
    pub instance: usize,
    pub con: f64,
    pub lab: f64,
    pub lib: f64,
    pub normalized: bool,
}

impl InferenceRow {
    pub fn new(instance: usize, t: &InferredTriplet) -> Self {
        InferenceRow {
            instance,
            con: t.con,
            lab: t.lab,
            lib: t.lib,
            normalized: t.normalized,
        }
    }

    pub fn triplet(&self) -> InferredTriplet {
        InferredTriplet {
            con: self.con,
            lab: self.lab,
            lib: self.lib,
            normalized: self.normalized,
        }
    }
}

pub fn write_inference<W: Write>(w: W, rows: &[InferenceRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn read_inference<R: Read>(r: R) -> Result<Vec<InferenceRow>> {
    read_rows(r, "inference")
}

pub fn save_inference(path: impl AsRef<Path>, rows: &[InferenceRow]) -> Result<()> {
    write_inference(create(path.as_ref())?, rows)
}

pub fn load_inference(path: impl AsRef<Path>) -> Result<Vec<InferenceRow>> {
    read_inference(open(path.as_ref())?)
}

// ---- plot data and report tables -----------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub instance: usize,
    pub party: Party,
    pub target: f64,
    pub inferred: f64,
}

/// Three rows per evaluated instance (1-based), in instance then party order.
pub fn plot_rows(report: &EvaluationReport) -> Vec<PlotRow> {
    let mut res: Vec<_> = report.residuals.iter().collect();
    res.sort_by_key(|r| r.instance);
    res.into_iter()
        .flat_map(|r| {
            Party::ALL.into_iter().map(move |p| PlotRow {
                instance: r.instance + 1,
                party: p,
                target: r.target[p.index()],
                inferred: r.inferred.get(p),
            })
        })
        .collect()
}

pub fn write_plot_data<W: Write>(w: W, report: &EvaluationReport) -> Result<()> {
    write_rows(w, &plot_rows(report))
}

pub fn read_plot_data<R: Read>(r: R) -> Result<Vec<PlotRow>> {
    read_rows(r, "plot data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub instance: usize,
    pub con_target: f64,
    pub lab_target: f64,
    pub lib_target: f64,
    pub con_inferred: f64,
    pub lab_inferred: f64,
    pub lib_inferred: f64,
    pub normalized: bool,
    pub ranking_error: u32,
}

pub fn write_residuals<W: Write>(w: W, report: &EvaluationReport) -> Result<()> {
    let rows: Vec<ResidualRow> = report
        .residuals
        .iter()
        .map(|r| ResidualRow {
            instance: r.instance + 1,
            con_target: r.target[0],
            lab_target: r.target[1],
            lib_target: r.target[2],
            con_inferred: r.inferred.con,
            lab_inferred: r.inferred.lab,
            lib_inferred: r.inferred.lib,
            normalized: r.inferred.normalized,
            ranking_error: r.ranking_error,
        })
        .collect();
    write_rows(w, &rows)
}

/// One row of the summary table, errors in share units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub aggregation: String,
    pub delta: Option<f64>,
    pub mode: String,
    pub con_mae: f64,
    pub con_sd: f64,
    pub lab_mae: f64,
    pub lab_sd: f64,
    pub lib_mae: f64,
    pub lib_sd: f64,
    pub all_mae: f64,
    pub all_sd: f64,
    pub mre: f64,
    pub p_value: Option<f64>,
    pub seed: u64,
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    read_rows(r, "summary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::SentimentSeries;

    fn set() -> SeriesSet {
        let series = PerParty::from_fn(|p| SentimentSeries {
            party: p,
            values: vec![Some(0.1 + p.index() as f64 / 3.0), None],
            kept_counts: vec![4, 0],
        });
        SeriesSet {
            series,
            delta: 0.0,
            missing: vec![],
        }
    }

    #[test]
    fn series_round_trip() {
        let mut buf = Vec::new();
        write_series(&mut buf, &set()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("instance,party,senti,m\n1,CON,0.1,4\n"));
        assert!(text.contains("2,LIB,,0\n"));
        let back = read_series(&buf[..]).unwrap();
        assert_eq!(back, set().series.map(|_, s| s.values.clone()));
    }

    #[test]
    fn series_gaps_are_errors() {
        let csv = "instance,party,senti,m\n1,CON,0.1,1\n1,LAB,0.1,1\n";
        assert!(read_series(csv.as_bytes()).is_err());
        let dup = "instance,party,senti,m\n1,CON,0.1,1\n1,CON,0.1,1\n1,LAB,0.1,1\n1,LIB,0.1,1\n";
        assert!(read_series(dup.as_bytes()).is_err());
    }

    #[test]
    fn weights_round_trip() {
        let w = PerParty::new(1.25, 2.0 / 3.0, 0.1 + 0.2);
        let mut buf = Vec::new();
        write_weights(&mut buf, &w).unwrap();
        assert_eq!(read_weights(&buf[..]).unwrap(), w);
        assert!(read_weights("party,weight\nCON,1\n".as_bytes()).is_err());
    }

    #[test]
    fn scores_round_trip() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let scores = vec![
            SentimentScore::new(0.125, 0.0, 2),
            SentimentScore::new(1.0 / 3.0, 0.5, 1),
        ];
        let mut buf = Vec::new();
        write_scores(&mut buf, &ids, &scores).unwrap();
        let back = read_scores(&buf[..]).unwrap();
        assert_eq!(back, ids.into_iter().zip(scores).collect::<Vec<_>>());
        assert!(read_scores("a\t1\t2".as_bytes()).is_err());
    }

    #[test]
    fn selections_round_trip() {
        let mut sel: PerParty<HashSet<String>> = PerParty::default();
        sel.con.insert("2".into());
        sel.con.insert("1".into());
        sel.lib.insert("1".into());
        let mut buf = Vec::new();
        write_selections(&mut buf, &sel).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "CON\t1\nCON\t2\nLIB\t1\n"
        );
        assert_eq!(read_selections(&buf[..]).unwrap(), sel);
    }

    #[test]
    fn inference_round_trip() {
        let rows = vec![InferenceRow {
            instance: 3,
            con: 0.5,
            lab: 0.3,
            lib: 0.2,
            normalized: true,
        }];
        let mut buf = Vec::new();
        write_inference(&mut buf, &rows).unwrap();
        assert_eq!(read_inference(&buf[..]).unwrap(), rows);
    }
}
