//! Error metrics, leave-one-out and fixed-split evaluation, and permutation
//! significance.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_and_infer, CalibrationWeights, Dataset, InferredTriplet};
use crate::error::{Error, Result};
use crate::party::{Party, PerParty};

/// Mean absolute error with its sample standard deviation (n - 1; zero for
/// a single value).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MaeStat {
    pub mean: f64,
    pub sd: f64,
}

impl MaeStat {
    fn of(values: &[f64]) -> MaeStat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MaeStat { mean, sd }
    }
}

impl fmt::Display for MaeStat {
    /// Percentage points, as `mean ± sd`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean * 100.0, self.sd * 100.0)
    }
}

pub fn mae(inferred: &[f64], target: &[f64]) -> Result<MaeStat> {
    if inferred.len() != target.len() {
        return Err(Error::Evaluation(format!(
            "length mismatch: {} inferred, {} target",
            inferred.len(),
            target.len()
        )));
    }
    if inferred.is_empty() {
        return Err(Error::Evaluation("no values to compare".into()));
    }
    let errs: Vec<f64> = inferred
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(MaeStat::of(&errs))
}

/// Ranks 1..3 by descending share; equal shares keep CON > LAB > LIB order.
fn ranks(t: [f64; 3]) -> [usize; 3] {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    let mut r = [0; 3];
    for (pos, &party) in order.iter().enumerate() {
        r[party] = pos + 1;
    }
    r
}

/// Sum over parties of the distance between inferred and true rank; 0, 2 or 4.
pub fn ranking_error(inferred: [f64; 3], target: [f64; 3]) -> u32 {
    let a = ranks(inferred);
    let b = ranks(target);
    (0..3).map(|i| a[i].abs_diff(b[i]) as u32).sum()
}

pub fn mre(errors: &[u32]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().map(|&e| e as f64).sum::<f64>() / (errors.len() as f64 * 4.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Zero-based instance index.
    pub instance: usize,
    pub target: [f64; 3],
    pub inferred: InferredTriplet,
    pub ranking_error: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_party: PerParty<MaeStat>,
    /// Per instance, the mean of the three absolute errors, summarized.
    pub all_parties: MaeStat,
    pub mre: f64,
    pub p_value: Option<f64>,
    pub residuals: Vec<Residual>,
    /// Held-out instances that could not be inferred for lack of sentiment.
    pub skipped: Vec<usize>,
    /// Weights of the single fit (split mode); `None` for cross-validation.
    pub weights: Option<CalibrationWeights>,
}

impl EvaluationReport {
    fn from_residuals(
        residuals: Vec<Residual>,
        skipped: Vec<usize>,
        weights: Option<CalibrationWeights>,
    ) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::Evaluation(
                "no held-out instance could be inferred".into(),
            ));
        }
        let per_party = PerParty::try_from_fn(|p: Party| {
            let inf: Vec<f64> = residuals.iter().map(|r| r.inferred.get(p)).collect();
            let tgt: Vec<f64> = residuals.iter().map(|r| r.target[p.index()]).collect();
            mae(&inf, &tgt)
        })?;
        let per_instance: Vec<f64> = residuals
            .iter()
            .map(|r| {
                (0..3)
                    .map(|i| (r.inferred.to_array()[i] - r.target[i]).abs())
                    .sum::<f64>()
                    / 3.0
            })
            .collect();
        let errors: Vec<u32> = residuals.iter().map(|r| r.ranking_error).collect();
        Ok(EvaluationReport {
            per_party,
            all_parties: MaeStat::of(&per_instance),
            mre: mre(&errors),
            p_value: None,
            residuals,
            skipped,
            weights,
        })
    }
}

fn residuals_for(
    data: &Dataset,
    test: &[usize],
    inferred: Vec<Option<InferredTriplet>>,
    residuals: &mut Vec<Residual>,
    skipped: &mut Vec<usize>,
) {
    for (&i, inf) in test.iter().zip(inferred) {
        match inf {
            Some(inferred) => residuals.push(Residual {
                instance: i,
                target: data.polls[i],
                inferred,
                ranking_error: ranking_error(inferred.to_array(), data.polls[i]),
            }),
            None => {
                log::warn!("instance {} lacks sentiment for some party; skipped", i + 1);
                skipped.push(i);
            }
        }
    }
}

/// Every instance is held out once and inferred from a fit on all others.
pub fn loocv(data: &Dataset) -> Result<EvaluationReport> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Evaluation(format!(
            "cross-validation needs at least 2 instances, got {n}"
        )));
    }
    let mut residuals = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for i in 0..n {
        let train: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let (_, inferred) = calibrate_and_infer(data, &train, &[i]).map_err(|e| Error::Fold {
            fold: i + 1,
            inner: Box::new(e),
        })?;
        residuals_for(data, &[i], inferred, &mut residuals, &mut skipped);
    }
    EvaluationReport::from_residuals(residuals, skipped, None)
}

/// Train and test instance indices, zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn new(train: Vec<usize>, test: Vec<usize>, n: usize) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::Evaluation(
                "train and test sets must be non-empty".into(),
            ));
        }
        if let Some(i) = train.iter().chain(&test).find(|&&i| i >= n) {
            return Err(Error::Evaluation(format!(
                "instance {} out of range 1..={n}",
                i + 1
            )));
        }
        if let Some(i) = train.iter().find(|i| test.contains(i)) {
            return Err(Error::Evaluation(format!(
                "instance {} is in both train and test",
                i + 1
            )));
        }
        Ok(SplitSpec { train, test })
    }

    /// Training ranges given as 1-based inclusive ordinals (`1-30,47-58`);
    /// every other instance is tested.
    pub fn from_train_ranges(ranges: &str, n: usize) -> Result<Self> {
        let train = parse_ranges(ranges)?;
        let test = (0..n).filter(|i| !train.contains(i)).collect();
        SplitSpec::new(train, test, n)
    }

    /// Training on polls 1-30 and 47-58, testing on 31-46 and 59-68.
    pub fn default_for(n: usize) -> Result<Self> {
        SplitSpec::from_train_ranges(DEFAULT_TRAIN_RANGES, n)
    }
}

pub const DEFAULT_TRAIN_RANGES: &str = "1-30,47-58";

/// Parses `a-b,c,d-e` (1-based, inclusive) into sorted zero-based indices.
pub fn parse_ranges(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Evaluation(format!("bad range list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let a: usize = a.parse().map_err(|_| bad())?;
        let b: usize = b.parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        out.extend(a - 1..b);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn split_eval(data: &Dataset, split: &SplitSpec) -> Result<EvaluationReport> {
    let (w, inferred) = calibrate_and_infer(data, &split.train, &split.test)?;
    let mut residuals = Vec::with_capacity(split.test.len());
    let mut skipped = Vec::new();
    residuals_for(data, &split.test, inferred, &mut residuals, &mut skipped);
    EvaluationReport::from_residuals(residuals, skipped, Some(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermuteMode {
    /// One permutation per round shared by the three party series.
    #[default]
    Joint,
    /// A separate permutation per party series.
    Independent,
}

impl FromStr for PermuteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joint" => Ok(PermuteMode::Joint),
            "independent" => Ok(PermuteMode::Independent),
            other => Err(Error::invalid("permute", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOutcome {
    pub p_value: f64,
    pub rounds: usize,
    /// Rounds whose permuted model had a strictly lower all-parties MAE.
    pub better: usize,
    /// Rounds whose refit failed; counted as not better.
    pub failed: usize,
    pub actual_mae: f64,
}

fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64);
    rng
}

/// Shuffles the sentiment series against the polls `rounds` times, refits on
/// the split each time and reports the fraction of rounds beating the
/// actual all-parties MAE. Reproducible from `(seed, rounds)`; round `r`
/// draws from its own stream of the seeded generator.
pub fn permutation_pvalue(
    data: &Dataset,
    split: &SplitSpec,
    rounds: usize,
    seed: u64,
    mode: PermuteMode,
) -> Result<PermutationOutcome> {
    if rounds == 0 {
        return Err(Error::Evaluation(
            "permutation test needs at least one round".into(),
        ));
    }
    let actual = split_eval(data, split)?.all_parties.mean;
    let n = data.len();
    let mut better = 0;
    let mut failed = 0;
    for r in 0..rounds {
        let mut rng = round_rng(seed, r);
        let perms: [Vec<usize>; 3] = match mode {
            PermuteMode::Joint => {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                [p.clone(), p.clone(), p]
            }
            PermuteMode::Independent => std::array::from_fn(|_| {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                p
            }),
        };
        let senti = PerParty::from_fn(|party| {
            perms[party.index()]
                .iter()
                .map(|&j| data.senti[party][j])
                .collect()
        });
        let permuted = Dataset {
            senti,
            polls: data.polls.clone(),
        };
        match split_eval(&permuted, split) {
            Ok(rep) if rep.all_parties.mean < actual => better += 1,
            Ok(_) => {}
            Err(e) => {
                log::debug!("permutation round {r} failed: {e}");
                failed += 1;
            }
        }
    }
    Ok(PermutationOutcome {
        p_value: better as f64 / rounds as f64,
        rounds,
        better,
        failed,
        actual_mae: actual,
    })
}
