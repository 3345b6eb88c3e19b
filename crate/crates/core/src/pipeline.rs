//! End-to-end runs: configuration layering, the select, score, aggregate,
//! calibrate and evaluate stages, and the files a run leaves behind.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::aggregation::{
    build_series, AggregationConfig, AggregationMethod, SeriesSet, Threshold,
};
use crate::artifacts::{self, InferenceRow, SummaryRow};
use crate::calibration::{CalibrationWeights, Dataset};
use crate::corpus::{build_time_instances, load_polls, load_tweets, LoadMode, PollRecord, Tweet};
use crate::error::{Error, Result};
use crate::evaluation::{
    loocv, permutation_pvalue, split_eval, EvaluationReport, PermuteMode, SplitSpec,
    DEFAULT_TRAIN_RANGES,
};
use crate::keywords::{select_party_tweets, KeywordSet};
use crate::lexicon::{
    build_pos_agnostic_table, build_pos_aware_table, load_synonyms, parse_sentiwordnet,
};
use crate::party::{Party, PerParty};
use crate::scorer::{Lexicon, Method, SentimentScore, Tagging};
use crate::tagger::BaselineTagger;

pub const ENV_PREFIX: &str = "POLLSENSE_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaggerChoice {
    /// The built-in suffix-rule tagger.
    #[default]
    Embedded,
    /// Tags supplied in the tweets file.
    Pretagged,
}

impl FromStr for TaggerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "embedded" => Ok(TaggerChoice::Embedded),
            "pretagged" => Ok(TaggerChoice::Pretagged),
            other => Err(Error::Config(format!("unknown tagger `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Loocv,
    Split,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loocv" => Ok(EvalMode::Loocv),
            "split" => Ok(EvalMode::Split),
            other => Err(Error::Config(format!("unknown evaluation mode `{other}`"))),
        }
    }
}

/// One source of settings (file, environment or flags). Unset fields defer
/// to lower layers.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub tweets: Option<PathBuf>,
    pub polls: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    /// Party name to keyword file.
    pub keywords: Option<BTreeMap<String, PathBuf>>,
    pub method: Option<String>,
    pub aggregation: Option<String>,
    pub delta: Option<f64>,
    pub remove_top: Option<usize>,
    pub tagger: Option<String>,
    pub lenient: Option<bool>,
    pub drop_equal: Option<bool>,
    pub mode: Option<String>,
    pub train_ranges: Option<String>,
    pub permutations: Option<usize>,
    pub permute: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl ConfigLayer {
    pub fn from_toml(content: &str) -> Result<Self> {
        toml::from_str(content).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut layer = ConfigLayer::from_toml(&content)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut layer.tweets,
            &mut layer.polls,
            &mut layer.lexicon,
            &mut layer.synonyms,
            &mut layer.output_dir,
        ] {
            rebase(base, p);
        }
        if let Some(kw) = &mut layer.keywords {
            for path in kw.values_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(layer)
    }

    /// Reads `POLLSENSE_<FIELD>` variables from `vars`, e.g.
    /// `POLLSENSE_METHOD=spos` or `POLLSENSE_KEYWORDS_CON=con.txt`.
    pub fn from_env<I, K, V>(vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut l = ConfigLayer::default();
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let v = v.as_ref().to_string();
            let num =
                |what: &str| Error::Config(format!("{ENV_PREFIX}{what}: not a number: `{v}`"));
            match key.to_ascii_lowercase().as_str() {
                "tweets" => l.tweets = Some(v.into()),
                "polls" => l.polls = Some(v.into()),
                "lexicon" => l.lexicon = Some(v.into()),
                "synonyms" => l.synonyms = Some(v.into()),
                "method" => l.method = Some(v),
                "aggregation" => l.aggregation = Some(v),
                "delta" => l.delta = Some(v.parse().map_err(|_| num("DELTA"))?),
                "remove_top" => l.remove_top = Some(v.parse().map_err(|_| num("REMOVE_TOP"))?),
                "tagger" => l.tagger = Some(v),
                "lenient" => l.lenient = Some(parse_bool(&v)?),
                "drop_equal" => l.drop_equal = Some(parse_bool(&v)?),
                "mode" => l.mode = Some(v),
                "train_ranges" => l.train_ranges = Some(v),
                "permutations" => {
                    l.permutations = Some(v.parse().map_err(|_| num("PERMUTATIONS"))?)
                }
                "permute" => l.permute = Some(v),
                "seed" => l.seed = Some(v.parse().map_err(|_| num("SEED"))?),
                "output_dir" => l.output_dir = Some(v.into()),
                other => {
                    if let Some(party) = other.strip_prefix("keywords_") {
                        l.keywords
                            .get_or_insert_with(BTreeMap::new)
                            .insert(party.to_string(), v.into());
                    } else {
                        log::debug!("ignoring unknown variable {ENV_PREFIX}{key}");
                    }
                }
            }
        }
        Ok(l)
    }

    /// `self` wins over `lower`. A threshold in `self` replaces either kind
    /// of threshold below it.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        let (delta, remove_top) = if self.delta.is_some() || self.remove_top.is_some() {
            (self.delta, self.remove_top)
        } else {
            (lower.delta, lower.remove_top)
        };
        let keywords = match (self.keywords, lower.keywords) {
            (Some(mut top), Some(low)) => {
                for (k, v) in low {
                    top.entry(k).or_insert(v);
                }
                Some(top)
            }
            (top, low) => top.or(low),
        };
        ConfigLayer {
            tweets: self.tweets.or(lower.tweets),
            polls: self.polls.or(lower.polls),
            lexicon: self.lexicon.or(lower.lexicon),
            synonyms: self.synonyms.or(lower.synonyms),
            keywords,
            method: self.method.or(lower.method),
            aggregation: self.aggregation.or(lower.aggregation),
            delta,
            remove_top,
            tagger: self.tagger.or(lower.tagger),
            lenient: self.lenient.or(lower.lenient),
            drop_equal: self.drop_equal.or(lower.drop_equal),
            mode: self.mode.or(lower.mode),
            train_ranges: self.train_ranges.or(lower.train_ranges),
            permutations: self.permutations.or(lower.permutations),
            permute: self.permute.or(lower.permute),
            seed: self.seed.or(lower.seed),
            output_dir: self.output_dir.or(lower.output_dir),
        }
    }

    pub fn resolve(self) -> Result<PipelineConfig> {
        PipelineConfig::from_layer(self)
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        other => Err(Error::Config(format!("not a boolean: `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputPaths {
    pub tweets: PathBuf,
    pub polls: PathBuf,
    pub lexicon: PathBuf,
    pub synonyms: Option<PathBuf>,
    /// `None` selects the bundled list.
    pub keywords: PerParty<Option<PathBuf>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSettings {
    pub mode: EvalMode,
    /// 1-based training ranges for split mode and permutation tests.
    pub train_ranges: String,
    pub permutations: usize,
    pub permute: PermuteMode,
}

impl EvaluationSettings {
    /// Evaluation fields of a layer, with defaults filled in.
    pub fn from_layer(l: &ConfigLayer) -> Result<Self> {
        let s = EvaluationSettings {
            mode: parse_opt(l.mode.clone(), EvalMode::Loocv)?,
            train_ranges: l
                .train_ranges
                .clone()
                .unwrap_or_else(|| DEFAULT_TRAIN_RANGES.into()),
            permutations: l.permutations.unwrap_or(0),
            permute: parse_opt(l.permute.clone(), PermuteMode::Joint)?,
        };
        if s.permutations > 0 || s.mode == EvalMode::Split {
            crate::evaluation::parse_ranges(&s.train_ranges)
                .map_err(|e| Error::Config(format!("train ranges: {e}")))?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: InputPaths,
    pub method: Method,
    pub aggregation: AggregationConfig,
    pub tagger: TaggerChoice,
    pub load_mode: LoadMode,
    pub drop_equal: bool,
    pub evaluation: EvaluationSettings,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn parse_opt<T: FromStr<Err = Error>>(v: Option<String>, default: T) -> Result<T> {
    v.map_or(Ok(default), |s| s.parse())
}

impl PipelineConfig {
    fn from_layer(l: ConfigLayer) -> Result<Self> {
        let evaluation = EvaluationSettings::from_layer(&l)?;
        let need = |p: Option<PathBuf>, what: &str| {
            p.ok_or_else(|| Error::Config(format!("no {what} path given")))
        };
        let mut keywords: PerParty<Option<PathBuf>> = PerParty::default();
        for (name, path) in l.keywords.unwrap_or_default() {
            let party: Party = name
                .parse()
                .map_err(|e: Error| Error::Config(e.to_string()))?;
            keywords[party] = Some(path);
        }
        let threshold = match (l.delta, l.remove_top) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either delta or remove_top, not both".into(),
                ))
            }
            (Some(d), None) => Threshold::Delta(d),
            (None, Some(k)) => Threshold::RemoveTop(k),
            (None, None) => Threshold::Delta(0.0),
        };
        let aggregation =
            AggregationConfig::new(parse_opt(l.aggregation, AggregationMethod::Mts)?, threshold)
                .map_err(|e| Error::Config(e.to_string()))?;
        Ok(PipelineConfig {
            paths: InputPaths {
                tweets: need(l.tweets, "tweets")?,
                polls: need(l.polls, "polls")?,
                lexicon: need(l.lexicon, "lexicon")?,
                synonyms: l.synonyms,
                keywords,
            },
            method: parse_opt(l.method, Method::SnPos)?,
            aggregation,
            tagger: parse_opt(l.tagger, TaggerChoice::Embedded)?,
            load_mode: if l.lenient.unwrap_or(false) {
                LoadMode::Lenient
            } else {
                LoadMode::FailFast
            },
            drop_equal: l.drop_equal.unwrap_or(false),
            evaluation,
            seed: l.seed.unwrap_or(0),
            output_dir: l.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Every referenced input must exist, and synonym expansion needs a
    /// synonym table.
    pub fn validate(&self) -> Result<()> {
        let p = &self.paths;
        let mut inputs = vec![
            ("tweets", &p.tweets),
            ("polls", &p.polls),
            ("lexicon", &p.lexicon),
        ];
        if let Some(s) = &p.synonyms {
            inputs.push(("synonyms", s));
        }
        for (_, kw) in p.keywords.iter() {
            if let Some(k) = kw {
                inputs.push(("keywords", k));
            }
        }
        for (what, path) in inputs {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "{what} file {} does not exist",
                    path.display()
                )));
            }
        }
        if self.method == Method::SPosW && p.synonyms.is_none() {
            return Err(Error::Config("method sposw needs a synonyms file".into()));
        }
        if self.evaluation.permutations > 0 || self.evaluation.mode == EvalMode::Split {
            crate::evaluation::parse_ranges(&self.evaluation.train_ranges)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// A short label such as `SPOSW/MTS delta=0`.
    pub fn setup_label(&self) -> String {
        format!(
            "{}/{} {}",
            self.method,
            self.aggregation.method,
            threshold_label(self.aggregation.threshold)
        )
    }
}

fn threshold_label(t: Threshold) -> String {
    match t {
        Threshold::Delta(d) => format!("delta={d}"),
        Threshold::RemoveTop(k) => format!("remove-top={k}"),
    }
}

// ---- stages ---------------------------------------------------------------

pub fn load_keyword_sets(paths: &PerParty<Option<PathBuf>>) -> Result<PerParty<KeywordSet>> {
    PerParty::try_from_fn(|p| match &paths[p] {
        Some(path) => KeywordSet::from_file(path, Some(p)),
        None => Ok(KeywordSet::bundled(p)),
    })
}

pub fn select(tweets: &[Tweet], sets: &PerParty<KeywordSet>) -> PerParty<HashSet<String>> {
    PerParty::from_fn(|p| select_party_tweets(tweets, &sets[p]))
}

/// Tweets chosen for at least one party, in input order.
pub fn selected_tweets(tweets: &[Tweet], sel: &PerParty<HashSet<String>>) -> Vec<Tweet> {
    tweets
        .iter()
        .filter(|t| Party::ALL.iter().any(|&p| sel[p].contains(&t.id)))
        .cloned()
        .collect()
}

pub fn load_lexicon(lexicon: &Path, synonyms: Option<&Path>, drop_equal: bool) -> Result<Lexicon> {
    let rows = parse_sentiwordnet(lexicon)?;
    Ok(Lexicon {
        agnostic: build_pos_agnostic_table(&rows),
        aware: build_pos_aware_table(&rows, drop_equal),
        synonyms: synonyms.map(load_synonyms).transpose()?.unwrap_or_default(),
    })
}

pub fn score(
    lexicon: &Lexicon,
    method: Method,
    tweets: &[Tweet],
    tagger: TaggerChoice,
) -> Result<Vec<SentimentScore>> {
    let tagging = match tagger {
        TaggerChoice::Embedded => Tagging::Embedded(&BaselineTagger),
        TaggerChoice::Pretagged => Tagging::Pretagged,
    };
    lexicon.score_all(method, tweets, tagging)
}

pub fn aggregate(
    tweets: &[Tweet],
    scores: &[SentimentScore],
    polls: &[PollRecord],
    sel: &PerParty<HashSet<String>>,
    cfg: &AggregationConfig,
) -> Result<SeriesSet> {
    let windows = build_time_instances(tweets, polls, sel);
    build_series(&windows.instances, tweets, scores, cfg)
}

pub fn dataset(series: PerParty<Vec<Option<f64>>>, polls: &[PollRecord]) -> Result<Dataset> {
    Dataset::new(series, polls.iter().map(|p| p.shares.to_array()).collect())
}

/// Runs the configured evaluation, adding a permutation p-value when
/// rounds are requested.
pub fn evaluate(
    data: &Dataset,
    settings: &EvaluationSettings,
    seed: u64,
) -> Result<EvaluationReport> {
    let split = || SplitSpec::from_train_ranges(&settings.train_ranges, data.len());
    let mut report = match settings.mode {
        EvalMode::Loocv => loocv(data)?,
        EvalMode::Split => split_eval(data, &split()?)?,
    };
    if settings.permutations > 0 {
        let out = permutation_pvalue(
            data,
            &split()?,
            settings.permutations,
            seed,
            settings.permute,
        )?;
        if out.failed > 0 {
            log::warn!(
                "{} of {} permutation rounds failed to fit",
                out.failed,
                out.rounds
            );
        }
        report.p_value = Some(out.p_value);
    }
    Ok(report)
}

/// Weights reported for a run: the split fit, or a fit on every instance.
pub fn reported_weights(data: &Dataset, report: &EvaluationReport) -> Result<CalibrationWeights> {
    match report.weights {
        Some(w) => Ok(w),
        None => data.fit(&(0..data.len()).collect::<Vec<_>>()),
    }
}

pub fn inference_rows(report: &EvaluationReport) -> Vec<InferenceRow> {
    let mut rows: Vec<InferenceRow> = report
        .residuals
        .iter()
        .map(|r| InferenceRow::new(r.instance + 1, &r.inferred))
        .collect();
    rows.sort_by_key(|r| r.instance);
    rows
}

/// What a report describes. Scoring fields are `None` when only series
/// were evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportContext {
    pub method: Option<Method>,
    pub aggregation: Option<AggregationConfig>,
    /// The threshold applied, resolved from a removal count when needed.
    pub delta: Option<f64>,
    pub evaluation: EvaluationSettings,
    pub seed: u64,
}

impl ReportContext {
    pub fn for_run(cfg: &PipelineConfig, delta: f64) -> Self {
        ReportContext {
            method: Some(cfg.method),
            aggregation: Some(cfg.aggregation),
            delta: Some(delta),
            evaluation: cfg.evaluation.clone(),
            seed: cfg.seed,
        }
    }

    fn mode(&self) -> &'static str {
        match self.evaluation.mode {
            EvalMode::Loocv => "loocv",
            EvalMode::Split => "split",
        }
    }
}

pub fn summary_row(ctx: &ReportContext, report: &EvaluationReport) -> SummaryRow {
    let pp = &report.per_party;
    SummaryRow {
        method: ctx.method.map_or(String::new(), |m| m.label().to_string()),
        aggregation: ctx
            .aggregation
            .map_or(String::new(), |a| a.method.to_string()),
        delta: ctx.delta,
        mode: ctx.mode().to_string(),
        con_mae: pp.con.mean,
        con_sd: pp.con.sd,
        lab_mae: pp.lab.mean,
        lab_sd: pp.lab.sd,
        lib_mae: pp.lib.mean,
        lib_sd: pp.lib.sd,
        all_mae: report.all_parties.mean,
        all_sd: report.all_parties.sd,
        mre: report.mre,
        p_value: report.p_value,
        seed: ctx.seed,
    }
}

/// Plain-text summary; errors in percentage points.
pub fn render_report(
    ctx: &ReportContext,
    weights: &CalibrationWeights,
    report: &EvaluationReport,
) -> String {
    let mut s = String::new();
    let ev = &ctx.evaluation;
    let dash = || "-".to_string();
    let _ = writeln!(s, "pollsense report");
    let _ = writeln!(s, "seed: {}", ctx.seed);
    if let Some(m) = ctx.method {
        let _ = writeln!(s, "method: {m}");
    }
    if let Some(agg) = ctx.aggregation {
        let _ = writeln!(s, "aggregation: {}", agg.method);
        let _ = match (agg.threshold, ctx.delta) {
            (Threshold::RemoveTop(k), Some(d)) => {
                writeln!(
                    s,
                    "threshold: remove {k} lowest-clarity tweets (delta = {d})"
                )
            }
            (Threshold::RemoveTop(k), None) => {
                writeln!(s, "threshold: remove {k} lowest-clarity tweets")
            }
            (Threshold::Delta(d), _) => writeln!(s, "threshold: delta = {d}"),
        };
    }
    let _ = match ev.mode {
        EvalMode::Loocv => writeln!(s, "evaluation: leave-one-out"),
        EvalMode::Split => writeln!(s, "evaluation: split, training on {}", ev.train_ranges),
    };
    let _ = writeln!(
        s,
        "instances: {} evaluated, {} skipped",
        report.residuals.len(),
        report.skipped.len()
    );
    let _ = writeln!(
        s,
        "weights: CON {} LAB {} LIB {}",
        weights.con, weights.lab, weights.lib
    );
    if ev.permutations > 0 {
        let mode = match ev.permute {
            PermuteMode::Joint => "joint",
            PermuteMode::Independent => "independent",
        };
        let _ = writeln!(
            s,
            "permutations: {} ({mode}, split {})",
            ev.permutations, ev.train_ranges
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<6} {:<4} {:>10} {:>14} {:>14} {:>14} {:>14} {:>7} {:>7}",
        "Method", "Agg", "delta", "CON", "LAB", "LIB", "All", "MRE", "p"
    );
    let _ = writeln!(
        s,
        "{:<6} {:<4} {:>10} {:>14} {:>14} {:>14} {:>14} {:>7.4} {:>7}",
        ctx.method.map_or_else(dash, |m| m.label().to_string()),
        ctx.aggregation.map_or_else(dash, |a| a.method.to_string()),
        ctx.delta.map_or_else(dash, |d| format!("{d:.4}")),
        report.per_party.con.to_string(),
        report.per_party.lab.to_string(),
        report.per_party.lib.to_string(),
        report.all_parties.to_string(),
        report.mre,
        report.p_value.map_or_else(dash, |p| format!("{p:.3}")),
    );
    s
}

/// Writes the report tables and summary for an evaluation into `dir`:
/// inference, residuals, summary and plot CSVs plus `report.txt`.
pub fn write_evaluation(
    dir: &Path,
    ctx: &ReportContext,
    weights: &CalibrationWeights,
    report: &EvaluationReport,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for name in &OUTPUT_FILES[3..] {
        let path = dir.join(name);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        match *name {
            "weights.csv" => artifacts::write_weights(f, weights)?,
            "inference.csv" => artifacts::write_inference(f, &inference_rows(report))?,
            "residuals.csv" => artifacts::write_residuals(f, report)?,
            "summary.csv" => artifacts::write_summary(f, &[summary_row(ctx, report)])?,
            "plot.csv" => artifacts::write_plot_data(f, report)?,
            _ => {
                drop(f);
                fs::write(&path, render_report(ctx, weights, report))
                    .map_err(|e| Error::io(&path, e))?
            }
        }
        files.push(path);
    }
    Ok(files)
}

pub fn emit_plot_data(path: impl AsRef<Path>, report: &EvaluationReport) -> Result<()> {
    let path = path.as_ref();
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    artifacts::write_plot_data(f, report)
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: EvaluationReport,
    pub series: SeriesSet,
    pub weights: CalibrationWeights,
    pub selections: PerParty<HashSet<String>>,
    /// Files written, in write order.
    pub files: Vec<PathBuf>,
}

pub const OUTPUT_FILES: [&str; 9] = [
    "selections.tsv",
    "scores.tsv",
    "series.csv",
    "weights.csv",
    "inference.csv",
    "residuals.csv",
    "summary.csv",
    "plot.csv",
    "report.txt",
];

/// Validates `cfg`, runs every stage and writes the artifacts into the
/// output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let p = &cfg.paths;
    let tweets = load_tweets(&p.tweets, cfg.load_mode).map_err(|e| e.in_stage("corpus"))?;
    if !tweets.skipped.is_empty() {
        log::warn!("skipped {} malformed tweet lines", tweets.skipped.len());
    }
    let polls = load_polls(&p.polls).map_err(|e| e.in_stage("corpus"))?;
    let sets = load_keyword_sets(&p.keywords).map_err(|e| e.in_stage("select"))?;
    let selections = select(&tweets.tweets, &sets);
    let chosen = selected_tweets(&tweets.tweets, &selections);
    log::info!(
        "selected {} of {} tweets",
        chosen.len(),
        tweets.tweets.len()
    );

    let lexicon = load_lexicon(&p.lexicon, p.synonyms.as_deref(), cfg.drop_equal)
        .map_err(|e| e.in_stage("lexicon"))?;
    let scores =
        score(&lexicon, cfg.method, &chosen, cfg.tagger).map_err(|e| e.in_stage("score"))?;
    let series = aggregate(&chosen, &scores, &polls, &selections, &cfg.aggregation)
        .map_err(|e| e.in_stage("aggregate"))?;
    let data = dataset(series.series.map(|_, s| s.values.clone()), &polls)
        .map_err(|e| e.in_stage("calibrate"))?;
    let report = evaluate(&data, &cfg.evaluation, cfg.seed).map_err(|e| e.in_stage("evaluate"))?;
    let weights = reported_weights(&data, &report).map_err(|e| e.in_stage("calibrate"))?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ids: Vec<String> = chosen.iter().map(|t| t.id.clone()).collect();
    let mut files = vec![
        dir.join(OUTPUT_FILES[0]),
        dir.join(OUTPUT_FILES[1]),
        dir.join(OUTPUT_FILES[2]),
    ];
    artifacts::save_selections(&files[0], &selections)?;
    let f = fs::File::create(&files[1]).map_err(|e| Error::io(&files[1], e))?;
    artifacts::write_scores(f, &ids, &scores)?;
    artifacts::save_series(&files[2], &series)?;
    let ctx = ReportContext::for_run(cfg, series.delta);
    files.extend(write_evaluation(dir, &ctx, &weights, &report)?);
    Ok(PipelineRun {
        report,
        series,
        weights,
        selections,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_merge_with_top_winning() {
        let file = ConfigLayer::from_toml(
            "tweets = 't.tsv'\npolls = 'p.csv'\nlexicon = 'l.txt'\nmethod = 'spos'\ndelta = 0.1\nseed = 3\n[keywords]\ncon = 'c.txt'\n",
        )
        .unwrap();
        let env = ConfigLayer::from_env([
            ("POLLSENSE_METHOD", "sposw"),
            ("POLLSENSE_KEYWORDS_LAB", "l.txt"),
            ("HOME", "/root"),
        ])
        .unwrap();
        let flags = ConfigLayer {
            remove_top: Some(5),
            method: Some("snpos".into()),
            ..Default::default()
        };
        let merged = flags.over(env.clone().over(file.clone()));
        let cfg = merged.resolve().unwrap();
        assert_eq!(cfg.method, Method::SnPos);
        assert_eq!(cfg.aggregation.threshold, Threshold::RemoveTop(5));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.paths.keywords.con, Some(PathBuf::from("c.txt")));
        assert_eq!(cfg.paths.keywords.lab, Some(PathBuf::from("l.txt")));
        assert_eq!(cfg.paths.keywords.lib, None);
        let cfg = env.over(file).resolve().unwrap();
        assert_eq!(cfg.method, Method::SPosW);
        assert_eq!(cfg.aggregation.threshold, Threshold::Delta(0.1));
    }

    #[test]
    fn bad_layers_are_rejected() {
        assert!(ConfigLayer::from_toml("colour = 'red'").is_err());
        let both =
            ConfigLayer::from_toml("tweets='a'\npolls='b'\nlexicon='c'\ndelta=0.0\nremove_top=3")
                .unwrap();
        assert!(both.resolve().is_err());
        assert!(ConfigLayer::from_toml("polls='b'\nlexicon='c'")
            .unwrap()
            .resolve()
            .is_err());
        assert!(ConfigLayer::from_env([("POLLSENSE_SEED", "x")]).is_err());
        let neg = ConfigLayer::from_toml("tweets='a'\npolls='b'\nlexicon='c'\ndelta=-1.0").unwrap();
        assert!(neg.resolve().is_err());
    }

    #[test]
    fn missing_input_fails_validation() {
        let cfg = ConfigLayer::from_toml("tweets='/nonexistent/a'\npolls='b'\nlexicon='c'")
            .unwrap()
            .resolve()
            .unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(run_pipeline(&cfg).is_err());
    }
}
