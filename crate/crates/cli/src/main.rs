use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pollsense::aggregation::build_series;
use pollsense::artifacts::{self, InferenceRow};
use pollsense::calibration::{infer_triplet, Dataset};
use pollsense::corpus::{build_time_instances, load_polls, load_tweets, LoadMode, Tweet};
use pollsense::evaluation::parse_ranges;
use pollsense::pipeline::{self, ConfigLayer, ReportContext};
use pollsense::scorer::SentimentScore;
use pollsense::{Party, PerParty};

/// Infer party vote shares from the sentiment of political tweets.
///
/// Settings come from `--config`, then `POLLSENSE_*` environment variables,
/// then flags; later sources win.
#[derive(Debug, Parser)]
#[command(name = "pollsense", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "POLLSENSE_CONFIG")]
    config: Option<PathBuf>,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select party-relevant tweets by keyword; writes `party<TAB>id` lines.
    Select {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        keywords: KeywordArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Score tweets; writes `id<TAB>pos<TAB>neg<TAB>matched`.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Only score tweets listed in this selections file.
        #[arg(long)]
        selections: Option<PathBuf>,
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// snpos, spos or sposw.
        #[arg(long)]
        method: Option<String>,
        /// embedded (built-in rules) or pretagged (tags in the tweets file).
        #[arg(long)]
        tagger: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Aggregate scored tweets per poll window; writes `instance,party,senti,m`.
    Aggregate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        polls: Option<PathBuf>,
        #[arg(long)]
        selections: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// mts or dsc.
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Fit per-party weights; writes `party,weight`.
    Calibrate {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        polls: Option<PathBuf>,
        /// Fit on these 1-based instances only, e.g. `1-30,47-58`.
        #[arg(long)]
        train_ranges: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Infer normalized triplets; writes `instance,con,lab,lib,normalized`.
    Infer {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate a series against polls and write the report files.
    Evaluate {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        polls: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
        /// Directory for the report files.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run every stage end to end.
    Run {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        polls: Option<PathBuf>,
        #[command(flatten)]
        keywords: KeywordArgs,
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// snpos, spos or sposw.
        #[arg(long)]
        method: Option<String>,
        /// mts or dsc.
        #[arg(long)]
        aggregation: Option<String>,
        /// embedded or pretagged.
        #[arg(long)]
        tagger: Option<String>,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long)]
    tweets: Option<PathBuf>,
    /// Skip malformed tweet lines instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct KeywordArgs {
    /// `party=path`, repeatable; parties without a file use the bundled list.
    #[arg(long = "keywords", value_name = "PARTY=PATH")]
    keywords: Vec<String>,
}

#[derive(Debug, Args)]
struct LexiconArgs {
    /// SentiWordNet 3.0 file.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Synonym TSV, `headword<TAB>syn1, syn2`.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Also drop equal-weight entries from the POS-aware table.
    #[arg(long)]
    drop_equal: bool,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Keep tweets with |pos - neg| >= this value.
    #[arg(long, conflicts_with = "remove_top")]
    delta: Option<f64>,
    /// Remove this many lowest-clarity tweets.
    #[arg(long)]
    remove_top: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// loocv or split.
    #[arg(long)]
    mode: Option<String>,
    /// 1-based training instances for split mode and permutations.
    #[arg(long)]
    train_ranges: Option<String>,
    /// Permutation rounds; 0 disables the test.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// joint or independent.
    #[arg(long)]
    permute: Option<String>,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output file; standard output when absent or `-`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl OutArg {
    fn writer(&self) -> Result<Box<dyn Write>> {
        match &self.out {
            Some(p) if p.as_os_str() != "-" => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                }
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                Ok(Box::new(BufWriter::new(f)))
            }
            _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        }
    }
}

fn keyword_map(args: &KeywordArgs) -> Result<Option<BTreeMap<String, PathBuf>>> {
    if args.keywords.is_empty() {
        return Ok(None);
    }
    let mut map = BTreeMap::new();
    for kv in &args.keywords {
        let (party, path) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--keywords expects PARTY=PATH, got `{kv}`"))?;
        map.insert(party.trim().to_string(), PathBuf::from(path.trim()));
    }
    Ok(Some(map))
}

/// Flags over environment over config file.
fn layered(config: Option<&Path>, flags: ConfigLayer) -> Result<ConfigLayer> {
    let file = match config {
        Some(p) => ConfigLayer::from_file(p)?,
        None => ConfigLayer::default(),
    };
    let env = ConfigLayer::from_env(std::env::vars())?;
    Ok(flags.over(env.over(file)))
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("missing {flag} (flag, POLLSENSE_* variable or config)"))
}

fn load_mode(lenient: Option<bool>) -> LoadMode {
    if lenient.unwrap_or(false) {
        LoadMode::Lenient
    } else {
        LoadMode::FailFast
    }
}

fn keyword_paths(layer: &ConfigLayer) -> Result<PerParty<Option<PathBuf>>> {
    let mut paths: PerParty<Option<PathBuf>> = PerParty::default();
    for (name, path) in layer.keywords.clone().unwrap_or_default() {
        let party: Party = name.parse()?;
        paths[party] = Some(path);
    }
    Ok(paths)
}

fn load_corpus(layer: &ConfigLayer) -> Result<Vec<Tweet>> {
    let tweets = need(layer.tweets.clone(), "--tweets")?;
    let load = load_tweets(&tweets, load_mode(layer.lenient))?;
    if !load.skipped.is_empty() {
        log::warn!(
            "skipped {} malformed lines in {}",
            load.skipped.len(),
            tweets.display()
        );
    }
    Ok(load.tweets)
}

/// Series CSV plus poll shares, checked for equal length.
fn load_dataset(series: &Path, polls: &Path) -> Result<Dataset> {
    let senti = artifacts::load_series(series)?;
    let polls = load_polls(polls)?;
    Ok(pipeline::dataset(senti, &polls)?)
}

fn truthy(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Select {
            corpus,
            keywords,
            out,
        } => {
            let layer = layered(
                config,
                ConfigLayer {
                    tweets: corpus.tweets,
                    lenient: truthy(corpus.lenient),
                    keywords: keyword_map(&keywords)?,
                    ..Default::default()
                },
            )?;
            let tweets = load_corpus(&layer)?;
            let sets = pipeline::load_keyword_sets(&keyword_paths(&layer)?)?;
            let sel = pipeline::select(&tweets, &sets);
            for (p, ids) in sel.iter() {
                log::info!("{p}: {} tweets", ids.len());
            }
            artifacts::write_selections(out.writer()?, &sel)?;
        }
        Command::Score {
            corpus,
            selections,
            lexicon,
            method,
            tagger,
            out,
        } => {
            let layer = layered(
                config,
                ConfigLayer {
                    tweets: corpus.tweets,
                    lenient: truthy(corpus.lenient),
                    lexicon: lexicon.lexicon,
                    synonyms: lexicon.synonyms,
                    drop_equal: truthy(lexicon.drop_equal),
                    method,
                    tagger,
                    ..Default::default()
                },
            )?;
            let mut tweets = load_corpus(&layer)?;
            if let Some(sel) = selections {
                let sel = artifacts::load_selections(sel)?;
                tweets = pipeline::selected_tweets(&tweets, &sel);
            }
            let method = layer.method.as_deref().unwrap_or("snpos").parse()?;
            let tagger = layer.tagger.as_deref().unwrap_or("embedded").parse()?;
            let lex_path = need(layer.lexicon.clone(), "--lexicon")?;
            if method == pollsense::scorer::Method::SPosW && layer.synonyms.is_none() {
                bail!("method sposw needs --synonyms");
            }
            let lex = pipeline::load_lexicon(
                &lex_path,
                layer.synonyms.as_deref(),
                layer.drop_equal.unwrap_or(false),
            )?;
            let scores = pipeline::score(&lex, method, &tweets, tagger)?;
            let ids: Vec<String> = tweets.iter().map(|t| t.id.clone()).collect();
            artifacts::write_scores(out.writer()?, &ids, &scores)?;
        }
        Command::Aggregate {
            corpus,
            polls,
            selections,
            scores,
            method,
            threshold,
            out,
        } => {
            let layer = layered(
                config,
                ConfigLayer {
                    tweets: corpus.tweets,
                    lenient: truthy(corpus.lenient),
                    polls,
                    aggregation: method,
                    delta: threshold.delta,
                    remove_top: threshold.remove_top,
                    ..Default::default()
                },
            )?;
            let tweets = load_corpus(&layer)?;
            let polls = load_polls(need(layer.polls.clone(), "--polls")?)?;
            let sel = artifacts::load_selections(selections)?;
            let scored: BTreeMap<String, SentimentScore> =
                artifacts::load_scores(&scores)?.into_iter().collect();
            let scored_tweets: Vec<Tweet> = tweets
                .into_iter()
                .filter(|t| scored.contains_key(&t.id))
                .collect();
            let seen: HashSet<&str> = scored_tweets.iter().map(|t| t.id.as_str()).collect();
            if let Some(id) = scored.keys().find(|id| !seen.contains(id.as_str())) {
                bail!("scored tweet {id} is not in the tweets file");
            }
            let score_list: Vec<SentimentScore> =
                scored_tweets.iter().map(|t| scored[&t.id]).collect();
            let agg = aggregation_config(&layer)?;
            let windows = build_time_instances(&scored_tweets, &polls, &sel);
            let set = build_series(&windows.instances, &scored_tweets, &score_list, &agg)?;
            log::info!("threshold delta = {}", set.delta);
            artifacts::write_series(out.writer()?, &set)?;
        }
        Command::Calibrate {
            series,
            polls,
            train_ranges,
            out,
        } => {
            let layer = layered(
                config,
                ConfigLayer {
                    polls,
                    train_ranges,
                    ..Default::default()
                },
            )?;
            let data = load_dataset(&series, &need(layer.polls, "--polls")?)?;
            let train = match layer.train_ranges {
                Some(r) => {
                    let idx = parse_ranges(&r)?;
                    if let Some(i) = idx.iter().find(|&&i| i >= data.len()) {
                        bail!(
                            "training instance {} beyond the {} in the series",
                            i + 1,
                            data.len()
                        );
                    }
                    idx
                }
                None => (0..data.len()).collect(),
            };
            let w = data.fit(&train)?;
            artifacts::write_weights(out.writer()?, &w)?;
        }
        Command::Infer {
            weights,
            series,
            out,
        } => {
            let w = artifacts::load_weights(weights)?;
            let senti = artifacts::load_series(series)?;
            let mut rows = Vec::new();
            for i in 0..senti.con.len() {
                match (senti.con[i], senti.lab[i], senti.lib[i]) {
                    (Some(c), Some(l), Some(d)) => {
                        let t = infer_triplet([c, l, d], &w)
                            .with_context(|| format!("instance {}", i + 1))?;
                        rows.push(InferenceRow::new(i + 1, &t));
                    }
                    _ => log::warn!("instance {} lacks a party's sentiment; skipped", i + 1),
                }
            }
            artifacts::write_inference(out.writer()?, &rows)?;
        }
        Command::Evaluate {
            series,
            polls,
            eval,
            output_dir,
        } => {
            let layer = layered(
                config,
                eval_layer(
                    eval,
                    ConfigLayer {
                        polls,
                        output_dir,
                        ..Default::default()
                    },
                ),
            )?;
            let polls_path = need(layer.polls.clone(), "--polls")?;
            let data = load_dataset(&series, &polls_path)?;
            let settings = pipeline::EvaluationSettings::from_layer(&layer)?;
            let seed = layer.seed.unwrap_or(0);
            let report = pipeline::evaluate(&data, &settings, seed)?;
            let weights = pipeline::reported_weights(&data, &report)?;
            let ctx = ReportContext {
                method: None,
                aggregation: None,
                delta: None,
                evaluation: settings,
                seed,
            };
            let dir = layer.output_dir.unwrap_or_else(|| PathBuf::from("out"));
            pipeline::write_evaluation(&dir, &ctx, &weights, &report)?;
            print!("{}", pipeline::render_report(&ctx, &weights, &report));
        }
        Command::Run {
            corpus,
            polls,
            keywords,
            lexicon,
            method,
            aggregation,
            tagger,
            threshold,
            eval,
            output_dir,
        } => {
            let flags = eval_layer(
                eval,
                ConfigLayer {
                    tweets: corpus.tweets,
                    lenient: truthy(corpus.lenient),
                    polls,
                    keywords: keyword_map(&keywords)?,
                    lexicon: lexicon.lexicon,
                    synonyms: lexicon.synonyms,
                    drop_equal: truthy(lexicon.drop_equal),
                    method,
                    aggregation,
                    tagger,
                    delta: threshold.delta,
                    remove_top: threshold.remove_top,
                    output_dir,
                    ..Default::default()
                },
            );
            let cfg = layered(config, flags)?.resolve()?;
            let run = pipeline::run_pipeline(&cfg)?;
            let ctx = ReportContext::for_run(&cfg, run.series.delta);
            print!(
                "{}",
                pipeline::render_report(&ctx, &run.weights, &run.report)
            );
            for f in &run.files {
                log::info!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn eval_layer(eval: EvalArgs, base: ConfigLayer) -> ConfigLayer {
    ConfigLayer {
        mode: eval.mode,
        train_ranges: eval.train_ranges,
        permutations: eval.permutations,
        seed: eval.seed,
        permute: eval.permute,
        ..base
    }
}

fn aggregation_config(layer: &ConfigLayer) -> Result<pollsense::aggregation::AggregationConfig> {
    use pollsense::aggregation::{AggregationConfig, Threshold};
    let threshold = match (layer.delta, layer.remove_top) {
        (Some(_), Some(_)) => bail!("give either --delta or --remove-top"),
        (None, Some(k)) => Threshold::RemoveTop(k),
        (d, None) => Threshold::Delta(d.unwrap_or(0.0)),
    };
    let method = layer.aggregation.as_deref().unwrap_or("mts").parse()?;
    Ok(AggregationConfig::new(method, threshold)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pollsense: {e:#}");
            ExitCode::FAILURE
        }
    }
}
