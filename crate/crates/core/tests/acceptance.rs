//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line whether or not output capture is on.

use std::collections::HashSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pollsense::aggregation::{
    build_series, delta_for_removal, AggregationConfig, AggregationMethod, Threshold,
};
use pollsense::artifacts;
use pollsense::calibration::{fit_weight, normalize_triplet, Dataset};
use pollsense::corpus::{build_time_instances, load_tweets, LoadMode};
use pollsense::evaluation::{
    loocv, mre, permutation_pvalue, ranking_error, PermuteMode, SplitSpec,
};
use pollsense::keywords::KeywordSet;
use pollsense::pipeline::{self, ConfigLayer};
use pollsense::porter::porter_stem;
use pollsense::scorer::Method;
use pollsense::synthetic::{self, SyntheticConfig};
use pollsense::{Party, PerParty};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration) -> Check {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:.2?}, limit {limit:?}");
    Ok(format!("{took:.2?}"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn test_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

// ---- 1 ----------------------------------------------------------------------

fn porter_vocabulary() -> Check {
    let voc = std::fs::read_to_string(test_data("porter_voc.txt")).map_err(|e| e.to_string())?;
    let out = std::fs::read_to_string(test_data("porter_output.txt")).map_err(|e| e.to_string())?;
    let pairs: Vec<(&str, &str)> = voc.lines().zip(out.lines()).collect();
    ensure!(
        pairs.len() == voc.lines().count() && pairs.len() == out.lines().count(),
        "list lengths differ"
    );
    let start = Instant::now();
    let wrong = pairs.iter().filter(|(w, s)| porter_stem(w) != *s).count();
    let t = within(start, Duration::from_secs(1))?;
    ensure!(wrong == 0, "{wrong} of {} words differ", pairs.len());
    Ok(format!("{} words agree in {t}", pairs.len()))
}

// ---- 2 ----------------------------------------------------------------------

/// Rank of each party: one plus the number of parties ahead of it, where
/// a tie goes to the lower index.
fn oracle_ranks(t: [f64; 3]) -> [i64; 3] {
    std::array::from_fn(|i| {
        1 + (0..3)
            .filter(|&j| j != i && (t[j] > t[i] || (t[j] == t[i] && j < i)))
            .count() as i64
    })
}

fn oracle_re(a: [f64; 3], b: [f64; 3]) -> u32 {
    let (x, y) = (oracle_ranks(a), oracle_ranks(b));
    (0..3).map(|i| (x[i] - y[i]).unsigned_abs() as u32).sum()
}

fn metric_oracles() -> Check {
    let target = [0.45, 0.35, 0.20];
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut seen = Vec::new();
    for p in perms {
        let inferred = [target[p[0]], target[p[1]], target[p[2]]];
        let e = ranking_error(inferred, target);
        ensure!([0, 2, 4].contains(&e), "error {e} for {inferred:?}");
        ensure!(
            e == oracle_re(inferred, target),
            "oracle disagrees on {inferred:?}"
        );
        seen.push(e);
    }
    ensure!(
        seen == [0, 2, 2, 4, 4, 4],
        "per-permutation errors {seen:?}"
    );
    ensure!(
        ranking_error([0.35, 0.45, 0.20], target) == 2,
        "adjacent swap"
    );
    ensure!(ranking_error([0.20, 0.35, 0.45], target) == 4, "reversal");

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut errors = Vec::new();
    let mut total = 0u32;
    for _ in 0..1000 {
        let a: [f64; 3] = std::array::from_fn(|_| rng.random());
        let b: [f64; 3] = std::array::from_fn(|_| rng.random());
        errors.push(ranking_error(a, b));
        total += oracle_re(a, b);
    }
    let got = mre(&errors);
    let want = total as f64 / 4000.0;
    ensure!(got == want, "MRE {got} vs brute force {want}");
    Ok(format!("6 permutations ok, MRE over 1000 triplets = {got}"))
}

// ---- 3 ----------------------------------------------------------------------

fn rss(s: &[f64], p: &[f64], w: f64) -> f64 {
    s.iter().zip(p).map(|(x, y)| (y - x * w).powi(2)).sum()
}

/// Golden-section search over a bracket grown until the objective rises at
/// both ends.
fn brute_force_min(s: &[f64], p: &[f64]) -> f64 {
    let f = |w: f64| rss(s, p, w);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while f(lo) < f(0.5 * (lo + hi)) || f(hi) < f(0.5 * (lo + hi)) {
        lo *= 2.0;
        hi *= 2.0;
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn ols_closed_form() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0f64;
    let mut worst_scale = 0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..80);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let w = fit_weight(&s, &p).map_err(|e| e.to_string())?;
        worst = worst.max((w - brute_force_min(&s, &p)).abs());
        let c: f64 = rng.random_range(0.1..10.0) * if rng.random() { 1.0 } else { -1.0 };
        let scaled: Vec<f64> = s.iter().map(|x| x * c).collect();
        let wc = fit_weight(&scaled, &p).map_err(|e| e.to_string())?;
        worst_scale = worst_scale.max((wc - w / c).abs());
    }
    ensure!(
        worst <= 1e-6,
        "closed form is {worst:e} from the brute-force minimum"
    );
    ensure!(
        worst_scale <= 1e-12,
        "scale equivariance off by {worst_scale:e}"
    );
    Ok(format!(
        "max |w - brute| = {worst:.1e}, max scale error = {worst_scale:.1e}"
    ))
}

// ---- 4 ----------------------------------------------------------------------

fn normalization_rules() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut norm, mut clamped, mut degenerate) = (0, 0, 0);
    for _ in 0..10_000 {
        let raw: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..2.0));
        match normalize_triplet(raw) {
            Err(_) => {
                ensure!(raw.iter().all(|&x| x <= 0.0), "rejected {raw:?}");
                degenerate += 1;
            }
            Ok(t) => {
                let v = t.to_array();
                let sum: f64 = v.iter().sum();
                ensure!(v.iter().all(|&x| x >= 0.0), "negative share in {v:?}");
                if t.normalized {
                    ensure!(
                        (sum - 1.0).abs() <= 1e-9,
                        "normalized sum {sum} for {raw:?}"
                    );
                    norm += 1;
                } else {
                    ensure!(sum <= 1.0, "unnormalized sum {sum} for {raw:?}");
                    clamped += 1;
                }
            }
        }
    }
    let cases = [
        ([2.0, 3.0, 5.0], [0.2, 0.3, 0.5], true),
        ([-1.0, 2.0, 3.0], [0.0, 0.4, 0.6], true),
        ([-0.1, 0.3, 0.4], [0.0, 0.3, 0.4], false),
    ];
    for (raw, want, normalized) in cases {
        let t = normalize_triplet(raw).map_err(|e| e.to_string())?;
        ensure!(
            t.to_array() == want && t.normalized == normalized,
            "{raw:?} gave {t:?}"
        );
    }
    ensure!(clamped > 0 && norm > 0, "random draw missed a branch");
    Ok(format!(
        "{norm} normalized, {clamped} clamped, {degenerate} rejected; worked cases exact"
    ))
}

// ---- 5 ----------------------------------------------------------------------

fn delta_order_statistic() -> Check {
    let pool = synthetic::clarity_pool(300_000, 5);
    let k = 20_000;
    let start = Instant::now();
    let delta = delta_for_removal(&pool, k).map_err(|e| e.to_string())?;
    let removed: Vec<usize> = (0..pool.len())
        .filter(|&i| pool[i].clarity() < delta)
        .collect();
    let t = within(start, Duration::from_secs(5))?;

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| pool[a].clarity().total_cmp(&pool[b].clarity()));
    let mut lowest = order[..k].to_vec();
    lowest.sort_unstable();
    ensure!(removed.len() == k, "removed {} tweets", removed.len());
    ensure!(removed == lowest, "removed set differs from the {k} lowest");
    Ok(format!(
        "removed exactly {k} of {} ({:.2}%), delta = {delta:.6}, {t}",
        pool.len(),
        100.0 * k as f64 / pool.len() as f64
    ))
}

// ---- 6 ----------------------------------------------------------------------

fn planted_through_aggregation(cfg: &SyntheticConfig) -> Result<Dataset, String> {
    let polls = synthetic::poll_records(cfg.instances, cfg.seed).map_err(|e| e.to_string())?;
    let series = synthetic::planted_series(&polls, cfg);
    let corpus = synthetic::scored_corpus(&polls, &series, 10, cfg.seed + 1);
    let windows = build_time_instances(&corpus.tweets, &corpus.polls, &corpus.selections);
    let agg = AggregationConfig::new(AggregationMethod::Mts, Threshold::Delta(0.0))
        .map_err(|e| e.to_string())?;
    let set = build_series(&windows.instances, &corpus.tweets, &corpus.scores, &agg)
        .map_err(|e| e.to_string())?;
    Dataset::new(
        set.series.map(|_, s| s.values.clone()),
        polls.iter().map(|p| p.shares.to_array()).collect(),
    )
    .map_err(|e| e.to_string())
}

fn synthetic_recovery() -> Check {
    let start = Instant::now();
    let data = planted_through_aggregation(&SyntheticConfig::default())?;
    let rep = loocv(&data).map_err(|e| e.to_string())?;
    let t = within(start, Duration::from_secs(30))?;
    ensure!(
        rep.residuals.len() == 68,
        "{} folds evaluated",
        rep.residuals.len()
    );
    ensure!(
        rep.all_parties.mean < 0.02,
        "all-parties MAE {}",
        rep.all_parties.mean
    );
    ensure!(rep.mre < 0.15, "MRE {}", rep.mre);
    Ok(format!(
        "MAE {:.4} (±{:.4}), MRE {:.4}, {t}",
        rep.all_parties.mean, rep.all_parties.sd, rep.mre
    ))
}

// ---- 7 ----------------------------------------------------------------------

fn permutation_significance() -> Check {
    let start = Instant::now();
    let cfg = SyntheticConfig::default();
    let data = planted_through_aggregation(&cfg)?;
    let split = SplitSpec::default_for(data.len()).map_err(|e| e.to_string())?;
    let a = permutation_pvalue(&data, &split, 1000, 99, PermuteMode::Joint)
        .map_err(|e| e.to_string())?;
    let b = permutation_pvalue(&data, &split, 1000, 99, PermuteMode::Joint)
        .map_err(|e| e.to_string())?;
    ensure!(a.p_value < 0.05, "planted signal p = {}", a.p_value);
    ensure!(
        a.p_value.to_bits() == b.p_value.to_bits(),
        "p differs between identical runs"
    );

    let mut significant = 0;
    for rep in 0..50u64 {
        let noise = synthetic::noise_dataset(&SyntheticConfig {
            seed: 1000 + rep,
            ..cfg
        })
        .map_err(|e| e.to_string())?;
        let out = permutation_pvalue(&noise, &split, 1000, rep, PermuteMode::Joint)
            .map_err(|e| e.to_string())?;
        if out.p_value < 0.05 {
            significant += 1;
        }
    }
    let t = within(start, Duration::from_secs(120))?;
    ensure!(
        significant < 10,
        "{significant} of 50 noise runs significant"
    );
    Ok(format!(
        "planted p = {}, noise significant in {significant}/50, {t}",
        a.p_value
    ))
}

// ---- 8 ----------------------------------------------------------------------

fn fixture_layer(out: &Path) -> Result<ConfigLayer, String> {
    let base = ConfigLayer::from_file(root().join("data/fixture/config.toml"))
        .map_err(|e| e.to_string())?;
    Ok(ConfigLayer {
        output_dir: Some(out.to_path_buf()),
        ..Default::default()
    }
    .over(base))
}

fn smoke_matrix() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut runs = 0;
    for method in Method::ALL {
        for agg in AggregationMethod::ALL {
            for (delta, remove_top) in [(Some(0.0), None), (None, Some(10))] {
                let dir = tmp.path().join(format!(
                    "{method}-{agg}-{}",
                    remove_top.map_or("d0", |_| "k10")
                ));
                let cfg = ConfigLayer {
                    method: Some(method.to_string()),
                    aggregation: Some(agg.to_string()),
                    delta,
                    remove_top,
                    ..Default::default()
                }
                .over(fixture_layer(&dir)?)
                .resolve()
                .map_err(|e| e.to_string())?;
                let run = pipeline::run_pipeline(&cfg)
                    .map_err(|e| format!("{}: {e}", cfg.setup_label()))?;
                for f in &run.files {
                    ensure!(
                        f.is_file(),
                        "{} missing after {}",
                        f.display(),
                        cfg.setup_label()
                    );
                }
                runs += 1;
            }
        }
    }
    let t = within(start, Duration::from_secs(10))?;

    let dir = tmp.path().join("SnPOS-MTS-d0");
    let got = artifacts::load_series(dir.join("series.csv")).map_err(|e| e.to_string())?;
    let want = artifacts::load_series(test_data("fixture_snpos_mts_series.csv"))
        .map_err(|e| e.to_string())?;
    for p in Party::ALL {
        ensure!(got[p].len() == 6, "{} instances for {p}", got[p].len());
        for (i, (g, w)) in got[p].iter().zip(&want[p]).enumerate() {
            let ok = match (g, w) {
                (Some(g), Some(w)) => (g - w).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
            ensure!(ok, "{p} instance {}: {g:?} vs expected {w:?}", i + 1);
        }
    }
    Ok(format!(
        "{runs} runs, SnPOS/MTS/delta=0 series matches expected values, {t}"
    ))
}

// ---- 9 ----------------------------------------------------------------------

fn keyword_fixture() -> Check {
    let tweets = load_tweets(root().join("data/fixture/tweets.tsv"), LoadMode::FailFast)
        .map_err(|e| e.to_string())?
        .tweets;
    let sets = PerParty::try_from_fn(|p| {
        let name = p.as_str().to_lowercase();
        KeywordSet::from_file(
            root().join(format!("data/fixture/keywords/{name}.txt")),
            Some(p),
        )
    })
    .map_err(|e| e.to_string())?;
    let got = pipeline::select(&tweets, &sets);
    let want = artifacts::load_selections(test_data("fixture_selections.tsv"))
        .map_err(|e| e.to_string())?;
    for p in Party::ALL {
        let extra: Vec<_> = got[p].difference(&want[p]).collect();
        let missing: Vec<_> = want[p].difference(&got[p]).collect();
        ensure!(
            extra.is_empty() && missing.is_empty(),
            "{p}: extra {extra:?}, missing {missing:?}"
        );
    }

    let ids_starting = |prefix: &str| -> HashSet<String> {
        tweets
            .iter()
            .filter(|t| t.text.starts_with(prefix))
            .map(|t| t.id.clone())
            .collect()
    };
    let upper = ids_starting("The Tories ");
    let lower = ids_starting("the tories ");
    let reversed = ids_starting("cameron met david ");
    ensure!(
        !upper.is_empty() && !lower.is_empty() && !reversed.is_empty(),
        "fixture lacks a case"
    );
    ensure!(upper.is_subset(&got.con), "`The Tories` not selected");
    ensure!(lower.is_disjoint(&got.con), "`the tories` selected");
    ensure!(
        reversed.is_subset(&got.con),
        "reversed `David Cameron` not selected"
    );
    Ok(format!(
        "selections match: CON {}, LAB {}, LIB {}",
        got.con.len(),
        got.lab.len(),
        got.lib.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("porter stemmer vocabulary", porter_vocabulary),
        ("ranking error and MRE oracles", metric_oracles),
        ("OLS closed form", ols_closed_form),
        ("triplet normalization", normalization_rules),
        ("delta order statistic", delta_order_statistic),
        ("synthetic LOOCV recovery", synthetic_recovery),
        ("permutation significance", permutation_significance),
        ("six-setup smoke matrix", smoke_matrix),
        ("keyword selection fixture", keyword_fixture),
    ];
    let quiet = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", n + 1);
            }
        }
    }
    panic::set_hook(quiet);
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
