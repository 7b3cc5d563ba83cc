//! Acceptance checks. Prints one line per criterion and exits non-zero when
//! any of them fails.

// Negated comparisons are deliberate: NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use podium::csvio::write_table;
use podium::pipeline::run_pipeline;
use podium::RunConfig;
use podium_core::corrections::{adjust, build_families, round_half_even};
use podium_core::inference::{p_value, paired_difference};
use podium_core::metrics::score;
use podium_core::report::{cv, ppi, tie_counts, win_med_gap, PairPValues};
use podium_core::rng::StreamRng;
use podium_core::synth::{calibrate, matched_table, MatchedConfig, SynthConfig};
use podium_core::{BootstrapPlan, Correction, FamilyPolicy, Outcome, PredictionTable, ScoreSpec};

type Verdict = Result<String, String>;
type Check<'a> = (u32, &'static str, Box<dyn Fn() -> Verdict + 'a>);
type Adjusted = BTreeMap<(usize, usize), BTreeMap<Correction, f64>>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// Ranks: WordUp.01, WordUp.02, MultiAztertest.01, SQYQP.01, MultiAztertest.02.
// (reference, competitor, raw, bonferroni, fdr, holm, bh)
const BASQUE_PVALUES: [(usize, usize, f64, f64, f64, f64, f64); 10] = [
    (0, 1, 0.2030, 0.8120, 0.2030, 0.2030, 0.2030),
    (0, 2, 0.0551, 0.2204, 0.0735, 0.1102, 0.0735),
    (0, 3, 0.0012, 0.0048, 0.0024, 0.0036, 0.0024),
    (0, 4, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000),
    (1, 2, 0.1490, 0.4470, 0.1490, 0.1490, 0.1490),
    (1, 3, 0.0039, 0.0117, 0.0058, 0.0078, 0.0058),
    (1, 4, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000),
    (2, 3, 0.0330, 0.0660, 0.0330, 0.0330, 0.0330),
    (2, 4, 0.0003, 0.0006, 0.0006, 0.0006, 0.0006),
    (3, 4, 0.0427, 0.0427, 0.0427, 0.0427, 0.0427),
];

const BASQUE: [f64; 5] = [0.5734, 0.5465, 0.5024, 0.4256, 0.3428];
const SPANISH: [f64; 5] = [0.8092, 0.7906, 0.7410, 0.6738, 0.6404];

fn raw_p(i: usize, j: usize) -> f64 {
    BASQUE_PVALUES.iter().find(|r| (r.0, r.1) == (i, j)).map(|r| r.2).unwrap()
}

fn per_reference() -> Result<Adjusted, String> {
    let mut out = Adjusted::new();
    for fam in build_families(5, raw_p, FamilyPolicy::PerReference).map_err(|e| e.to_string())? {
        for c in Correction::ALL {
            for (k, v) in fam.adjust(c).map_err(|e| e.to_string())? {
                out.entry(k).or_default().insert(c, v);
            }
        }
    }
    Ok(out)
}

fn c1_corrections() -> Verdict {
    let adj = per_reference()?;
    for &(i, j, _, bonf, fdr, holm, bh) in &BASQUE_PVALUES {
        let got = &adj[&(i, j)];
        let r = |c| round_half_even(got[&c], 4);
        ensure!(r(Correction::Bonferroni) == bonf, "bonferroni ({i},{j}) = {} != {bonf}", r(Correction::Bonferroni));
        ensure!(r(Correction::Holm) == holm, "holm ({i},{j}) = {} != {holm}", r(Correction::Holm));
        ensure!(r(Correction::Bh) == bh, "bh ({i},{j}) = {} != {bh}", r(Correction::Bh));
        // The report prints BH under both headings.
        ensure!(r(Correction::Bh) == fdr, "fdr ({i},{j}) = {} != {fdr}", r(Correction::Bh));
    }
    Ok("10/10 rows match on bonferroni, fdr, holm, bh".into())
}

fn c2_ties() -> Verdict {
    let adj = per_reference()?;
    let pairs: Vec<PairPValues> = adj.into_iter().map(|(pair, adjusted)| PairPValues { pair, adjusted }).collect();
    let t = tie_counts(&pairs, 0.05);
    let get = |m: &BTreeMap<Correction, usize>| Correction::ALL.map(|c| m.get(&c).copied().unwrap_or(0));
    let (w, a) = (get(&t.with_winner), get(&t.all_pairs));
    ensure!(w == [2, 2, 2, 2], "ties with winner {w:?}");
    ensure!(a == [3, 4, 3, 3], "ties over all pairs {a:?}");
    Ok(format!("with winner {w:?}, all pairs {a:?}"))
}

fn oracle_cv(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    100.0 * var.sqrt() / mean
}

fn c3_competition_metrics() -> Verdict {
    let spec = ScoreSpec::macro_f1(&["FAVOR", "AGAINST"]);
    let mut detail = Vec::new();
    for (name, scores, cv_want, ppi_want, gap_want) in
        [("basque", BASQUE, 19.680, 42.660, 0.071), ("spanish", SPANISH, 9.970, 19.084, 0.068)]
    {
        let c = cv(&scores).map_err(|e| e.to_string())?;
        ensure!((c - cv_want).abs() <= 0.01, "{name} cv {c}");
        ensure!((c - oracle_cv(&scores)).abs() < 1e-9, "{name} cv {c} vs oracle {}", oracle_cv(&scores));
        let p = ppi(scores[0], &spec).ok_or("no ppi for a capped metric")?;
        ensure!((p - ppi_want).abs() <= 0.005, "{name} ppi {p}");
        let g = round_half_even(win_med_gap(&scores).map_err(|e| e.to_string())?, 3);
        ensure!(g == gap_want, "{name} |win-med| {g}");
        detail.push(format!("{name}: cv {c:.3} ppi {p:.3} gap {g:.3}"));
    }
    ensure!(ppi(0.2, &ScoreSpec::mae()).is_none(), "ppi reported for mae");
    let compars = build_families(5, |_, _| 0.5, FamilyPolicy::Global).map_err(|e| e.to_string())?[0].len();
    ensure!(compars == 10, "possible comparisons {compars}");
    detail.push(format!("comparisons {compars}"));
    Ok(detail.join("; "))
}

/// Columns of a table as strings, via its CSV form.
fn string_columns(t: &PredictionTable) -> BTreeMap<String, Vec<String>> {
    let mut buf = Vec::new();
    write_table(&mut buf, t, "y").unwrap();
    let mut r = csv::Reader::from_reader(buf.as_slice());
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    let mut cols: BTreeMap<String, Vec<String>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for rec in r.records() {
        for (h, v) in header.iter().zip(rec.unwrap().iter()) {
            cols.get_mut(h).unwrap().push(v.to_string());
        }
    }
    cols
}

fn oracle_macro_f1(gold: &[String], pred: &[String], classes: &[&str]) -> f64 {
    let f1 = |c: &str| {
        let tp = gold.iter().zip(pred).filter(|(g, p)| *g == c && *p == c).count() as f64;
        let fp = gold.iter().zip(pred).filter(|(g, p)| *g != c && *p == c).count() as f64;
        let fn_ = gold.iter().zip(pred).filter(|(g, p)| *g == c && *p != c).count() as f64;
        2.0 * tp / (2.0 * tp + fp + fn_)
    };
    classes.iter().map(|c| f1(c)).sum::<f64>() / classes.len() as f64
}

fn c4_observed_deltas() -> Verdict {
    let cfg = MatchedConfig::vaxxstance_basque(0);
    let spec = cfg.spec();
    let t = matched_table(&cfg, &spec).map_err(|e| e.to_string())?;
    ensure!(t.n() == 312, "n = {}", t.n());
    let cols = string_columns(&t);
    let f = |s: &str| oracle_macro_f1(&cols["y"], &cols[s], &["FAVOR", "AGAINST"]);
    for (name, &target) in ["WordUp.01", "WordUp.02", "MultiAztertest.01", "SQYQP.01", "MultiAztertest.02"].iter().zip(&BASQUE) {
        ensure!(round_half_even(f(name), 4) == target, "{name} scores {} by hand", f(name));
    }
    let plan = BootstrapPlan::new(10, 0);
    let mut detail = Vec::new();
    for (other, want) in [("SQYQP.01", 0.1478), ("WordUp.02", 0.0269)] {
        let pd = paired_difference(&t, &spec, &plan, "WordUp.01", other).map_err(|e| e.to_string())?;
        ensure!(round_half_even(pd.observed, 4) == want, "delta(WordUp.01, {other}) = {}", pd.observed);
        ensure!((pd.observed - (f("WordUp.01") - f(other))).abs() < 1e-12, "delta disagrees with hand scores");
        detail.push(format!("delta(WordUp.01, {other}) = {:.4}", pd.observed));
    }
    Ok(detail.join("; "))
}

fn c5_bootstrap_properties() -> Verdict {
    // (a) and (b): two systems of equal population accuracy 0.7.
    let cfg = SynthConfig::classification(500, &["a", "b", "c"], &[2.0, 1.0, 1.0], &[("s", 0.3), ("t", 0.3)], 2024);
    let plan = BootstrapPlan::new(2_000, 7);
    let summary = calibrate(&cfg, &ScoreSpec::accuracy(), &plan, 500).map_err(|e| e.to_string())?;
    let cover = 100.0 * summary.coverage;
    let ks = summary.ks_distance;
    let mut ok = (92.0..=98.0).contains(&cover);
    let mut detail = format!("(a) coverage {cover:.1}%; (b) KS {ks:.4}");
    ok &= ks < 0.08;

    // (c): clone tables at matched n, one per seed.
    let seeds = 30u64;
    let mut hits = 0;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..seeds {
        let m = MatchedConfig::vaxxstance_basque(seed);
        let spec = m.spec();
        let t = matched_table(&m, &spec).map_err(|e| e.to_string())?;
        let plan = BootstrapPlan::new(10_000, seed);
        let p = |other| paired_difference(&t, &spec, &plan, "WordUp.01", other).map(|pd| p_value(&pd));
        let near = p("WordUp.02").map_err(|e| e.to_string())?;
        let far = p("SQYQP.01").map_err(|e| e.to_string())?;
        let (dn, df) = ((near - 0.2064).abs(), (far - 0.0014).abs());
        worst = (worst.0.max(dn), worst.1.max(df));
        hits += usize::from(dn <= 0.02 && df <= 0.02);
    }
    let share = hits as f64 / seeds as f64;
    ok &= share >= 0.9;
    detail += &format!(
        "; (c) {hits}/{seeds} seeds in band, worst |p-0.2064| {:.4}, |p-0.0014| {:.4}",
        worst.0, worst.1
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The Basque clone with a gold copy appended, written as CSV.
fn clone_csv(dir: &Path) -> PathBuf {
    let cfg = MatchedConfig::vaxxstance_basque(5);
    let t = matched_table(&cfg, &cfg.spec()).unwrap();
    let cols = string_columns(&t);
    let gold: Vec<&str> = cols["y"].iter().map(String::as_str).collect();
    let names: Vec<String> = t.system_names().map(str::to_string).collect();
    let preds: Vec<Vec<&str>> = names.iter().map(|n| cols[n].iter().map(String::as_str).collect()).collect();
    let mut systems: Vec<(&str, &[&str])> = names.iter().map(String::as_str).zip(preds.iter().map(Vec::as_slice)).collect();
    systems.push(("Gold_Standard", &gold));
    let full = PredictionTable::classification(&gold, &systems).unwrap();
    let path = dir.join("basque.csv");
    let mut buf = Vec::new();
    write_table(&mut buf, &full, "y").unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn run_config(input: &Path, out: &Path, workers: usize) -> RunConfig {
    RunConfig {
        input: input.to_path_buf(),
        metric: Some("macro-f1:FAVOR,AGAINST".into()),
        seed: 42,
        out_dir: out.to_path_buf(),
        workers: Some(workers),
        ..RunConfig::default()
    }
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c6_determinism(work: &Path) -> Verdict {
    let input = clone_csv(work);
    let mut outputs = Vec::new();
    for (label, workers) in [("w1", 1), ("w4", 4), ("w8", 8), ("again-a", 4), ("again-b", 4)] {
        let out = work.join(label);
        run_pipeline(&run_config(&input, &out, workers)).map_err(|e| e.to_string())?;
        outputs.push((label, read_dir(&out)));
    }
    let (_, first) = &outputs[0];
    let json = first.keys().filter(|k| k.ends_with(".json")).count();
    ensure!(json >= 4, "only {json} json files");
    for (label, files) in &outputs[1..] {
        ensure!(files.keys().eq(first.keys()), "{label}: different file set");
        for (name, bytes) in files {
            ensure!(bytes == &first[name], "{label}: {name} differs");
        }
    }
    Ok(format!("{} files ({json} json) identical over workers 1/4/8 and three runs", first.len()))
}

fn c7_metrics() -> Verdict {
    let lab = |xs: &[&str]| xs.iter().map(|&x| Outcome::label(x)).collect::<Vec<_>>();
    let gold = ["F", "F", "F", "N", "A", "A"];
    let pred = ["F", "F", "A", "F", "A", "N"];
    let got = score(&lab(&gold), &lab(&pred), &ScoreSpec::macro_f1(&["F", "A"])).map_err(|e| e.to_string())?;
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let hand = oracle_macro_f1(&s(&gold), &s(&pred), &["F", "A"]);
    ensure!((got - hand).abs() < 1e-12, "macro-f1 {got} vs hand {hand}");
    ensure!(podium::tables::fmt4(got) == "0.5833", "macro-f1 prints {}", podium::tables::fmt4(got));

    let capped = [
        ScoreSpec::accuracy(),
        ScoreSpec::f1("F"),
        ScoreSpec::f1("N"),
        ScoreSpec::macro_f1(&["F", "A"]),
        ScoreSpec::macro_f1(&["F", "N", "A"]),
    ];
    for spec in &capped {
        ensure!(spec.capped_at_one, "{} not capped", spec.metric);
        let p = score(&lab(&gold), &lab(&gold), spec).map_err(|e| e.to_string())?;
        ensure!(podium::tables::fmt4(p) == "1.0000", "{} perfect predictor {p}", spec.metric);
    }
    Ok(format!("subset macro-f1 {}; perfect predictor 1.0000 under {} capped metrics", podium::tables::fmt4(got), capped.len()))
}

fn oracle_holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    for (k, &i) in order.iter().enumerate() {
        out[i] = (0..=k).map(|r| ((m - r) as f64 * p[order[r]]).min(1.0)).fold(0.0, f64::max);
    }
    out
}

fn oracle_bh(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    for (k, &i) in order.iter().enumerate() {
        out[i] = (k..m).map(|r| (m as f64 * p[order[r]] / (r + 1) as f64).min(1.0)).fold(1.0, f64::min);
    }
    out
}

fn c8_correction_properties() -> Verdict {
    const TOL: f64 = 1e-12;
    let mut total = 0;
    for f in 0..1000u64 {
        let mut rng = StreamRng::new(8, f);
        let size = 1 + rng.below(50) as usize;
        let p: Vec<f64> = (0..size)
            .map(|_| match rng.below(5) {
                0 => 0.0,
                1 => 1.0,
                2 => (rng.below(20) as f64) / 1000.0,
                _ => rng.unit(),
            })
            .collect();
        let run = |c| adjust(&p, c).map_err(|e| e.to_string());
        let (bonf, holm, bh) = (run(Correction::Bonferroni)?, run(Correction::Holm)?, run(Correction::Bh)?);
        for adj in [&bonf, &holm, &bh] {
            for i in 0..size {
                ensure!(adj[i] + TOL >= p[i], "family {f}: adjusted below raw");
                ensure!(adj[i] <= 1.0 + TOL, "family {f}: adjusted above 1");
                for j in 0..size {
                    ensure!(!(p[i] < p[j]) || adj[i] <= adj[j] + TOL, "family {f}: not monotone");
                }
            }
        }
        for i in 0..size {
            ensure!(bonf[i] + TOL >= holm[i] && holm[i] + TOL >= bh[i], "family {f}: order broken at {i}");
        }
        let (oh, ob) = (oracle_holm(&p), oracle_bh(&p));
        for i in 0..size {
            ensure!((holm[i] - oh[i]).abs() <= TOL, "family {f}: holm {} vs {}", holm[i], oh[i]);
            ensure!((bh[i] - ob[i]).abs() <= TOL, "family {f}: bh {} vs {}", bh[i], ob[i]);
            ensure!((bonf[i] - (size as f64 * p[i]).min(1.0)).abs() <= TOL, "family {f}: bonferroni");
        }
        total += size;
    }
    Ok(format!("1000 families, {total} p-values"))
}

fn attr(n: roxmltree::Node<'_, '_>, name: &str) -> f64 {
    n.attribute(name).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn c9_plots(work: &Path) -> Verdict {
    let dir = work.join("w1");
    let files = read_dir(&dir);
    let text = String::from_utf8(files["differences.svg"].clone()).map_err(|e| e.to_string())?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| e.to_string())?;
    let (mut red, mut green) = (0, 0);
    for row in doc.descendants().filter(|n| n.attribute("class") == Some("row")) {
        let (lo, hi) = (attr(row, "data-lci"), attr(row, "data-uci"));
        let straddles = lo <= 0.0 && 0.0 <= hi;
        let line = row.children().find(|n| n.attribute("class") == Some("interval")).ok_or("row without interval")?;
        let stroke = line.attribute("stroke").unwrap_or("");
        let want = if straddles { "#d62728" } else { "#2ca02c" };
        ensure!(stroke == want, "{}: [{lo}, {hi}] drawn {stroke}", row.attribute("data-label").unwrap_or("?"));
        if straddles {
            red += 1;
        } else {
            green += 1;
        }
    }
    ensure!(red + green == 4, "{} difference rows", red + green);

    let analysis: serde_json::Value = serde_json::from_slice(&files["analysis.json"]).map_err(|e| e.to_string())?;
    let b = analysis["report"]["replicates"].as_f64().ok_or("no replicate count")?;
    let winner_p: Vec<f64> = analysis["differences"]
        .as_array()
        .ok_or("no differences")?
        .iter()
        .filter(|d| d["ranks"][0] == 0)
        .map(|d| d["p_value"].as_f64().unwrap())
        .collect();
    ensure!(winner_p.len() == 4, "{} winner pairs", winner_p.len());
    let mut worst = 0.0f64;
    for (k, &p) in winner_p.iter().enumerate() {
        let name = format!("delta_hist_{:02}.svg", k + 1);
        let svg = String::from_utf8(files.get(&name).ok_or(format!("missing {name}"))?.clone()).map_err(|e| e.to_string())?;
        let doc = roxmltree::Document::parse(&svg).map_err(|e| e.to_string())?;
        let two_delta = doc
            .descendants()
            .find(|n| n.attribute("data-ref") == Some("two-delta"))
            .map(|n| attr(n, "data-value"))
            .ok_or("no 2delta line")?;
        let right: f64 = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("bar") && attr(*n, "data-lo") >= two_delta)
            .map(|n| attr(n, "data-count"))
            .sum();
        let gap = (right / b - p).abs();
        ensure!(gap <= 1.0 / b, "{name}: mass {} vs p {p}", right / b);
        worst = worst.max(gap);
    }
    Ok(format!("{red} red / {green} green rows match their intervals; histogram mass within {worst:.1e} of p"))
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().expect("temp dir");
    let w = work.path();
    let checks: Vec<Check> = vec![
        (1, "correction oracle", Box::new(c1_corrections)),
        (2, "tie counts", Box::new(c2_ties)),
        (3, "competition metrics", Box::new(c3_competition_metrics)),
        (4, "observed deltas", Box::new(c4_observed_deltas)),
        (5, "bootstrap properties", Box::new(c5_bootstrap_properties)),
        (6, "determinism", Box::new(|| c6_determinism(w))),
        (7, "metric correctness", Box::new(c7_metrics)),
        (8, "correction properties", Box::new(c8_correction_properties)),
        (9, "plot contracts", Box::new(|| c9_plots(w))),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(&check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} {name}: PASS ({detail}) [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL ({why}) [{secs:.2}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
