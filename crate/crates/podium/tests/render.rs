use podium::plot::forest_plot;
use podium::tables::{build_tables, fmt4, Table};
use podium_core::synth::{generate, SynthConfig};
use podium_core::{Analysis, AnalysisOptions, BootstrapPlan, Correction, ScoreSpec};
use proptest::prelude::*;

fn analysis(n: usize, noise: &[f64], seed: u64) -> Analysis {
    let names = ["s0", "s1", "s2", "s3", "s4"];
    let systems: Vec<(&str, f64)> = names.iter().copied().zip(noise.iter().copied()).collect();
    let cfg = SynthConfig::classification(n, &["a", "b", "c"], &[1.0, 1.0, 2.0], &systems, seed);
    let t = generate(&cfg).unwrap();
    Analysis::run(&t, &ScoreSpec::macro_f1(&["a", "c"]), &BootstrapPlan::new(300, seed), &AnalysisOptions::default()).unwrap()
}

fn close(cell: &str, x: f64) -> bool {
    cell.parse::<f64>().is_ok_and(|v| (v - x).abs() <= 5e-5 + 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tables_round_trip_to_four_decimals(
        n in 30usize..200,
        noise in prop::collection::vec(0.05f64..0.7, 2..=5),
        seed in 0u64..1_000,
    ) {
        let a = analysis(n, &noise, seed);
        let tables = build_tables(&a, &[Correction::Bonferroni, Correction::Holm, Correction::Bh]);
        let md = Table::parse_markdown(&tables.iter().map(|t| t.to_markdown()).collect::<Vec<_>>().join("\n"));
        prop_assert_eq!(md.len(), tables.len());
        for (t, (md_header, md_rows)) in tables.iter().zip(&md) {
            let (header, rows) = Table::parse_csv(&t.to_csv()).unwrap();
            prop_assert_eq!(&header, &t.header);
            prop_assert_eq!(&rows, &t.rows);
            prop_assert_eq!(md_rows.len(), t.rows.len());
            prop_assert_eq!(md_header, &t.header);
            for (a, b) in md_rows.iter().zip(&t.rows) {
                // Markdown drops trailing empty cells only.
                prop_assert_eq!(&a[..], &b[..a.len()]);
            }
        }

        let perf = &tables[0];
        for (row, p) in perf.rows.iter().zip(&a.performance) {
            prop_assert_eq!(&row[0], &p.system);
            for (cell, x) in row[1..].iter().zip([p.observed, p.lci, p.boot_mean, p.uci]) {
                prop_assert!(close(cell, x), "{} vs {}", cell, x);
            }
        }
        let pv = &tables[3];
        for (row, d) in pv.rows.iter().zip(&a.pairs) {
            prop_assert!(close(&row[2], d.observed_delta));
            prop_assert!(close(&row[3], d.p_value));
            prop_assert_eq!(&row[4], &fmt4(d.adjusted[&Correction::Bonferroni]));
            prop_assert_eq!(&row[5], &row[7]);
            prop_assert!(close(&row[6], d.adjusted[&Correction::Holm]));
        }
    }
}

#[test]
fn forest_rows_follow_the_ranking() {
    let a = analysis(150, &[0.5, 0.1, 0.3, 0.2], 3);
    let svg = forest_plot(&a.performance).svg;
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let labels: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("row"))
        .map(|n| n.attribute("data-label").unwrap())
        .collect();
    assert_eq!(labels, a.report.ranking.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(labels, ["s1", "s3", "s2", "s0"]);
    let ys: Vec<f64> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("mean"))
        .map(|n| n.attribute("cy").unwrap().parse().unwrap())
        .collect();
    assert!(ys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn report_table_lists_every_summary_field() {
    let a = analysis(200, &[0.2, 0.25, 0.3, 0.4, 0.45], 1);
    let tables = build_tables(&a, &[Correction::Bonferroni, Correction::Holm, Correction::Bh]);
    let fields: Vec<&str> = tables[4].rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(fields, ["n", "m", "ties_w_win", "poss_compars", "none/bonf", "holm/bh", "win_med", "cv", "ppi"]);
    assert_eq!(tables[4].rows[3][1], "10");
    assert_eq!(tables[4].rows[2][1].split('/').count(), 4);
}
