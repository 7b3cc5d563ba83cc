//! Report tables as CSV and Markdown, four decimals throughout.

use podium_core::analysis::Analysis;
use podium_core::corrections::round_half_even;
use podium_core::Correction;

/// Half-even to four decimals; never prints `-0.0000`.
pub fn fmt4(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_half_even(x, 4);
    format!("{:.4}", if r == 0.0 { 0.0 } else { r })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem, e.g. `performance`.
    pub name: String,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // Writing to a Vec cannot fail.
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 cells")
    }

    pub fn to_markdown(&self) -> String {
        let cell = |s: &str| s.replace('\\', "\\\\").replace('|', "\\|");
        let line = |cells: &[String]| format!("| {} |\n", cells.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | "));
        let mut out = format!("## {}\n\n", self.title);
        out += &line(&self.header);
        out += &format!("|{}\n", "---|".repeat(self.header.len()));
        for row in &self.rows {
            out += &line(row);
        }
        out
    }

    /// Header and rows of a CSV table.
    pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), csv::Error> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
        let mut rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        let header = if rows.is_empty() { Vec::new() } else { rows.remove(0) };
        Ok((header, rows))
    }

    /// Every pipe table in a Markdown document, as (header, rows).
    pub fn parse_markdown(text: &str) -> Vec<(Vec<String>, Vec<Vec<String>>)> {
        let mut tables = Vec::new();
        let mut current: Option<(Vec<String>, Vec<Vec<String>>)> = None;
        for line in text.lines() {
            let line = line.trim();
            if !line.starts_with('|') {
                tables.extend(current.take());
                continue;
            }
            let cells = split_pipe_row(line);
            match &mut current {
                None => current = Some((cells, Vec::new())),
                Some((_, rows)) if cells.iter().all(|c| !c.is_empty() && c.chars().all(|ch| ch == '-' || ch == ':')) && rows.is_empty() => {}
                Some((_, rows)) => rows.push(cells),
            }
        }
        tables.extend(current);
        tables
    }
}

fn split_pipe_row(line: &str) -> Vec<String> {
    let inner = line.trim().trim_start_matches('|');
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => cur.extend(chars.next()),
            '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        cells.push(cur.trim().to_string());
    }
    cells
}

/// Performance, differences from the winner, difference matrix, p-values
/// with corrections, and the competition summary.
pub fn build_tables(a: &Analysis, corrections: &[Correction]) -> Vec<Table> {
    vec![performance(a), differences(a), matrix(a), p_values(a, corrections), summary(a)]
}

fn s(x: &str) -> String {
    x.to_string()
}

fn performance(a: &Analysis) -> Table {
    Table {
        name: s("performance"),
        title: s("Bootstrap confidence intervals"),
        header: ["system", "observed", "lci", "mean", "uci"].map(s).to_vec(),
        rows: a
            .performance
            .iter()
            .map(|p| vec![p.system.clone(), fmt4(p.observed), fmt4(p.lci), fmt4(p.boot_mean), fmt4(p.uci)])
            .collect(),
    }
}

fn differences(a: &Analysis) -> Table {
    Table {
        name: s("differences"),
        title: format!("Differences from the best ({})", a.report.winner),
        header: ["system", "observed", "lci", "mean", "uci", "contains_zero"].map(s).to_vec(),
        rows: a
            .vs_winner()
            .map(|d| {
                vec![
                    d.competitor.clone(),
                    fmt4(d.observed_delta),
                    fmt4(d.lci),
                    fmt4(d.mean),
                    fmt4(d.uci),
                    d.contains_zero.to_string(),
                ]
            })
            .collect(),
    }
}

fn matrix(a: &Analysis) -> Table {
    let m = &a.matrix;
    let cols = m.systems.len().saturating_sub(1);
    let mut header = vec![String::new()];
    header.extend(m.systems.iter().take(cols).cloned());
    let rows = (1..m.systems.len())
        .map(|r| {
            let mut row = vec![m.systems[r].clone()];
            row.extend((0..cols).map(|c| match m.get(r, c) {
                Some(e) if e.stars.as_str().is_empty() => fmt4(e.delta),
                Some(e) => format!("{} {}", fmt4(e.delta), e.stars.as_str()),
                None => String::new(),
            }));
            row
        })
        .collect();
    Table { name: s("matrix"), title: s("Differences (column) - (row) and significance"), header, rows }
}

/// Correction columns in report order; BH is also printed as FDR.
fn correction_columns(corrections: &[Correction]) -> Vec<(&'static str, Correction)> {
    let mut cols = Vec::new();
    for (label, c) in [("bonferroni", Correction::Bonferroni), ("fdr", Correction::Bh), ("holm", Correction::Holm), ("bh", Correction::Bh)] {
        if corrections.contains(&c) {
            cols.push((label, c));
        }
    }
    cols
}

fn p_values(a: &Analysis, corrections: &[Correction]) -> Table {
    let cols = correction_columns(corrections);
    let mut header = ["reference", "competitor", "difference", "p_value"].map(s).to_vec();
    header.extend(cols.iter().map(|(l, _)| s(l)));
    let rows = a
        .pairs
        .iter()
        .map(|p| {
            let mut row = vec![p.reference.clone(), p.competitor.clone(), fmt4(p.observed_delta), fmt4(p.p_value)];
            row.extend(cols.iter().map(|(_, c)| p.adjusted.get(c).map_or_else(String::new, |&v| fmt4(v))));
            row
        })
        .collect();
    Table { name: s("pvalues"), title: s("Raw and adjusted p-values"), header, rows }
}

fn summary(a: &Analysis) -> Table {
    let r = &a.report;
    let count = |map: &std::collections::BTreeMap<Correction, usize>, c: Correction| {
        map.get(&c).map_or_else(|| s("-"), usize::to_string)
    };
    let ties = |map, cs: &[Correction]| cs.iter().map(|&c| count(map, c)).collect::<Vec<_>>().join("/");
    let all = Correction::ALL;
    let opt = |x: Option<f64>| x.map_or_else(|| s("-"), fmt4);
    let rows = vec![
        vec![s("n"), r.n.to_string()],
        vec![s("m"), r.m.to_string()],
        vec![s("ties_w_win"), ties(&r.ties_with_winner, &all)],
        vec![s("poss_compars"), r.possible_comparisons.to_string()],
        vec![s("none/bonf"), ties(&r.ties_all_pairs, &all[..2])],
        vec![s("holm/bh"), ties(&r.ties_all_pairs, &all[2..])],
        vec![s("win_med"), fmt4(r.win_med_gap)],
        vec![s("cv"), opt(r.cv)],
        vec![s("ppi"), opt(r.ppi)],
    ];
    Table {
        name: s("report"),
        title: format!("Competition summary ({}, alpha {})", r.metric, r.alpha),
        header: vec![s("field"), s("value")],
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_decimals_half_even() {
        assert_eq!(fmt4(0.00585), "0.0058");
        assert_eq!(fmt4(0.2030), "0.2030");
        assert_eq!(fmt4(-0.00001), "0.0000");
        assert_eq!(fmt4(-0.0371), "-0.0371");
        assert_eq!(fmt4(1.0), "1.0000");
        assert_eq!(fmt4(f64::NAN), "NaN");
    }

    #[test]
    fn csv_and_markdown_round_trip_cells() {
        let t = Table {
            name: s("x"),
            title: s("X"),
            header: vec![s(""), s("a|b"), s("c,d")],
            rows: vec![vec![s("Tü Par"), s("0.0710 †"), s("")], vec![s("q\"r"), s("back\\slash"), s("1.0000")]],
        };
        let (h, rows) = Table::parse_csv(&t.to_csv()).unwrap();
        assert_eq!((h, rows), (t.header.clone(), t.rows.clone()));
        let md = Table::parse_markdown(&t.to_markdown());
        assert_eq!(md.len(), 1);
        assert_eq!(md[0].0[1..], t.header[1..]);
        assert_eq!(md[0].1[1], t.rows[1]);
        assert_eq!(md[0].1[0][..2], t.rows[0][..2]);
    }

    #[test]
    fn fdr_column_only_with_bh() {
        let cols: Vec<_> = correction_columns(&[Correction::Holm]).into_iter().map(|c| c.0).collect();
        assert_eq!(cols, ["holm"]);
        let cols: Vec<_> = correction_columns(&[Correction::Bh, Correction::Bonferroni]).into_iter().map(|c| c.0).collect();
        assert_eq!(cols, ["bonferroni", "fdr", "bh"]);
    }
}
