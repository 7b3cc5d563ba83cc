//! Prediction tables as CSV: one gold column, every other column a system.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use podium_core::data::{Column, RawTable};
use podium_core::{Outcome, PredictionTable, TaskKind};

use crate::error::{LoadError, PodiumError, Result, Stage};

pub const DEFAULT_GOLD_COLUMN: &str = "y";

/// Read `path`. With `task` unset, the table is a regression when every
/// non-empty cell parses as a number and a classification otherwise.
pub fn load_table(path: &Path, gold_col: &str, task: Option<TaskKind>) -> Result<PredictionTable> {
    let file = File::open(path).map_err(|e| PodiumError::io(Stage::Load, path, e))?;
    read_table(file, gold_col, task).map_err(|e| match e {
        PodiumError::Load { source, .. } => PodiumError::Load { path: path.to_path_buf(), source },
        other => other,
    })
}

pub fn read_table(reader: impl Read, gold_col: &str, task: Option<TaskKind>) -> Result<PredictionTable> {
    let fail = |source: LoadError| PodiumError::Load { path: "<input>".into(), source };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| fail(e.into()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(fail(LoadError::Empty));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(fail(LoadError::DuplicateColumn(h.clone())));
        }
    }
    let gold_at = header
        .iter()
        .position(|h| h == gold_col)
        .ok_or_else(|| fail(LoadError::MissingGold(gold_col.to_string())))?;

    let mut columns: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| fail(e.into()))?;
        if record.len() != header.len() {
            let line = record.position().map_or(0, |p| p.line());
            return Err(fail(LoadError::Ragged { line, expected: header.len(), found: record.len() }));
        }
        for (col, cell) in columns.iter_mut().zip(record.iter()) {
            col.push(cell.trim().to_string());
        }
    }
    if columns[0].is_empty() {
        return Err(fail(LoadError::NoRows));
    }

    let task = match task {
        Some(t) => t,
        None => {
            let mut all_numeric = true;
            for (name, col) in header.iter().zip(&columns) {
                let number = col.iter().find(|c| !c.is_empty() && c.parse::<f64>().is_ok());
                let label = col.iter().find(|c| !c.is_empty() && c.parse::<f64>().is_err());
                match (number, label) {
                    (Some(n), Some(l)) => {
                        return Err(fail(LoadError::MixedColumn {
                            column: name.clone(),
                            number: n.clone(),
                            label: l.clone(),
                        }))
                    }
                    (_, Some(_)) => all_numeric = false,
                    _ => {}
                }
            }
            if all_numeric {
                TaskKind::Regression
            } else {
                TaskKind::Classification
            }
        }
    };

    let cell = |s: &String| -> Option<Outcome> {
        if s.is_empty() {
            None
        } else {
            // Unparseable cells in a regression table surface as NaN and
            // are reported by validation.
            Some(match task {
                TaskKind::Classification => Outcome::Label(s.clone()),
                TaskKind::Regression => Outcome::Value(s.parse().unwrap_or(f64::NAN)),
            })
        }
    };
    let mut raw = RawTable::new(task, Vec::new());
    raw.gold = columns[gold_at].iter().map(cell).collect();
    for (i, (name, col)) in header.iter().zip(&columns).enumerate() {
        if i != gold_at {
            raw.systems.push((name.clone(), col.iter().map(cell).collect()));
        }
    }
    PredictionTable::from_raw(raw)
        .map_err(|v| PodiumError::core(Stage::Load, podium_core::Error::InvalidTable(v)))
}

/// Write gold as `gold_col` followed by each system, in table order.
/// Numbers use the shortest representation that parses back exactly.
pub fn write_table(out: impl Write, table: &PredictionTable, gold_col: &str) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![gold_col.to_string()];
    header.extend(table.system_names().map(str::to_string));
    w.write_record(&header)?;
    let labels = table.label_set();
    let text = |c: &Column, i: usize| match c {
        Column::Labels(v) => labels[v[i] as usize].clone(),
        Column::Values(v) => v[i].to_string(),
    };
    for i in 0..table.n() {
        let mut row = vec![text(table.gold(), i)];
        row.extend(table.systems().iter().map(|s| text(&s.predictions, i)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str) -> Result<PredictionTable> {
        read_table(s.as_bytes(), "y", None)
    }

    fn load_error(s: &str) -> LoadError {
        match load(s) {
            Err(PodiumError::Load { source, .. }) => source,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_columns_four_rows() {
        let t = load("y,A,B\na,a,b\nb,b,b\na,a,a\nc,c,a\n").unwrap();
        assert_eq!((t.n(), t.systems().len()), (4, 2));
        assert_eq!(t.task(), TaskKind::Classification);
        assert_eq!(t.system_names().collect::<Vec<_>>(), ["A", "B"]);
    }

    #[test]
    fn gold_need_not_be_first() {
        let t = load("A,y\n1,1.5\n2,2\n").unwrap();
        assert_eq!(t.task(), TaskKind::Regression);
        assert_eq!(t.gold(), &Column::Values(vec![1.5, 2.0]));
    }

    #[test]
    fn numeric_labels_can_be_forced_categorical() {
        let t = read_table("y,A\n1,2\n2,2\n".as_bytes(), "y", Some(TaskKind::Classification)).unwrap();
        assert_eq!(t.label_set(), ["1", "2"]);
    }

    #[test]
    fn parmex_layout_keeps_system_names() {
        let t = load("y,baseline,temu_bsc,UC3M-DEEPNLP,FRSCIC,Abu,Thang CIC,Tü Par\n1,1,1,0,1,1,0,1\n0,0,1,0,0,0,0,0\n").unwrap();
        assert_eq!(
            t.system_names().collect::<Vec<_>>(),
            ["baseline", "temu_bsc", "UC3M-DEEPNLP", "FRSCIC", "Abu", "Thang CIC", "Tü Par"]
        );
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(load_error(""), LoadError::Empty));
        assert!(matches!(load_error("y,A\n"), LoadError::NoRows));
        assert!(matches!(load_error("gold,A\na,a\n"), LoadError::MissingGold(c) if c == "y"));
        assert!(matches!(load_error("y,A,A\na,a,a\n"), LoadError::DuplicateColumn(c) if c == "A"));
        assert!(matches!(load_error("y,A\na,a\nb\n"), LoadError::Ragged { line: 3, expected: 2, found: 1 }));
        assert!(matches!(load_error("y,A\n1,1\n2,x\n"), LoadError::MixedColumn { column, .. } if column == "A"));
    }

    #[test]
    fn missing_cells_are_validation_errors() {
        let err = load("y,A\na,a\nb,\n").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("load"));
    }

    #[test]
    fn written_tables_read_back() {
        let t = load("y,A,B\nx,x,\"a,b\"\n\"a,b\",x,x\n").unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &t, "y").unwrap();
        assert_eq!(load(std::str::from_utf8(&buf).unwrap()).unwrap(), t);

        let r = load("y,A\n0.1,0.30000000000000004\n2,1e-9\n").unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &r, "y").unwrap();
        assert_eq!(load(std::str::from_utf8(&buf).unwrap()).unwrap(), r);
    }
}
