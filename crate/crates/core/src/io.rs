//! Reading and writing numeric tables as CSV or JSON.
//!
//! CSV cells are plain decimals, one population per line. A first column
//! that does not parse as a number is taken as row labels, and a first line
//! with no numeric cells is skipped as a header. Lines starting with `#`
//! are comments.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Model, RankData};
use crate::error::{Error, Result};
use crate::statistics::{ContingencyTable, SampleMatrix, SampleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    /// `.json` selects JSON; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => TableFormat::Json,
            _ => TableFormat::Csv,
        }
    }
}

/// Rectangular numeric rows with optional labels, as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRows {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTable {
    Bare(Vec<Vec<f64>>),
    Labeled(LabeledRows),
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn check_rectangular(rows: &[Vec<f64>], first_column: usize) -> Result<()> {
    let width = match rows.first() {
        Some(r) => r.len(),
        None => return Err(Error::NoData),
    };
    if width == 0 {
        return Err(Error::Parse {
            row: 1,
            column: first_column,
            message: "row has no numeric cells".into(),
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Parse {
                row: i + 1,
                column: first_column + r.len().min(width),
                message: format!("expected {width} numeric cells, found {}", r.len()),
            });
        }
    }
    Ok(())
}

/// Parses CSV text. Row and column numbers in errors are 1-based positions
/// in the file.
pub fn parse_csv(text: &str) -> Result<LabeledRows> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::NoData);
    }
    if records[0].1.iter().all(|c| parse_cell(c).is_none()) {
        records.remove(0);
        if records.is_empty() {
            return Err(Error::NoData);
        }
    }
    let labelled = parse_cell(&records[0].1[0]).is_none();
    let skip = usize::from(labelled);

    let width = records[0].1.len();
    let mut labels = Vec::new();
    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(Error::Parse {
                row: *line,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        if labelled {
            labels.push(rec[0].to_string());
        }
        let row = rec
            .iter()
            .enumerate()
            .skip(skip)
            .map(|(c, cell)| {
                parse_cell(cell).ok_or_else(|| Error::Parse {
                    row: *line,
                    column: c + 1,
                    message: format!("not a number: {cell:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    check_rectangular(&rows, skip + 1)?;
    Ok(LabeledRows {
        labels: labelled.then_some(labels),
        rows,
    })
}

/// Parses either a bare array of rows or `{"labels": [...], "rows": [[...]]}`.
pub fn parse_json(text: &str) -> Result<LabeledRows> {
    if text.trim().is_empty() {
        return Err(Error::NoData);
    }
    let table: JsonTable = serde_json::from_str(text).map_err(|e| Error::Parse {
        row: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let table = match table {
        JsonTable::Bare(rows) => LabeledRows { labels: None, rows },
        JsonTable::Labeled(t) => t,
    };
    if table.rows.is_empty() {
        return Err(Error::NoData);
    }
    check_rectangular(&table.rows, 1)?;
    if let Some(labels) = &table.labels {
        if labels.len() != table.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: table.rows.len(),
                got: labels.len(),
            });
        }
    }
    Ok(table)
}

pub fn parse_rows(text: &str, format: TableFormat) -> Result<LabeledRows> {
    match format {
        TableFormat::Csv => parse_csv(text),
        TableFormat::Json => parse_json(text),
    }
}

pub fn read_rows(path: &Path, format: TableFormat) -> Result<LabeledRows> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_rows(&text, format)
}

/// Builds the dataset for `model`. Multinomial rows are cell counts, normal
/// rows are sample mean vectors, and rank rows are the raw observations of
/// each population (ranked jointly).
pub fn to_dataset(table: LabeledRows, model: Model) -> Result<Dataset> {
    if model == Model::Multinomial {
        for (i, row) in table.rows.iter().enumerate() {
            if let Some(c) = row.iter().position(|&v| v < 0.0) {
                return Err(Error::Parse {
                    row: i + 1,
                    column: c + 1,
                    message: format!("negative count {}", row[c]),
                });
            }
        }
    }
    Ok(match (model, table.labels) {
        (Model::Multinomial, Some(l)) => Dataset::Multinomial(ContingencyTable::with_labels(table.rows, l)?),
        (Model::Multinomial, None) => Dataset::Multinomial(ContingencyTable::new(table.rows)?),
        (Model::Normal, Some(l)) => Dataset::Normal(SampleMatrix::with_labels(table.rows, SampleModel::Normal, l)?),
        (Model::Normal, None) => Dataset::Normal(SampleMatrix::new(table.rows, SampleModel::Normal)?),
        (Model::Rank, _) => Dataset::Rank(RankData::from_observations(&table.rows)?),
    })
}

/// Reads `path` and builds the dataset for `model`.
pub fn ingest_table(path: &Path, format: TableFormat, model: Model) -> Result<Dataset> {
    to_dataset(read_rows(path, format)?, model)
}

pub fn emit_rows<W: Write>(table: &LabeledRows, format: TableFormat, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    match format {
        TableFormat::Json => {
            serde_json::to_writer_pretty(&mut out, table).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out).map_err(io)
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for (i, row) in table.rows.iter().enumerate() {
                let mut rec: Vec<String> = Vec::with_capacity(row.len() + 1);
                if let Some(labels) = &table.labels {
                    rec.push(labels[i].clone());
                }
                rec.extend(row.iter().map(f64::to_string));
                w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush().map_err(io)
        }
    }
}

pub fn write_rows(path: &Path, table: &LabeledRows, format: TableFormat) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    emit_rows(table, format, std::io::BufWriter::new(file))
}

/// Default labels 1..k are left out, since CSV would read them back as data.
fn explicit_labels(labels: &[String]) -> Option<Vec<String>> {
    let default = labels.iter().enumerate().all(|(i, l)| *l == (i + 1).to_string());
    (!default).then(|| labels.to_vec())
}

impl From<&ContingencyTable> for LabeledRows {
    fn from(t: &ContingencyTable) -> Self {
        LabeledRows {
            labels: explicit_labels(t.labels()),
            rows: t.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl From<&SampleMatrix> for LabeledRows {
    fn from(m: &SampleMatrix) -> Self {
        LabeledRows {
            labels: explicit_labels(m.labels()),
            rows: m.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTS: &str = "group,low,mid,high\nA,15,226,4\nB,4,226,15\nC,6,196,43\n";

    #[test]
    fn counts_csv() {
        let t = parse_csv(COUNTS).unwrap();
        assert_eq!(
            t.labels.as_deref(),
            Some(&["A".to_string(), "B".into(), "C".into()][..])
        );
        let d = to_dataset(t, Model::Multinomial).unwrap();
        let Dataset::Multinomial(ct) = d else { panic!() };
        assert_eq!((ct.k(), ct.q()), (3, 3));
        assert!((0..3).all(|i| ct.row_total(i) == 245.0));
    }

    #[test]
    fn single_column() {
        let t = parse_csv("1\n4\n-2\n0\n").unwrap();
        assert!(t.labels.is_none());
        let d = to_dataset(t, Model::Normal).unwrap();
        assert_eq!((d.k(), d.q()), (4, 1));
        assert_eq!(d.flat(), &[1.0, 4.0, -2.0, 0.0]);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse_csv(""), Err(Error::NoData));
        assert_eq!(parse_csv("# only a comment\n"), Err(Error::NoData));
        assert_eq!(parse_csv("a,b\n"), Err(Error::NoData));
        assert_eq!(parse_json("  "), Err(Error::NoData));
        assert_eq!(parse_json("[]"), Err(Error::NoData));
        assert_eq!(Error::NoData.to_string(), "no data rows");
    }

    #[test]
    fn positioned_errors() {
        assert!(matches!(
            parse_csv("1,2\n3,x\n"),
            Err(Error::Parse { row: 2, column: 2, .. })
        ));
        assert!(matches!(
            parse_csv("1,2,3\n4,5\n"),
            Err(Error::Parse { row: 2, column: 3, .. })
        ));
        let t = parse_csv("1,2\n3,-4\n").unwrap();
        assert!(matches!(
            to_dataset(t, Model::Multinomial),
            Err(Error::Parse { row: 2, column: 2, .. })
        ));
        assert!(matches!(parse_json("[[1,2],[3]]"), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn json_forms() {
        let bare = parse_json("[[1, 2], [3, 4]]").unwrap();
        assert!(bare.labels.is_none());
        let labeled = parse_json(r#"{"labels": ["a", "b"], "rows": [[1, 2], [3, 4]]}"#).unwrap();
        assert_eq!(labeled.rows, bare.rows);
        assert!(parse_json(r#"{"labels": ["a"], "rows": [[1, 2], [3, 4]]}"#).is_err());
    }

    #[test]
    fn tables_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let ct = ContingencyTable::new(vec![vec![15.0, 226.0, 4.0], vec![4.0, 226.0, 15.0]]).unwrap();
        let sm = SampleMatrix::with_labels(
            vec![vec![0.5], vec![-1.25]],
            SampleModel::Normal,
            vec!["t".into(), "c".into()],
        )
        .unwrap();
        for format in [TableFormat::Csv, TableFormat::Json] {
            let path = dir.path().join("t");
            write_rows(&path, &LabeledRows::from(&ct), format).unwrap();
            assert_eq!(
                ingest_table(&path, format, Model::Multinomial).unwrap(),
                Dataset::Multinomial(ct.clone())
            );
            write_rows(&path, &LabeledRows::from(&sm), format).unwrap();
            assert_eq!(
                ingest_table(&path, format, Model::Normal).unwrap(),
                Dataset::Normal(sm.clone())
            );
        }
        assert!(matches!(
            ingest_table(&dir.path().join("missing"), TableFormat::Csv, Model::Normal),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn rank_rows_are_observations() {
        let d = to_dataset(parse_csv("1,2,3\n4,5,6\n").unwrap(), Model::Rank).unwrap();
        assert_eq!(d.flat(), &[2.0, 5.0]);
    }

    #[test]
    fn csv_round_trip() {
        let t = LabeledRows {
            labels: Some(vec!["x".into(), "y, z".into()]),
            rows: vec![vec![0.1, 1e-300], vec![-3.5, 2.0 / 3.0]],
        };
        for format in [TableFormat::Csv, TableFormat::Json] {
            let mut buf = Vec::new();
            emit_rows(&t, format, &mut buf).unwrap();
            let back = parse_rows(std::str::from_utf8(&buf).unwrap(), format).unwrap();
            assert_eq!(back, t);
        }
    }
}
