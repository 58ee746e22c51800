//! CSV panel ingestion and export, and the score-table reader.
//!
//! Panels use a long layout with header `t,id,f1,...,fd`: one row per
//! observation, rows grouped by ascending `t`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::panel::TimePanel;

fn parse_err(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input)
}

fn record_line(rec: &csv::StringRecord, fallback: u64) -> u64 {
    rec.position().map_or(fallback, |p| p.line())
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(line, e.to_string())
}

fn parse_number<T: std::str::FromStr>(field: &str, line: u64, what: &str) -> Result<T> {
    field.parse().map_err(|_| parse_err(line, format!("{what} '{field}' is not a valid number")))
}

/// Parse long-format panel CSV from any reader.
pub fn parse_panels_csv<R: Read>(input: R) -> Result<Vec<TimePanel>> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(parse_err(1, "empty input")),
        Some(r) => r.map_err(csv_err)?,
    };
    if header.len() < 3 || &header[0] != "t" || &header[1] != "id" {
        return Err(parse_err(record_line(&header, 1), "header must be 't,id,f1,...'"));
    }
    let d = header.len() - 2;

    let mut panels = Vec::new();
    let mut current: Option<(usize, u64, Vec<f64>)> = None;
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec, 0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != d + 2 {
            return Err(parse_err(line, format!("expected {} fields, found {}", d + 2, rec.len())));
        }
        if rec[0].is_empty() {
            return Err(parse_err(line, "missing time index"));
        }
        let t: usize = parse_number(&rec[0], line, "time index")?;
        match &current {
            Some((ct, ..)) if t < *ct => {
                return Err(parse_err(line, format!("time index {t} after {ct}: rows must be grouped by ascending t")));
            }
            Some((ct, ..)) if t == *ct => {}
            _ => {
                if let Some(done) = current.take() {
                    panels.push(finish(done, d)?);
                }
                current = Some((t, line, Vec::new()));
            }
        }
        let buf = &mut current.as_mut().unwrap().2;
        for field in rec.iter().skip(2) {
            let v: f64 = parse_number(field, line, "feature")?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("feature '{field}' is not finite")));
            }
            buf.push(v);
        }
    }
    match current {
        Some(done) => panels.push(finish(done, d)?),
        None => return Err(parse_err(record_line(&header, 1), "no data rows")),
    }
    Ok(panels)
}

fn finish((t, line, data): (usize, u64, Vec<f64>), d: usize) -> Result<TimePanel> {
    let n = data.len() / d;
    TimePanel::new(t, n, d, data).map_err(|e| parse_err(line, e.to_string()))
}

pub fn ingest_csv(path: &Path) -> Result<Vec<TimePanel>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_panels_csv(BufReader::new(file))
}

/// Write panels in the long layout. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_panels_csv<W: Write>(out: W, panels: &[TimePanel]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    let d = panels.first().map_or(0, TimePanel::dim);
    write!(w, "t,id")?;
    for j in 1..=d {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for p in panels {
        for (i, row) in p.rows().enumerate() {
            write!(w, "{},{}", p.t(), i + 1)?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

pub fn export_csv(path: &Path, panels: &[TimePanel]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_panels_csv(file, panels).map_err(|e| Error::io(path, e))
}

/// Score series keyed by method name, each ordered by time.
pub type ScoreTable = BTreeMap<String, Vec<(usize, f64)>>;

/// Parse a `t,method,value` table.
pub fn parse_scores_csv<R: Read>(input: R) -> Result<ScoreTable> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(parse_err(1, "empty input")),
        Some(r) => r.map_err(csv_err)?,
    };
    if header.len() != 3 || &header[0] != "t" || &header[1] != "method" || &header[2] != "value" {
        return Err(parse_err(record_line(&header, 1), "header must be 't,method,value'"));
    }
    let mut table = ScoreTable::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec, 0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let t: usize = parse_number(&rec[0], line, "time index")?;
        if rec[1].is_empty() {
            return Err(parse_err(line, "missing method"));
        }
        let v: f64 = parse_number(&rec[2], line, "value")?;
        if !v.is_finite() {
            return Err(parse_err(line, "value is not finite"));
        }
        let series = table.entry(rec[1].to_string()).or_default();
        if series.last().is_some_and(|&(prev, _)| t <= prev) {
            return Err(parse_err(line, format!("time index {t} for '{}' is not increasing", &rec[1])));
        }
        series.push((t, v));
    }
    if table.is_empty() {
        return Err(parse_err(record_line(&header, 1), "no data rows"));
    }
    Ok(table)
}

pub fn read_scores_csv(path: &Path) -> Result<ScoreTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scores_csv(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_steps_three_rows() {
        let text = "t,id,f1,f2\n1,1,0.5,1\n1,2,2,3\n1,3,4,5\n2,1,6,7\n2,2,8,9\n2,3,10,11\n";
        let panels = parse_panels_csv(text.as_bytes()).unwrap();
        assert_eq!(panels.len(), 2);
        assert_eq!((panels[1].t(), panels[1].len(), panels[1].dim()), (2, 3, 2));
        assert_eq!(panels[0].row(0), &[0.5, 1.0]);
        assert_eq!(panels[1].row(2), &[10.0, 11.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse_panels_csv("".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let ragged = "t,id,f1,f2\n1,1,0,1\n1,2,3\n";
        assert!(matches!(parse_panels_csv(ragged.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let text = "t,id,f1\n1,1,0\n1,2,abc\n";
        assert!(matches!(parse_panels_csv(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let no_t = "t,id,f1\n1,1,0\n,2,1\n";
        assert!(matches!(parse_panels_csv(no_t.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let backwards = "t,id,f1\n2,1,0\n1,1,1\n";
        assert!(matches!(parse_panels_csv(backwards.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let header_only = "t,id,f1\n";
        assert!(matches!(parse_panels_csv(header_only.as_bytes()), Err(Error::Parse { .. })));
        let nan = "t,id,f1\n1,1,NaN\n";
        assert!(matches!(parse_panels_csv(nan.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn scores_table() {
        let text = "t,method,value\n1,mc,0.5\n1,ddim,2\n2,mc,0.25\n2,ddim,2.5\n";
        let table = parse_scores_csv(text.as_bytes()).unwrap();
        assert_eq!(table["mc"], vec![(1, 0.5), (2, 0.25)]);
        assert_eq!(table["ddim"].len(), 2);
        let dup = "t,method,value\n1,mc,0.5\n1,mc,0.4\n";
        assert!(matches!(parse_scores_csv(dup.as_bytes()), Err(Error::Parse { line: 3, .. })));
        assert!(parse_scores_csv("t,method\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..6),
            steps in 1usize..4,
        ) {
            let panels: Vec<TimePanel> = (1..=steps).map(|t| TimePanel::from_rows(t, &rows).unwrap()).collect();
            let mut buf = Vec::new();
            write_panels_csv(&mut buf, &panels).unwrap();
            let back = parse_panels_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), panels.len());
            for (a, b) in back.iter().zip(&panels) {
                prop_assert_eq!(a.t(), b.t());
                let bits_a: Vec<u64> = a.as_slice().iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u64> = b.as_slice().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(bits_a, bits_b);
            }
        }

        #[test]
        fn arbitrary_text_never_panics(text in ".{0,200}") {
            let _ = parse_panels_csv(text.as_bytes());
            let _ = parse_scores_csv(text.as_bytes());
        }
    }
}
