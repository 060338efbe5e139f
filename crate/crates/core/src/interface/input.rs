//! Single-column CSV ingestion.
//!
//! The first column of every row is read as a number. Row 1 may be a header
//! (skipped when it does not parse); any later row that does not parse, and
//! any blank row before the last data row, aborts with the offending row
//! number. Quoted fields spanning lines are not supported.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_column<R: Read>(mut reader: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse(format!("cannot read input: {e}")))?;
    let lines: Vec<&str> = text.lines().collect();
    let last_data = lines.iter().rposition(|l| !l.trim().is_empty());
    if let Some(blank) = lines[..last_data.map_or(0, |i| i + 1)].iter().position(|l| l.trim().is_empty()) {
        return Err(Error::Parse(format!("row {}: blank row", blank + 1)));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| Error::Parse(format!("row {line}: malformed CSV: {e}")))?;
        let field = record.get(0).unwrap_or("");
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => return Err(Error::Parse(format!("row {line}: non-finite value {v}"))),
            Err(_) if line == 1 => {}
            Err(_) if field.is_empty() => return Err(Error::Parse(format!("row {line}: empty value"))),
            Err(_) => return Err(Error::Parse(format!("row {line}: '{field}' is not a number"))),
        }
    }
    if values.is_empty() {
        return Err(Error::Parse("no numeric rows".into()));
    }
    Ok(values)
}

pub fn parse_column_str(text: &str) -> Result<Vec<f64>> {
    parse_column(text.as_bytes())
}

pub fn read_column_file(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_column(file).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_extra_columns() {
        assert_eq!(parse_column_str("value,flag\n1.5,a\n2,b\n-3e2,c\n").unwrap(), vec![1.5, 2.0, -300.0]);
        assert_eq!(parse_column_str("4\n5").unwrap(), vec![4.0, 5.0]);
        assert_eq!(parse_column_str(" 7 \r\n8\r\n").unwrap(), vec![7.0, 8.0]);
    }

    #[test]
    fn bad_rows_are_named() {
        let e = parse_column_str("x\n1\nabc\n3\n").unwrap_err().to_string();
        assert!(e.contains("row 3"), "{e}");
        let e = parse_column_str("x\n1\n\n3\n").unwrap_err().to_string();
        assert!(e.contains("row 3") && e.contains("blank"), "{e}");
        let e = parse_column_str("1\n,2\n").unwrap_err().to_string();
        assert!(e.contains("row 2") && e.contains("empty"), "{e}");
        let e = parse_column_str("1\nNaN\n").unwrap_err().to_string();
        assert!(e.contains("row 2"), "{e}");
        assert!(parse_column_str("header only\n").is_err());
        assert!(parse_column_str("").is_err());
    }
}
