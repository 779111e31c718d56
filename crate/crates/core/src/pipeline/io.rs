use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use super::frame::{SeriesFragment, DATE_FORMAT};
use crate::error::{Error, Result};

/// Reads one CSV file into a fragment. `value_columns` empty means every
/// column except the date column. Empty cells become missing values.
pub fn load_csv_series(path: impl AsRef<Path>, date_column: &str, value_columns: &[String]) -> Result<SeriesFragment> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_series(file, date_column, value_columns).map_err(|e| match e {
        Error::Csv(m) => Error::Csv(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// [`load_csv_series`] over any reader. Rows are reported by line number
/// (the header is line 1).
pub fn parse_csv_series<R: Read>(reader: R, date_column: &str, value_columns: &[String]) -> Result<SeriesFragment> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Csv("missing header row".into()));
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column '{name}' not found in header")))
    };
    let date_idx = find(date_column)?;
    let (names, idx): (Vec<String>, Vec<usize>) = if value_columns.is_empty() {
        header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(i, h)| (h.clone(), i))
            .unzip()
    } else {
        let mut idx = Vec::with_capacity(value_columns.len());
        for c in value_columns {
            idx.push(find(c)?);
        }
        (value_columns.to_vec(), idx)
    };
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(Error::Csv(format!("duplicate column '{dup}'")));
    }

    let mut rows: Vec<(NaiveDate, Vec<Option<f64>>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let raw_date = cell(date_idx);
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|e| Error::Parse {
            row: line,
            column: date_column.to_string(),
            message: format!("'{raw_date}' is not a YYYY-MM-DD date ({e})"),
        })?;
        let mut values = Vec::with_capacity(idx.len());
        for (&i, name) in idx.iter().zip(&names) {
            let s = cell(i);
            if s.is_empty() {
                values.push(None);
                continue;
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(Some(v)),
                _ => {
                    return Err(Error::Parse {
                        row: line,
                        column: name.clone(),
                        message: format!("'{s}' is not a finite number"),
                    })
                }
            }
        }
        rows.push((date, values));
    }

    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate {
            date: w[0].0.format(DATE_FORMAT).to_string(),
        });
    }
    let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
    let mut dates = Vec::with_capacity(rows.len());
    for (d, vals) in rows {
        dates.push(d);
        for (col, v) in columns.iter_mut().zip(vals) {
            col.push(v);
        }
    }
    Ok(SeriesFragment { dates, names, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SeriesFragment> {
        parse_csv_series(s.as_bytes(), "date", &[])
    }

    #[test]
    fn three_rows() {
        let f = parse("date,price\n2020-01-01,1.5\n2020-01-02,2\n2020-01-03,3\n").unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.column("price").unwrap(), &[Some(1.5), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn duplicate_date_named() {
        let err = parse("date,price\n2020-01-01,1\n2020-01-01,2\n").unwrap_err();
        assert!(matches!(&err, Error::DuplicateDate { date } if date == "2020-01-01"));
    }

    #[test]
    fn bad_cell_located() {
        let err = parse("date,price\n2020-01-01,1\n2020-01-02,abc\n").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "price");
            }
            e => panic!("unexpected {e}"),
        }
        let err = parse("date,price\n01/02/2020,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn empty_cells_missing_and_rows_sorted() {
        let f = parse("date,a,b\n2020-01-03,1,\n2020-01-01,,2\n").unwrap();
        assert_eq!(f.dates[0].to_string(), "2020-01-01");
        assert_eq!(f.column("a").unwrap(), &[None, Some(1.0)]);
        assert_eq!(f.column("b").unwrap(), &[Some(2.0), None]);
    }

    #[test]
    fn selected_columns_only() {
        let f = parse_csv_series("date,a,b\n2020-01-01,1,2\n".as_bytes(), "date", &["b".to_string()]).unwrap();
        assert_eq!(f.names, vec!["b".to_string()]);
        assert!(parse_csv_series("date,a\n".as_bytes(), "date", &["zz".to_string()]).is_err());
        assert!(parse_csv_series("a,b\n".as_bytes(), "date", &[]).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_csv_series("/nonexistent/prices.csv", "date", &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/prices.csv"));
    }
}
