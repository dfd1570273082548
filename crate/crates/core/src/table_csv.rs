//! Spectra CSV: a `target` column followed by one column per wavelength.
//!
//! Reals are written in Rust's shortest round-trippable form, so
//! `read(write(t)) == t` bit for bit.

use crate::error::{Error, Result};
use crate::spectrum::{SpectraTable, TargetKind};

/// Formats a real so that parsing it back yields the identical bits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_spectra_csv(table: &SpectraTable) -> String {
    let mut out = String::with_capacity(table.n_samples() * table.n_bands() * 20);
    out.push_str("target");
    for w in table.bands() {
        out.push(',');
        out.push_str(&fmt_real(*w));
    }
    out.push('\n');
    for (row, y) in table.rows().iter().zip(table.targets()) {
        out.push_str(&fmt_real(*y));
        for v in row {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    out
}

fn cell(text: &str, row: usize, column: usize) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| Error::Csv {
        row,
        column: Some(column),
        msg: format!("not a number: {text:?}"),
    })
}

/// Parses a spectra CSV. Row 0 is the header; data rows count from 1.
///
/// The file does not record what the targets measure, so the caller names it.
pub fn read_spectra_csv(text: &str, kind: TargetKind) -> Result<SpectraTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::Csv {
            row: 0,
            column: None,
            msg: e.to_string(),
        })?,
        None => return Err(Error::Empty("spectra CSV has no header".into())),
    };
    if header.get(0).map(str::trim) != Some("target") {
        return Err(Error::Csv {
            row: 0,
            column: Some(0),
            msg: "first header cell must be `target`".into(),
        });
    }
    let bands = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, t)| cell(t, 0, c))
        .collect::<Result<Vec<f64>>>()?;

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: None,
            msg: e.to_string(),
        })?;
        if record.len() != bands.len() + 1 {
            return Err(Error::Csv {
                row,
                column: None,
                msg: format!("{} cells, header has {}", record.len(), bands.len() + 1),
            });
        }
        y.push(cell(&record[0], row, 0)?);
        x.push(
            record
                .iter()
                .enumerate()
                .skip(1)
                .map(|(c, t)| cell(t, row, c))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    SpectraTable::new(bands, x, y, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_round_trip() {
        let t = SpectraTable::new(vec![386.0, 387.3, 388.6], vec![vec![0.1, 0.2, 1.0 / 3.0]], vec![8.7], TargetKind::Ssc)
            .unwrap();
        let text = write_spectra_csv(&t);
        assert!(text.starts_with("target,386.0,387.3,388.6\n"));
        assert_eq!(read_spectra_csv(&text, TargetKind::Ssc).unwrap(), t);
    }

    #[test]
    fn ragged_row_reports_row_index() {
        let text = "target,1,2,3\n1,0.1,0.2,0.3\n2,0.1,0.2\n";
        match read_spectra_csv(text, TargetKind::Ssc) {
            Err(Error::Csv { row, column: None, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let text = "target,1,2,3\n1,0.1,abc,0.3\n";
        match read_spectra_csv(text, TargetKind::Ssc) {
            Err(Error::Csv { row, column, .. }) => assert_eq!((row, column), (1, Some(2))),
            other => panic!("unexpected {other:?}"),
        }
    }
}
