// SPDX-License-Identifier: MIT OR Apache-2.0

//! Panel CSV files: one series per row, one time point per column.
//!
//! A first row containing any non-numeric cell is treated as a header and
//! skipped. Values are written with 17 significant digits so files round-trip.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use panelseg_core::PanelData;

use crate::error::{Error, Result};

pub fn read_panel(path: &Path) -> Result<PanelData> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    read_panel_from(file, path)
}

/// Parses panel CSV from any reader; `path` is only used in error messages.
pub fn read_panel_from<R: Read>(reader: R, path: &Path) -> Result<PanelData> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|c| c.parse::<f64>().is_err()) {
                continue;
            }
        }
        let mut row = Vec::with_capacity(record.len());
        for (k, cell) in record.iter().enumerate() {
            let cell_err = |message: String| Error::Cell { path: path.to_owned(), row: line, column: k + 1, message };
            let v: f64 = cell.parse().map_err(|_| cell_err(format!("cannot parse {cell:?} as a number")))?;
            if !v.is_finite() {
                return Err(cell_err(format!("value {cell} is not finite")));
            }
            row.push(v);
        }
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(Error::Cell {
                    path: path.to_owned(),
                    row: line,
                    column: row.len().min(prev.len()) + 1,
                    message: format!("expected {} columns, found {}", prev.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input { path: path.to_owned(), message: "no data rows".into() });
    }
    PanelData::from_rows(&rows).map_err(|e| Error::Input { path: path.to_owned(), message: e.to_string() })
}

pub fn write_panel(path: &Path, panel: &PanelData) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    let mut out = BufWriter::new(file);
    write_panel_to(&mut out, panel).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    out.flush().map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn write_panel_to<W: Write + ?Sized>(out: &mut W, panel: &PanelData) -> std::io::Result<()> {
    for row in panel.rows() {
        let mut sep = "";
        for v in row {
            write!(out, "{sep}{v:.16e}")?;
            sep = ",";
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One value per line, e.g. bootstrap replicate statistics.
pub fn write_column(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_owned(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(out, "{header}").map_err(io_err)?;
    for v in values {
        writeln!(out, "{v:.16e}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PanelData> {
        read_panel_from(text.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn header_is_skipped() {
        let p = parse("t1,t2,t3\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!((p.n_series(), p.n_times()), (2, 3));
        assert_eq!(p.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn bad_cell_reports_position() {
        match parse("1,2,3\n4,x,6\n") {
            Err(Error::Cell { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(parse("1,2,3\n4,5\n"), Err(Error::Cell { row: 2, .. })));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(parse("1,2,inf\n"), Err(Error::Cell { row: 1, column: 3, .. })));
    }

    #[test]
    fn round_trip() {
        let p = PanelData::from_rows(&[vec![0.1, -2.5e-300, 1.0 / 3.0], vec![7.0, 8.0, 9.0]]).unwrap();
        let mut buf = Vec::new();
        write_panel_to(&mut buf, &p).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), p);
    }
}
