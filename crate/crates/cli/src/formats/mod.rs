//! On-disk artifact formats. Every writer takes the destination path so errors
//! can name it; every reader validates what it loads.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use conflict_seq_core::CellId;

use crate::error::{Error, Result};

pub mod distbin;
pub mod geojson;
pub mod newick;
pub mod tables;

/// Shortest text that parses back to the same `f64`; `inf` for infinity and
/// `NA` for NaN.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

pub fn parse_f64(raw: &str) -> Option<f64> {
    match raw.trim() {
        "NA" | "" => None,
        s => s.parse().ok(),
    }
}

/// Compact cell label used in matrices and trees.
pub fn cell_label(c: CellId) -> String {
    format!("c{}_r{}", c.col, c.row)
}

/// CSV writer bound to its destination path.
pub(crate) struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub(crate) fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CsvOut {
            path: path.to_path_buf(),
            w: csv::Writer::from_writer(BufWriter::new(f)),
        })
    }

    pub(crate) fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.w
            .write_record(fields)
            .map_err(|e| Error::csv(&self.path, e))
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// CSV reader that checks the header matches `expected` exactly.
pub(crate) struct CsvIn {
    path: PathBuf,
    r: csv::Reader<File>,
}

impl CsvIn {
    pub(crate) fn open(path: &Path, expected: &[&str]) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(f);
        let header = r.headers().map_err(|e| Error::csv(path, e))?;
        let found: Vec<&str> = header.iter().collect();
        if found != expected {
            return Err(Error::format(
                path,
                format!("expected columns {expected:?}, found {found:?}"),
            ));
        }
        Ok(CsvIn {
            path: path.to_path_buf(),
            r,
        })
    }

    /// Records with their 1-based data-row numbers.
    pub(crate) fn rows(&mut self) -> Result<Vec<(usize, csv::StringRecord)>> {
        self.r
            .records()
            .enumerate()
            .map(|(i, r)| r.map(|r| (i + 1, r)).map_err(|e| Error::csv(&self.path, e)))
            .collect()
    }

    pub(crate) fn bad(&self, row: usize, msg: impl std::fmt::Display) -> Error {
        Error::format(&self.path, format!("row {row}: {msg}"))
    }

    pub(crate) fn field<T: std::str::FromStr>(
        &self,
        rec: &csv::StringRecord,
        row: usize,
        i: usize,
    ) -> Result<T> {
        let raw = rec.get(i).unwrap_or("");
        raw.trim()
            .parse()
            .map_err(|_| self.bad(row, format!("cannot parse {raw:?} in column {}", i + 1)))
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}
