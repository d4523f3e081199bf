//! Matrix CSV files and fixed-precision JSON output.
//!
//! Matrix CSV: one matrix per file, row-major, comma separated, no header.
//! Every float written by this module uses 17 significant digits
//! (`{:.16e}`), so identical inputs give byte-identical files.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    // adding 0.0 folds -0 into +0
    format!("{:.16e}", v + 0.0)
}

pub fn parse_matrix_csv<T: Real>(reader: impl Read) -> Result<Mat<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("row {}: '{f}' is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("matrix file is empty".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix contains non-finite values".into()));
    }
    Ok(Mat::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten().map(T::lit)))
}

pub fn read_matrix_csv<T: Real>(path: impl AsRef<Path>) -> Result<Mat<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_matrix_csv(file).map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_matrix_csv<T: Real>(mut w: impl Write, m: &Mat<T>) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(v.as_f64())).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_matrix_csv<T: Real>(path: impl AsRef<Path>, m: &Mat<T>) -> Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    write_matrix_csv(&mut f, m)?;
    f.flush()?;
    Ok(())
}

/// Reads every `*.csv` file in `dir`, sorted by file name.
pub fn read_matrix_dir<T: Real>(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, Mat<T>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!("no .csv files in {}", dir.as_ref().display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let m = read_matrix_csv(&p)?;
            Ok((p, m))
        })
        .collect()
}

/// JSON form of a matrix: `{"n": rows, "data": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub data: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix<T: Real>(m: &Mat<T>) -> Self {
        Self {
            n: m.nrows(),
            data: m.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
        }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<Mat<T>> {
        let ncols = self.data.first().map_or(0, |r| r.len());
        if self.data.len() != self.n || self.data.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("JSON matrix shape does not match n".into()));
        }
        Ok(Mat::from_row_iterator(self.n, ncols, self.data.iter().flatten().map(|v| T::lit(*v))))
    }
}

/// Compact JSON formatter that prints floats with 17 significant digits and
/// non-finite values as `null`.
#[derive(Debug, Default, Clone, Copy)]
pub struct FixedPrecision;

impl Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_string(value: &impl Serialize) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPrecision);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes a CSV table of flat serializable rows, header taken from the field names.
pub fn write_rows_csv<R: Serialize>(w: impl Write, rows: &[R]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for (k, r) in rows.iter().enumerate() {
        // go through JSON values so floats share the fixed-precision format
        let v = serde_json::to_value(r)?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidInput("CSV rows must be structs".into()))?;
        if k == 0 {
            wtr.write_record(obj.keys())?;
        }
        let fields: Vec<String> = obj
            .values()
            .map(|x| match x {
                serde_json::Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap()),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}
