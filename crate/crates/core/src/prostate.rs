//! Stamey et al. prostate data: eight clinical predictors of log PSA.
//!
//! Accepts the common distributions of the file: comma- or tab-separated,
//! with an optional leading row-index column (blank or `id`/`index` header)
//! and an optional trailing `train` column, which is kept as metadata and
//! never used to drop rows.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::scalar::Scalar;

/// Predictor columns in canonical order.
pub const FEATURES: [&str; 8] = ["lcavol", "lweight", "age", "lbph", "svi", "lcp", "gleason", "pgg45"];
pub const RESPONSE: &str = "lpsa";
pub const TRAIN_COLUMN: &str = "train";
pub const EXPECTED_ROWS: usize = 97;

/// The copy of the data shipped with the crate (97 rows, comma-separated).
pub const BUNDLED_CSV: &str = include_str!("../data/prostate.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatOptions {
    /// Field delimiter; sniffed from the header line when `None`.
    pub delimiter: Option<u8>,
    /// Required row count; `None` accepts any positive count.
    pub expected_rows: Option<usize>,
}

impl Default for FormatOptions {
    fn default() -> Self {
        Self {
            delimiter: None,
            expected_rows: Some(EXPECTED_ROWS),
        }
    }
}

/// Delimited text parsed into named columns.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    index: Option<Vec<String>>,
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else if header.contains(',') {
        b','
    } else if header.contains(';') {
        b';'
    } else {
        b' '
    }
}

fn parse_table(text: &str, delimiter: Option<u8>) -> Result<Table> {
    let delim = delimiter.unwrap_or_else(|| sniff_delimiter(text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(delim == b' ')
        .from_reader(text.as_bytes());
    let mut columns: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if delim == b' ' {
        columns.retain(|c| !c.is_empty());
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let fields: Vec<String> = rec
            .iter()
            .map(|f| f.trim().to_string())
            .filter(|f| delim != b' ' || !f.is_empty())
            .collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(fields);
    }

    let is_index_name = |c: &str| c.is_empty() || matches!(c.to_ascii_lowercase().as_str(), "id" | "index" | "row");
    let mut index = None;
    if let Some(first) = rows.first() {
        if first.len() == columns.len() + 1 {
            // header omits the index column's name
            index = Some(rows.iter_mut().map(|r| r.remove(0)).collect());
        } else if columns.first().is_some_and(|c| is_index_name(c)) {
            columns.remove(0);
            index = Some(rows.iter_mut().map(|r| if r.is_empty() { String::new() } else { r.remove(0) }).collect());
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != columns.len() {
            return Err(Error::Data {
                line: i + 2,
                column: "<row>".into(),
                message: format!("expected {} fields, found {}", columns.len(), r.len()),
            });
        }
    }
    Ok(Table { columns, rows, index })
}

fn parse_number<F: Scalar>(s: &str, line: usize, column: &str) -> Result<F> {
    let v: f64 = s.parse().map_err(|_| Error::Data {
        line,
        column: column.into(),
        message: format!("not a number: `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Data {
            line,
            column: column.into(),
            message: format!("non-finite value `{s}`"),
        });
    }
    Ok(F::c(v))
}

fn parse_flag(s: &str, line: usize) -> Result<bool> {
    match s.to_ascii_uppercase().as_str() {
        "T" | "TRUE" | "1" => Ok(true),
        "F" | "FALSE" | "0" => Ok(false),
        _ => Err(Error::Data {
            line,
            column: TRAIN_COLUMN.into(),
            message: format!("expected T/F, found `{s}`"),
        }),
    }
}

fn check_range(name: &str, v: f64, line: usize) -> Result<()> {
    let ok = match name {
        "svi" => v == 0.0 || v == 1.0,
        "gleason" => [6.0, 7.0, 8.0, 9.0].contains(&v),
        "age" => (20.0..=100.0).contains(&v),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        let expected = match name {
            "svi" => "0 or 1",
            "gleason" => "one of 6, 7, 8, 9",
            _ => "between 20 and 100",
        };
        Err(Error::Data {
            line,
            column: name.into(),
            message: format!("value {v} out of range (expected {expected})"),
        })
    }
}

fn build<F: Scalar>(
    table: Table,
    features: &[String],
    response: &str,
    validate_ranges: bool,
) -> Result<Dataset<F>> {
    let col_of = |name: &str| -> Result<usize> {
        table
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let feat_idx = features.iter().map(|f| col_of(f)).collect::<Result<Vec<_>>>()?;
    let resp_idx = col_of(response)?;
    let train_idx = table.columns.iter().position(|c| c == TRAIN_COLUMN);
    let n = table.rows.len();
    if n == 0 {
        return Err(Error::Schema("no data rows".into()));
    }
    let mut x = Array2::<F>::zeros((n, features.len()));
    let mut y = Array1::<F>::zeros(n);
    let mut flags = Vec::with_capacity(n);
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 2;
        for (j, &c) in feat_idx.iter().enumerate() {
            let v: F = parse_number(&row[c], line, &features[j])?;
            if validate_ranges {
                check_range(&features[j], v.to_f64_lossy(), line)?;
            }
            x[[i, j]] = v;
        }
        y[i] = parse_number(&row[resp_idx], line, response)?;
        if let Some(t) = train_idx {
            flags.push(parse_flag(&row[t], line)?);
        }
    }
    let mut d = Dataset::new(x, y, features.to_vec())?;
    if let Some(idx) = table.index {
        d = d.with_row_labels(idx)?;
    }
    if train_idx.is_some() {
        d = d.with_train_flags(flags)?;
    }
    Ok(d)
}

/// Parses and validates the prostate data.
pub fn load_prostate<F: Scalar, R: Read>(mut source: R, opts: FormatOptions) -> Result<Dataset<F>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let table = parse_table(&text, opts.delimiter)?;
    let allowed = |c: &str| FEATURES.contains(&c) || c == RESPONSE || c == TRAIN_COLUMN;
    if let Some(unknown) = table.columns.iter().find(|c| !allowed(c)) {
        return Err(Error::Schema(format!("unknown column `{unknown}`")));
    }
    if let Some(expected) = opts.expected_rows {
        if table.rows.len() != expected {
            return Err(Error::Schema(format!(
                "expected {expected} data rows, found {}",
                table.rows.len()
            )));
        }
    }
    let features: Vec<String> = FEATURES.iter().map(|s| s.to_string()).collect();
    build(table, &features, RESPONSE, true)
}

/// The bundled copy of the data.
pub fn bundled<F: Scalar>() -> Dataset<F> {
    load_prostate(BUNDLED_CSV.as_bytes(), FormatOptions::default()).expect("bundled prostate data are valid")
}

/// Generic delimited regression table: every column other than `response`,
/// the row index and `train` becomes a predictor, in file order.
pub fn load_table<F: Scalar, R: Read>(mut source: R, response: &str, delimiter: Option<u8>) -> Result<Dataset<F>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let table = parse_table(&text, delimiter)?;
    let features: Vec<String> = table
        .columns
        .iter()
        .filter(|c| c.as_str() != response && c.as_str() != TRAIN_COLUMN)
        .cloned()
        .collect();
    if features.is_empty() {
        return Err(Error::Schema("no predictor columns".into()));
    }
    build(table, &features, response, false)
}

/// Writes `d` as comma-separated text that [`load_table`] and (for the
/// prostate schema) [`load_prostate`] read back to an identical dataset.
pub fn export_dataset<F: Scalar, W: Write>(d: &Dataset<F>, response: &str, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = Vec::new();
    if d.row_labels().is_some() {
        header.push(String::new());
    }
    header.extend(d.feature_names().iter().cloned());
    header.push(response.to_string());
    if d.train_flags().is_some() {
        header.push(TRAIN_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..d.n() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(l) = d.row_labels() {
            rec.push(l[i].clone());
        }
        rec.extend(d.x().row(i).iter().map(|v| v.to_string()));
        rec.push(d.y()[i].to_string());
        if let Some(f) = d.train_flags() {
            rec.push(if f[i] { "T" } else { "F" }.into());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
