use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::DomainDataset;
use crate::error::{DglError, Result};
use crate::scalar::Real;

/// On-disk dataset layouts.
///
/// * `Csv`: one sample per line, features first, integer label in the last
///   column, `-1` for an unknown label.
/// * `SparseIndex`: `label idx:val idx:val ...` with 1-based feature indices;
///   omitted features are zero. Every label is a class (there is no unknown
///   sentinel in this format).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    SparseIndex,
}

impl FromStr for DataFormat {
    type Err = DglError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "sparse-index" | "sparse" | "libsvm" => Ok(DataFormat::SparseIndex),
            other => Err(DglError::InvalidParameter {
                name: "format",
                value: other.to_string(),
                reason: "expected csv or sparse-index",
            }),
        }
    }
}

const UNKNOWN_LABEL: i64 = -1;

/// Reads a dataset file. The dataset is named after the file stem.
pub fn load_dataset<T: Real>(path: &Path, format: DataFormat) -> Result<DomainDataset<T>> {
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_dataset(&text, format, name)
}

/// Parses dataset text; see [`DataFormat`] for the layouts.
pub fn parse_dataset<T: Real>(
    text: &str,
    format: DataFormat,
    name: impl Into<String>,
) -> Result<DomainDataset<T>> {
    let name = name.into();
    let (rows, raw_labels, dim) = match format {
        DataFormat::Csv => parse_csv(text)?,
        DataFormat::SparseIndex => parse_sparse(text)?,
    };
    if rows.is_empty() {
        return Err(DglError::Empty(name));
    }

    let mut label_values: Vec<i64> = raw_labels
        .iter()
        .copied()
        .filter(|&v| !(format == DataFormat::Csv && v == UNKNOWN_LABEL))
        .collect();
    label_values.sort_unstable();
    label_values.dedup();

    let labels = raw_labels
        .iter()
        .map(|&v| {
            if format == DataFormat::Csv && v == UNKNOWN_LABEL {
                None
            } else {
                label_values.binary_search(&v).ok()
            }
        })
        .collect();

    let n = rows.len();
    let mut features = DMatrix::<T>::zeros(dim, n);
    for (j, row) in rows.iter().enumerate() {
        for &(i, v) in row {
            features[(i, j)] = T::lit(v);
        }
    }
    DomainDataset::with_label_values(name, features, labels, label_values)
}

type Parsed = (Vec<Vec<(usize, f64)>>, Vec<i64>, usize);

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| DglError::Parse {
        line,
        message: format!("invalid number {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(DglError::Parse {
            line,
            message: format!("non-finite feature value {field:?}"),
        });
    }
    Ok(v)
}

fn parse_label(field: &str, line: usize) -> Result<i64> {
    let field = field.trim();
    let field = field.strip_prefix('+').unwrap_or(field);
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    // Labels written as floats ("1.0") are accepted when integral.
    match field.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.is_finite() => Ok(v as i64),
        _ => Err(DglError::Parse {
            line,
            message: format!("invalid integer label {field:?}"),
        }),
    }
}

fn parse_csv(text: &str) -> Result<Parsed> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for record in reader.records() {
        let record = record.map_err(|e| DglError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(DglError::Parse {
                line,
                message: "expected at least one feature and a label".into(),
            });
        }
        let m = record.len() - 1;
        match dim {
            None => dim = Some(m),
            Some(d) if d != m => {
                return Err(DglError::Parse {
                    line,
                    message: format!("expected {d} features, found {m}"),
                })
            }
            _ => {}
        }
        let row = (0..m)
            .map(|i| parse_value(&record[i], line).map(|v| (i, v)))
            .collect::<Result<Vec<_>>>()?;
        labels.push(parse_label(&record[m], line)?);
        rows.push(row);
    }
    Ok((rows, labels, dim.unwrap_or(0)))
}

fn parse_sparse(text: &str) -> Result<Parsed> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or_default(), line)?;
        let mut row = Vec::new();
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| DglError::Parse {
                line,
                message: format!("expected idx:val, found {token:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| DglError::Parse {
                line,
                message: format!("invalid feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(DglError::Parse {
                    line,
                    message: "feature indices are 1-based".into(),
                });
            }
            dim = dim.max(idx);
            row.push((idx - 1, parse_value(val, line)?));
        }
        labels.push(label);
        rows.push(row);
    }
    Ok((rows, labels, dim))
}

/// Writes a dataset in the given format. Values are printed with full
/// round-trip precision.
///
/// In `SparseIndex` format a masked sample is written with its true label,
/// and a sample with no label at all is an error.
pub fn write_dataset<T: Real>(
    path: &Path,
    dataset: &DomainDataset<T>,
    format: DataFormat,
) -> Result<()> {
    fs::write(path, format_dataset(dataset, format)?)?;
    Ok(())
}

fn format_dataset<T: Real>(dataset: &DomainDataset<T>, format: DataFormat) -> Result<String> {
    let x = dataset.features();
    let values = dataset.label_values();
    let mut out = String::new();
    for j in 0..dataset.n_samples() {
        let visible = dataset.labels()[j];
        let shadow = dataset.true_labels().map(|t| t[j]);
        match format {
            DataFormat::Csv => {
                for i in 0..x.nrows() {
                    write!(out, "{:?},", x[(i, j)].as_f64()).unwrap();
                }
                let label = visible.map_or(UNKNOWN_LABEL, |c| values[c]);
                writeln!(out, "{label}").unwrap();
            }
            DataFormat::SparseIndex => {
                let class = visible.or(shadow).ok_or(DglError::InvalidParameter {
                    name: "label",
                    value: format!("sample {j}"),
                    reason: "sparse-index format cannot store unknown labels",
                })?;
                write!(out, "{}", values[class]).unwrap();
                for i in 0..x.nrows() {
                    let v = x[(i, j)].as_f64();
                    if v != 0.0 {
                        write!(out, " {}:{:?}", i + 1, v).unwrap();
                    }
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}
