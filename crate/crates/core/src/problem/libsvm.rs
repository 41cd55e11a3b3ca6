//! LIBSVM text-format ingestion.
//!
//! One sample per line: `label idx:val idx:val ...` with one-based,
//! strictly increasing indices. Labels `{0,1}` or `{-1,+1}` are
//! normalized to `{-1,+1}`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::Dataset;

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    parse_libsvm(BufReader::new(file))
}

fn parse_libsvm(reader: impl BufRead) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let label_tok = match tokens.next() {
            Some(t) => t,
            None => continue, // blank line
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid label token {label_tok:?}"),
        })?;

        let mut row = Vec::new();
        let mut prev_index = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected index:value pair, got {tok:?}"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid feature index {idx_s:?}"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid feature value {val_s:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "feature indices are one-based".into(),
                });
            }
            if idx <= prev_index {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("indices must be strictly increasing ({prev_index} then {idx})"),
                });
            }
            prev_index = idx;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        raw_labels.push(label);
    }

    if rows.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }

    let labels = normalize_labels(&raw_labels)?;
    Ok(Dataset {
        rows,
        labels,
        n: max_index,
    })
}

fn normalize_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let pm = raw.iter().all(|&b| b == -1.0 || b == 1.0);
    let zero_one = raw.iter().all(|&b| b == 0.0 || b == 1.0);
    if pm {
        Ok(raw.to_vec())
    } else if zero_one {
        Ok(raw.iter().map(|&b| if b == 0.0 { -1.0 } else { 1.0 }).collect())
    } else {
        Err(Error::Data(
            "labels must be {-1,+1} or {0,1} for binary classification".into(),
        ))
    }
}

/// Serializes a dataset back to the LIBSVM text format.
pub fn write_libsvm(data: &Dataset, mut out: impl Write) -> Result<()> {
    for (row, label) in data.rows.iter().zip(&data.labels) {
        write!(out, "{label}")?;
        for (idx, val) in row {
            write!(out, " {}:{}", idx + 1, val)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
