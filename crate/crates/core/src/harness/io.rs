//! Paired CSV input and output.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::marginals::PairedSample;

/// Reads two comma-separated numeric columns. Row order is preserved.
pub fn read_paired_csv(path: impl AsRef<Path>, has_header: bool) -> Result<PairedSample> {
    let file = File::open(path)?;
    parse_paired_csv(BufReader::new(file), has_header)
}

pub fn parse_paired_csv(reader: impl Read, has_header: bool) -> Result<PairedSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if i == 0 && has_header {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let field = |k: usize| -> Result<f64> {
            let text = &record[k];
            if text.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: format!("missing value in column {}", k + 1),
                });
            }
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("`{text}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite value `{text}`"),
                });
            }
            Ok(v)
        };
        let x = field(0)?;
        let y = field(1)?;
        xs.push(x);
        ys.push(y);
    }
    PairedSample::new(xs, ys)
}

/// Writes `x,y` rows using shortest round-trip float formatting.
pub fn write_paired_csv(
    writer: impl Write,
    xs: &[f64],
    ys: &[f64],
    header: Option<(&str, &str)>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    if let Some((hx, hy)) = header {
        wtr.write_record([hx, hy])?;
    }
    for (x, y) in xs.iter().zip(ys) {
        wtr.write_record([x.to_string(), y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_paired_csv_file(
    path: impl AsRef<Path>,
    xs: &[f64],
    ys: &[f64],
    header: Option<(&str, &str)>,
) -> Result<()> {
    write_paired_csv(File::create(path)?, xs, ys, header)
}
