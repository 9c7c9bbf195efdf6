//! CSV tables at 17 significant digits with `# key = value` header lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered `key = value` pairs written ahead of a table.
pub type Provenance = Vec<(String, String)>;

/// Round-trip exact formatting with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `# key = value` lines, a header row and the numeric rows.
pub fn write_table<I>(path: &Path, provenance: &Provenance, headers: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = BufWriter::new(File::create(path)?);
    for (k, v) in provenance {
        for (i, line) in v.lines().enumerate() {
            if i == 0 {
                writeln!(out, "# {k} = {line}")?;
            } else {
                writeln!(out, "#   {line}")?;
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::InvalidArgument(format!(
                "row has {} columns, header has {}",
                row.len(),
                headers.len()
            )));
        }
        w.write_record(row.iter().map(|&x| format_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads two named columns from a table written by [`write_table`] or any
/// comma-separated file with a header row; `#` lines are skipped.
pub fn read_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rd.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("column `{name}` missing")))
    };
    let (ix, iy) = (find(x)?, find(y)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad number in row {:?}", rec.position())))
        };
        xs.push(parse(ix)?);
        ys.push(parse(iy)?);
    }
    Ok((xs, ys))
}
