//! CSV copies of coefficient tables: one row per degree, a `re_i`/`im_i`
//! column pair per series.

use std::path::Path;

use crate::spec::C;
use crate::CliError;

pub fn table(dir: &Path, name: &str, label: &str, rows: &[Vec<C>]) -> Result<(), CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(|e| io(&e))?;
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(|e| io(&e))?;
    let width = rows.first().map_or(0, Vec::len);
    let mut header = vec![label.to_string()];
    for i in 0..width {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    w.write_record(&header).map_err(|e| io(&e))?;
    for (k, row) in rows.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        for z in row {
            rec.push(format!("{:e}", z[0]));
            rec.push(format!("{:e}", z[1]));
        }
        w.write_record(&rec).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

/// Basis vectors stored column-wise as a table indexed by coordinate.
pub fn basis(dir: &Path, name: &str, vectors: &[Vec<C>]) -> Result<(), CliError> {
    let len = vectors.first().map_or(0, Vec::len);
    let rows: Vec<Vec<C>> = (0..len).map(|k| vectors.iter().map(|v| v[k]).collect()).collect();
    table(dir, name, "index", &rows)
}
