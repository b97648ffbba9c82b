use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Failure, ResultExt};

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).input_err(format!("creating output directory {}", dir.display()))
}

/// Write `rows` as CSV with a header row taken from the field names. An
/// empty table still gets its header.
pub fn write_csv<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let file = File::create(path).input_err(format!("creating {}", path.display()))?;
    if rows.is_empty() {
        let mut probe = csv::Writer::from_writer(Vec::new());
        probe
            .serialize(T::default())
            .compute_err(format!("writing {}", path.display()))?;
        let bytes = probe
            .into_inner()
            .map_err(|e| Failure::compute(e.to_string()))?;
        let text = String::from_utf8_lossy(&bytes);
        let header = text.lines().next().unwrap_or_default();
        let mut w = BufWriter::new(file);
        writeln!(w, "{header}").input_err(format!("writing {}", path.display()))?;
        return w.flush().input_err(format!("writing {}", path.display()));
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)
            .compute_err(format!("writing {}", path.display()))?;
    }
    w.flush().input_err(format!("writing {}", path.display()))
}

/// Write a CSV with an explicit header, for rows without a fixed schema.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), Failure> {
    let file = File::create(path).input_err(format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)
        .input_err(format!("writing {}", path.display()))?;
    for row in rows {
        w.write_record(row)
            .input_err(format!("writing {}", path.display()))?;
    }
    w.flush().input_err(format!("writing {}", path.display()))
}

/// `key = value` sidecar, one entry per line.
pub fn write_meta(path: &Path, entries: &[(String, String)]) -> Result<(), Failure> {
    let file = File::create(path).input_err(format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for (k, v) in entries {
        writeln!(w, "{k} = {v}").input_err(format!("writing {}", path.display()))?;
    }
    w.flush().input_err(format!("writing {}", path.display()))
}

/// Sidecar path next to a CSV: `x.csv` -> `x.meta.txt`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.txt")
}

pub fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}
