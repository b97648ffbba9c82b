//! Input discovery. A file is one instrument-day named by its stem. A
//! directory may hold such files and subdirectories; each subdirectory is one
//! instrument whose files are its days in file-name order.

use std::fs;
use std::path::{Path, PathBuf};

use jumpvar_core::marketdata::{
    aggregate_by_millisecond, clip_session, parse_ticks, SessionWindow, TickSeries,
};

use crate::config::DataSection;
use crate::error::{Failure, ResultExt};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instrument {
    pub id: String,
    pub days: Vec<PathBuf>,
}

fn is_data_file(p: &Path) -> bool {
    p.is_file() && p.extension().is_some_and(|e| e == "csv" || e == "txt")
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .input_err(format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

pub fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn collect_inputs(path: &Path) -> Result<Vec<Instrument>, Failure> {
    if path.is_file() {
        return Ok(vec![Instrument {
            id: stem(path),
            days: vec![path.to_path_buf()],
        }]);
    }
    if !path.is_dir() {
        return Err(Failure::input(format!(
            "input {} does not exist",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for entry in sorted_entries(path)? {
        if entry.is_dir() {
            let days: Vec<PathBuf> = sorted_entries(&entry)?
                .into_iter()
                .filter(|p| is_data_file(p))
                .collect();
            if !days.is_empty() {
                out.push(Instrument {
                    id: stem(&entry),
                    days,
                });
            }
        } else if is_data_file(&entry) {
            out.push(Instrument {
                id: stem(&entry),
                days: vec![entry],
            });
        }
    }
    if out.is_empty() {
        return Err(Failure::input(format!(
            "zero parseable rows: no data files under {}",
            path.display()
        )));
    }
    Ok(out)
}

/// Parse one day, restrict it to the session and optionally collapse
/// same-millisecond records.
pub fn load_day(
    path: &Path,
    data: &DataSection,
    session: &SessionWindow,
) -> Result<TickSeries, Failure> {
    let parsed = parse_ticks(path, &data.schema).input_err(path.display())?;
    if parsed.skipped > 0 {
        eprintln!(
            "{}: skipped {} unparseable rows",
            path.display(),
            parsed.skipped
        );
    }
    let clipped = clip_session(&parsed.value, session);
    if clipped.empty {
        return Err(Failure::input(format!(
            "{}: zero parseable rows inside the session",
            path.display()
        )));
    }
    Ok(if data.aggregate_ms {
        aggregate_by_millisecond(&clipped.value)
    } else {
        clipped.value
    })
}
