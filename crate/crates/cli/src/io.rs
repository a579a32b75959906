//! CSV ingestion and emission of cycle tables.
//!
//! One row per cycle, in temporal order. An optional first row names the
//! grid fractions (`t=0`, `t=0.25`, … or bare numbers following a
//! non-numeric label). Rows of differing length are treated as cycles at
//! native sampling and resampled linearly onto a uniform grid.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use fdrel_core::{FunctionalSeries, Grid};

use crate::error::{CliError, Result};

pub const DEFAULT_GRID_SIZE: usize = 100;

/// Raw rows of a cycle file.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleTable {
    pub grid: Option<Vec<f64>>,
    pub rows: Vec<Vec<f64>>,
}

impl CycleTable {
    pub fn is_rectangular(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].len() == w[1].len())
    }
}

fn parse_grid_label(cell: &str) -> Option<f64> {
    let s = cell.trim();
    let s = s
        .strip_prefix("t=")
        .or_else(|| s.strip_prefix('t'))
        .unwrap_or(s);
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn read_cycle_table(path: &Path) -> Result<CycleTable> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut grid = None;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let first_data_row = rows.is_empty() && grid.is_none();
        let parsed: Vec<Option<f64>> = record.iter().map(parse_cell).collect();
        if first_data_row && parsed.iter().any(Option::is_none) {
            let labels: Option<Vec<f64>> = record.iter().map(parse_grid_label).collect();
            grid = Some(labels.unwrap_or_default());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (col, (cell, value)) in record.iter().zip(parsed).enumerate() {
            match value {
                Some(v) => row.push(v),
                None => {
                    return Err(CliError::Parse {
                        path: path.to_path_buf(),
                        row: line + 1,
                        column: col + 1,
                        message: format!("not a finite number: {cell:?}"),
                    })
                }
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(CliError::Table {
            path: path.to_path_buf(),
            message: format!("need at least 2 cycles, found {}", rows.len()),
        });
    }
    Ok(CycleTable {
        grid: grid.filter(|g| !g.is_empty()),
        rows,
    })
}

/// Linear interpolation of `values`, taken as equally spaced on `[0, 1]`,
/// onto `p` equally spaced points.
pub fn resample_linear(values: &[f64], p: usize) -> Vec<f64> {
    let m = values.len();
    assert!(m >= 2 && p >= 2);
    (0..p)
        .map(|i| {
            let pos = i as f64 / (p - 1) as f64 * (m - 1) as f64;
            let lo = (pos.floor() as usize).min(m - 2);
            let frac = pos - lo as f64;
            values[lo] + frac * (values[lo + 1] - values[lo])
        })
        .collect()
}

/// Reads a cycle file into a series.
///
/// Rectangular input is passed through unless `grid_size` asks for a
/// different width; everything else is resampled to `grid_size` (default
/// [`DEFAULT_GRID_SIZE`]) points.
pub fn ingest_csv(path: &Path, grid_size: Option<usize>) -> Result<FunctionalSeries> {
    let table = read_cycle_table(path)?;
    table_to_series(path, table, grid_size)
}

pub fn table_to_series(path: &Path, table: CycleTable, grid_size: Option<usize>) -> Result<FunctionalSeries> {
    let width = table.rows[0].len();
    if table.is_rectangular() && grid_size.map_or(true, |p| p == width) {
        let grid = match table.grid {
            Some(points) if points.len() == width => Grid::new(points)?,
            _ => Grid::uniform(width)?,
        };
        let data = table.rows.into_iter().flatten().collect();
        return Ok(FunctionalSeries::from_rows(grid, data)?);
    }
    let p = grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    if p < 2 {
        return Err(CliError::Argument(format!("grid size must be at least 2, got {p}")));
    }
    let mut data = Vec::with_capacity(table.rows.len() * p);
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() < 2 {
            return Err(CliError::Table {
                path: path.to_path_buf(),
                message: format!("cycle {} has {} samples, resampling needs 2", i + 1, row.len()),
            });
        }
        data.extend(resample_linear(row, p));
    }
    Ok(FunctionalSeries::from_rows(Grid::uniform(p)?, data)?)
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// Writes a header row and numeric rows; `None` cells are left empty.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// One row per curve, headed by `t=<grid point>` labels.
pub fn write_series_csv(path: &Path, x: &FunctionalSeries) -> Result<()> {
    let header: Vec<String> = x.grid().points().iter().map(|t| format!("t={t}")).collect();
    write_table(path, &header, x.rows().map(|r| r.iter().map(|&v| Some(v)).collect()))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
