//! Plain-text field dumps.
//!
//! ```text
//! # torus-field v1, dim=2, N=64
//! i,j,x,y,value
//! 0,0,0.0000000000000000e0,0.0000000000000000e0,1.2500000000000000e-1
//! ```
//! Values carry 17 significant digits, which round-trips every `f64`.

use std::io::{BufRead, Write};
use std::path::Path;

use super::field::ScalarField;
use super::grid::PeriodicGrid;
use crate::error::{Error, Result};

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let g = field.grid();
    writeln!(w, "# torus-field v1, dim={}, N={}", g.dim(), g.n())?;
    if g.dim() == 1 {
        writeln!(w, "i,x,value")?;
    } else {
        writeln!(w, "i,j,x,y,value")?;
    }
    for (k, v) in field.values().iter().enumerate() {
        let [i, j] = g.multi_index(k);
        let x = g.coord(k);
        if g.dim() == 1 {
            writeln!(w, "{},{},{}", i, fmt_f64(x[0]), fmt_f64(*v))?;
        } else {
            writeln!(w, "{},{},{},{},{}", i, j, fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(*v))?;
        }
    }
    Ok(())
}

/// Write a boolean mask as a 0/1 field.
pub fn write_mask<W: Write>(grid: &PeriodicGrid, mask: &[bool], w: W) -> Result<()> {
    let values = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    write_field(&ScalarField::new(*grid, values)?, w)
}

pub fn read_field<R: BufRead>(r: R, origin: &Path) -> Result<ScalarField> {
    let bad = |reason: String| Error::FieldFormat { path: origin.to_path_buf(), reason };
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let rest = header
        .strip_prefix("# torus-field v1,")
        .ok_or_else(|| bad(format!("unexpected header `{header}`")))?;
    let mut dim = None;
    let mut n = None;
    for part in rest.split(',') {
        let part = part.trim();
        if let Some(v) = part.strip_prefix("dim=") {
            dim = v.parse::<usize>().ok();
        } else if let Some(v) = part.strip_prefix("N=") {
            n = v.parse::<usize>().ok();
        }
    }
    let (dim, n) = match (dim, n) {
        (Some(d), Some(n)) => (d, n),
        _ => return Err(bad("header lacks dim or N".into())),
    };
    let grid = PeriodicGrid::new(dim, n)?;
    let columns = if dim == 1 { 3 } else { 5 };
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('i') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != columns {
            return Err(bad(format!("expected {columns} columns, got `{line}`")));
        }
        let idx = |s: &str| s.trim().parse::<usize>().map_err(|e| bad(format!("{e}: `{line}`")));
        let i = idx(cols[0])?;
        let j = if dim == 2 { idx(cols[1])? } else { 0 };
        if i >= n || j >= n {
            return Err(bad(format!("node index out of range in `{line}`")));
        }
        let v: f64 = cols[columns - 1].trim().parse().map_err(|e| bad(format!("{e}: `{line}`")))?;
        values[grid.index(i as isize, j as isize)] = v;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(bad(format!("expected {} rows, found {seen}", grid.len())));
    }
    ScalarField::new(grid, values)
}

pub fn save_field(field: &ScalarField, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f), path)
}
