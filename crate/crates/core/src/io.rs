//! CSV field format: one row per grid point in row-major order, integer
//! multi-index columns first, then the value columns (`value`, `re,im`, or
//! one column per vector component). Values are written with 17 significant
//! digits so a save/load cycle is bitwise exact.
//!
//! Wavefunctions use `N * d` index columns (`p{k}_i{a}`) over the full tensor.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CdftError, Result};
use crate::lattice::{ComplexField, Grid, ScalarField, VectorField};
use crate::manybody::WaveFunction;
use crate::scalar::{Complex, Real};

fn io_err(e: impl std::fmt::Display) -> CdftError {
    CdftError::Io(e.to_string())
}

fn fmt<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn index_header(d: usize, slots: usize) -> Vec<String> {
    if slots == 1 {
        (0..d).map(|a| format!("i{a}")).collect()
    } else {
        (0..slots).flat_map(|k| (0..d).map(move |a| format!("p{k}_i{a}"))).collect()
    }
}

/// Writes `rows` (row-major over `grid^slots`) under the index columns.
fn write_table<T: Real, W: Write>(
    grid: &Grid<T>,
    slots: usize,
    value_cols: &[String],
    rows: impl Iterator<Item = Vec<T>>,
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = index_header(grid.dim(), slots);
    header.extend(value_cols.iter().cloned());
    out.write_record(&header).map_err(io_err)?;
    let m = grid.len();
    let mut digits = vec![0usize; slots];
    let mut record = Vec::with_capacity(header.len());
    for vals in rows {
        record.clear();
        for &p in &digits {
            record.extend(grid.multi_index(p).into_iter().map(|i| i.to_string()));
        }
        record.extend(vals.into_iter().map(fmt));
        out.write_record(&record).map_err(io_err)?;
        for k in (0..slots).rev() {
            digits[k] += 1;
            if digits[k] < m {
                break;
            }
            digits[k] = 0;
        }
    }
    out.flush().map_err(io_err)
}

/// Reads and validates a table; returns the value columns per row.
fn read_table<T: Real, R: Read>(grid: &Grid<T>, slots: usize, n_values: usize, r: R) -> Result<Vec<Vec<T>>> {
    let d = grid.dim();
    let m = grid.len();
    let expected = m.checked_pow(slots as u32).ok_or(CdftError::BudgetExceeded { needed: usize::MAX, budget: usize::MAX })?;
    let n_idx = d * slots;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(|e| CdftError::ParseError { line: 1, message: e.to_string() })?.clone();
    if header.len() != n_idx + n_values {
        return Err(CdftError::ParseError {
            line: 1,
            message: format!("expected {} columns, found {}", n_idx + n_values, header.len()),
        });
    }
    let mut rows = Vec::with_capacity(expected);
    let mut digits = vec![0usize; slots];
    let mut found = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CdftError::ParseError {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| CdftError::ParseError { line, message };
        found += 1;
        if found > expected {
            continue;
        }
        let mut idx = rec.iter().take(n_idx);
        for &p in &digits {
            let want = grid.multi_index(p);
            for w in want {
                let s = idx.next().unwrap_or("");
                let got: usize = s.trim().parse().map_err(|_| bad(format!("bad index '{s}'")))?;
                if got != w {
                    return Err(bad(format!("index {got} out of row-major order (expected {w})")));
                }
            }
        }
        let vals = rec
            .iter()
            .skip(n_idx)
            .map(|s| s.trim().parse::<f64>().map(T::lit).map_err(|_| bad(format!("bad value '{s}'"))))
            .collect::<Result<Vec<T>>>()?;
        rows.push(vals);
        for k in (0..slots).rev() {
            digits[k] += 1;
            if digits[k] < m {
                break;
            }
            digits[k] = 0;
        }
    }
    if found != expected {
        return Err(CdftError::ShapeMismatch { expected, found });
    }
    Ok(rows)
}

pub fn write_scalar_field<T: Real, W: Write>(f: &ScalarField<T>, w: W) -> Result<()> {
    write_table(f.grid(), 1, &["value".into()], f.values().iter().map(|&v| vec![v]), w)
}

pub fn read_scalar_field<T: Real, R: Read>(grid: &Grid<T>, r: R) -> Result<ScalarField<T>> {
    let rows = read_table(grid, 1, 1, r)?;
    ScalarField::new(grid.clone(), rows.into_iter().map(|v| v[0]).collect())
}

pub fn write_complex_field<T: Real, W: Write>(f: &ComplexField<T>, w: W) -> Result<()> {
    write_table(f.grid(), 1, &["re".into(), "im".into()], f.values().iter().map(|z| vec![z.re, z.im]), w)
}

pub fn read_complex_field<T: Real, R: Read>(grid: &Grid<T>, r: R) -> Result<ComplexField<T>> {
    let rows = read_table(grid, 1, 2, r)?;
    ComplexField::new(grid.clone(), rows.into_iter().map(|v| Complex::new(v[0], v[1])).collect())
}

pub fn write_vector_field<T: Real, W: Write>(f: &VectorField<T>, w: W) -> Result<()> {
    let d = f.grid().dim();
    let cols: Vec<String> = (0..d).map(|a| format!("v{a}")).collect();
    write_table(f.grid(), 1, &cols, f.values().chunks(d).map(|c| c.to_vec()), w)
}

pub fn read_vector_field<T: Real, R: Read>(grid: &Grid<T>, r: R) -> Result<VectorField<T>> {
    let rows = read_table(grid, 1, grid.dim(), r)?;
    VectorField::new(grid.clone(), rows.concat())
}

pub fn write_wavefunction<T: Real, W: Write>(psi: &WaveFunction<T>, w: W) -> Result<()> {
    write_table(
        psi.grid(),
        psi.n_particles(),
        &["re".into(), "im".into()],
        psi.amplitudes().iter().map(|z| vec![z.re, z.im]),
        w,
    )
}

/// Reads amplitudes without renormalizing (the stored norm is kept).
pub fn read_wavefunction<T: Real, R: Read>(grid: &Grid<T>, n: usize, r: R) -> Result<WaveFunction<T>> {
    let rows = read_table(grid, n, 2, r)?;
    WaveFunction::new(grid, n, rows.into_iter().map(|v| Complex::new(v[0], v[1])).collect())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| io_err(format!("{}: {e}", path.display())))
}

pub fn save_scalar_field<T: Real>(f: &ScalarField<T>, path: impl AsRef<Path>) -> Result<()> {
    write_scalar_field(f, create(path.as_ref())?)
}

pub fn load_scalar_field<T: Real>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<ScalarField<T>> {
    read_scalar_field(grid, open(path.as_ref())?)
}

pub fn save_complex_field<T: Real>(f: &ComplexField<T>, path: impl AsRef<Path>) -> Result<()> {
    write_complex_field(f, create(path.as_ref())?)
}

pub fn load_complex_field<T: Real>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<ComplexField<T>> {
    read_complex_field(grid, open(path.as_ref())?)
}

pub fn save_vector_field<T: Real>(f: &VectorField<T>, path: impl AsRef<Path>) -> Result<()> {
    write_vector_field(f, create(path.as_ref())?)
}

pub fn load_vector_field<T: Real>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<VectorField<T>> {
    read_vector_field(grid, open(path.as_ref())?)
}

pub fn save_wavefunction<T: Real>(psi: &WaveFunction<T>, path: impl AsRef<Path>) -> Result<()> {
    write_wavefunction(psi, create(path.as_ref())?)
}

pub fn load_wavefunction<T: Real>(grid: &Grid<T>, n: usize, path: impl AsRef<Path>) -> Result<WaveFunction<T>> {
    read_wavefunction(grid, n, open(path.as_ref())?)
}
