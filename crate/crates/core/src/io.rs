//! Grid fields as CSV (`x,y,re,im,mask`, rows ordered by `y` then `x`,
//! mask 1 for valid points, masked values written as `NaN`) and reports as JSON.

use num_complex::Complex64;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{ComplexGridField, GridSpec, RealGridField};

pub const CSV_HEADER: [&str; 5] = ["x", "y", "re", "im", "mask"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_complex_csv_to<W: Write>(writer: W, field: &ComplexGridField) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    let spec = field.spec();
    for k in 0..spec.len() {
        let (x, y) = spec.point(k);
        let valid = field.mask()[k];
        let v = if valid { field.values()[k] } else { Complex64::new(f64::NAN, f64::NAN) };
        w.write_record([fmt(x), fmt(y), fmt(v.re), fmt(v.im), (valid as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_complex_csv(path: &Path, field: &ComplexGridField) -> Result<()> {
    write_complex_csv_to(BufWriter::new(File::create(path)?), field)
}

/// A real field, written with `im = 0`.
pub fn write_real_csv(path: &Path, field: &RealGridField) -> Result<()> {
    write_complex_csv(path, &field.to_complex())
}

/// Reads a CSV grid field, recovering the grid from the coordinates.
pub fn read_complex_csv(path: &Path) -> Result<ComplexGridField> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_complex_csv_from(file)
}

pub fn read_complex_csv_from<R: std::io::Read>(reader: R) -> Result<ComplexGridField> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != CSV_HEADER {
        return Err(Error::Format(format!("expected header {}, found {}", CSV_HEADER.join(","), header.join(","))));
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Format(format!("row {}: missing column {}", n + 2, CSV_HEADER[i])))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {}: {e}", n + 2, CSV_HEADER[i])))
        };
        let mask = match rec.get(4).map(str::trim) {
            Some("1") | Some("true") => true,
            Some("0") | Some("false") => false,
            other => return Err(Error::Format(format!("row {}: bad mask {other:?}", n + 2))),
        };
        rows.push((num(0)?, num(1)?, Complex64::new(num(2)?, num(3)?), mask));
    }
    if rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let y0 = rows[0].1;
    let nx = rows.iter().take_while(|r| r.1 == y0).count();
    if rows.len() % nx != 0 {
        return Err(Error::Format(format!("{} rows is not a multiple of nx = {nx}", rows.len())));
    }
    let ny = rows.len() / nx;
    let spec = GridSpec::new(rows[0].0, rows[nx - 1].0, y0, rows[rows.len() - 1].1, nx, ny)?;
    let scale = 1e-9 * (1.0 + spec.x_max().abs().max(spec.x_min().abs()).max(spec.y_max().abs()).max(spec.y_min().abs()));
    let mut values = Vec::with_capacity(rows.len());
    let mut mask = Vec::with_capacity(rows.len());
    for (k, &(x, y, v, m)) in rows.iter().enumerate() {
        let (gx, gy) = spec.point(k);
        if (x - gx).abs() > scale || (y - gy).abs() > scale {
            return Err(Error::Format(format!("row {}: ({x}, {y}) is off the uniform grid", k + 2)));
        }
        let m = m && v.re.is_finite() && v.im.is_finite();
        values.push(if m { v } else { Complex64::default() });
        mask.push(m);
    }
    ComplexGridField::new(spec, values, mask)
}

/// Reads a CSV field and keeps the real part; a nonzero imaginary part on a
/// valid point is an error.
pub fn read_real_csv(path: &Path) -> Result<RealGridField> {
    let c = read_complex_csv(path)?;
    for (k, (v, m)) in c.values().iter().zip(c.mask()).enumerate() {
        if *m && v.im != 0.0 {
            return Err(Error::Format(format!("{}: row {} has imaginary part {}", path.display(), k + 2, v.im)));
        }
    }
    Ok(c.re())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
