//! CSV emission and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use regge_core::{CMatrix, Complex64, CrossSectionRecord, Trajectory};

use crate::error::CliError;

/// `x` with `digits` significant digits in scientific notation.
pub fn num(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{:.*e}", digits - 1, x)
    } else {
        x.to_string()
    }
}

/// A CSV document built in memory, written once.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    digits: usize,
}

impl Table {
    pub fn new(header: &[String], digits: usize) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer, digits }
    }

    pub fn row(&mut self, fields: Vec<Field>) {
        let digits = self.digits;
        let text: Vec<String> = fields
            .into_iter()
            .map(|f| match f {
                Field::Float(x) => num(x, digits),
                Field::Int(i) => i.to_string(),
                Field::Empty => String::new(),
            })
            .collect();
        self.writer.write_record(&text).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flushing to memory")
    }
}

pub enum Field {
    Float(f64),
    Int(usize),
    Empty,
}

fn push_matrix(fields: &mut Vec<Field>, m: &CMatrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            fields.push(Field::Float(m[(i, j)].re));
            fields.push(Field::Float(m[(i, j)].im));
        }
    }
}

/// `re_<name>_<i>_<j>, im_<name>_<i>_<j>` in row-major order, 1-based.
fn matrix_header(name: &str, n: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(2 * n * n);
    for i in 1..=n {
        for j in 1..=n {
            h.push(format!("re_{name}_{i}_{j}"));
            h.push(format!("im_{name}_{i}_{j}"));
        }
    }
    h
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// One row per pole: `E, Re λ̄, Im λ̄, iterations, certificate, ρ` (row-major,
/// empty when residues were not computed).
pub fn trajectory_csv(t: &Trajectory, channels: usize, digits: usize) -> Vec<u8> {
    let mut header = strings(&["E", "re_lambda_bar", "im_lambda_bar", "iterations", "certificate"]);
    header.extend(matrix_header("rho", channels));
    let mut table = Table::new(&header, digits);
    for r in &t.records {
        let mut fields = vec![
            Field::Float(r.energy),
            Field::Float(r.lambda_bar.re),
            Field::Float(r.lambda_bar.im),
            Field::Int(r.iterations),
            Field::Float(r.certificate),
        ];
        match &r.residues {
            Some(rho) => push_matrix(&mut fields, rho),
            None => fields.extend((0..2 * channels * channels).map(|_| Field::Empty)),
        }
        table.row(fields);
    }
    table.into_bytes()
}

pub fn crossings_csv(t: &Trajectory, digits: usize) -> Vec<u8> {
    let mut table = Table::new(&strings(&["E_a", "E_b", "re_lambda_x", "im_lambda_x"]), digits);
    for x in &t.self_intersections {
        table.row(vec![
            Field::Float(x.energies.0),
            Field::Float(x.energies.1),
            Field::Float(x.point.re),
            Field::Float(x.point.im),
        ]);
    }
    table.into_bytes()
}

/// Channel indices are written 1-based.
pub fn xsec_csv(records: &[CrossSectionRecord], digits: usize) -> Vec<u8> {
    let header = strings(&[
        "E",
        "n",
        "n_prime",
        "sigma",
        "sigma_res",
        "background",
        "j_max_used",
        "truncation_error_estimate",
    ]);
    let mut table = Table::new(&header, digits);
    for r in records {
        table.row(vec![
            Field::Float(r.energy),
            Field::Int(r.n + 1),
            Field::Int(r.n_prime + 1),
            Field::Float(r.sigma),
            Field::Float(r.sigma_res),
            Field::Float(r.background),
            Field::Int(r.j_max_used),
            Field::Float(r.truncation_error_estimate),
        ]);
    }
    table.into_bytes()
}

pub struct ScanRow {
    pub energy: f64,
    pub lambda: Complex64,
    pub delta: Complex64,
    pub s: CMatrix,
}

pub fn scan_csv(rows: &[ScanRow], channels: usize, digits: usize) -> Vec<u8> {
    let mut header = strings(&["E", "re_lambda", "im_lambda", "re_delta", "im_delta"]);
    header.extend(matrix_header("S", channels));
    let mut table = Table::new(&header, digits);
    for r in rows {
        let mut fields = vec![
            Field::Float(r.energy),
            Field::Float(r.lambda.re),
            Field::Float(r.lambda.im),
            Field::Float(r.delta.re),
            Field::Float(r.delta.im),
        ];
        push_matrix(&mut fields, &r.s);
        table.row(fields);
    }
    table.into_bytes()
}

/// Write `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
    Ok(path)
}
