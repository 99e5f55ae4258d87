//! JSON formats for problems, spectral data and matrices, and a writer that
//! prints every float with 17 significant digits.
//!
//! Matrices are written as nested rows of `[re, im]` pairs. On input a
//! matrix may also be a flat row-major list of `m²` entries, and an entry
//! may be a bare real number.

use std::io::Write;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::dataset::{SpectralDataSet, SpectralEntry};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::problem::{validate_boundary, ProblemL, SigmaField, SpectralIndex};

/// Compact JSON formatter writing `f64` as `{:.16e}` (17 significant digits).
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize with 17 significant digits per float and a trailing newline.
pub fn to_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    serde::Serialize::serialize(value, &mut ser).expect("serializing a JSON value cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

pub fn matrix_to_json(a: &CMat) -> Value {
    Value::Array(
        (0..a.nrows())
            .map(|i| {
                Value::Array(
                    (0..a.ncols())
                        .map(|j| json!([a[(i, j)].re, a[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn entry_from_json(v: &Value, what: &str) -> Result<Complex64> {
    match v {
        Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => {
            let re = p[0]
                .as_f64()
                .ok_or_else(|| Error::InvalidData(format!("{what}: bad real part")))?;
            let im = p[1]
                .as_f64()
                .ok_or_else(|| Error::InvalidData(format!("{what}: bad imaginary part")))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(Error::InvalidData(format!(
            "{what}: entry must be a number or [re, im]"
        ))),
    }
}

/// Parse an `m×m` matrix given as nested rows or a flat list.
pub fn matrix_from_json(v: &Value, m: usize, what: &str) -> Result<CMat> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::InvalidData(format!("{what}: expected an array")))?;
    let is_rows = arr.len() == m
        && arr.iter().all(|r| {
            r.as_array()
                .is_some_and(|x| x.len() == m && x.iter().all(|e| e.is_array() || e.is_number()))
        });
    if is_rows {
        let mut a = CMat::zeros(m, m);
        for (i, row) in arr.iter().enumerate() {
            for (j, e) in row.as_array().expect("checked").iter().enumerate() {
                a[(i, j)] = entry_from_json(e, what)?;
            }
        }
        return Ok(a);
    }
    if arr.len() == m * m {
        let mut a = CMat::zeros(m, m);
        for (idx, e) in arr.iter().enumerate() {
            a[(idx / m, idx % m)] = entry_from_json(e, what)?;
        }
        return Ok(a);
    }
    Err(Error::Dimension(format!(
        "{what}: expected a {m}x{m} matrix"
    )))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::InvalidData(format!("missing field \"{key}\"")))
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    field(v, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::InvalidData(format!("field \"{key}\" must be a nonnegative integer")))
}

fn optional_matrix(v: &Value, key: &str, m: usize) -> Result<CMat> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(CMat::zeros(m, m)),
        Some(x) => matrix_from_json(x, m, key),
    }
}

/// Problem file: `{ "m", "N", "sigma": [cell matrices], "T1", "T2", "H1", "H2" }`.
/// Missing `H1`, `H2` default to zero; missing `sigma` means `σ = 0` on `N` cells.
pub fn problem_from_json(v: &Value) -> Result<ProblemL> {
    let m = usize_field(v, "m")?;
    if m == 0 {
        return Err(Error::Dimension("m must be positive".into()));
    }
    let t1 = matrix_from_json(field(v, "T1")?, m, "T1")?;
    let t2 = matrix_from_json(field(v, "T2")?, m, "T2")?;
    let h1 = optional_matrix(v, "H1", m)?;
    let h2 = optional_matrix(v, "H2", m)?;
    let boundary = validate_boundary(t1, t2, h1, h2, m)?;
    let sigma = match v.get("sigma") {
        None | Some(Value::Null) => {
            SigmaField::zero(m, v.get("N").and_then(Value::as_u64).unwrap_or(1) as usize)
        }
        Some(s) => {
            let cells = s
                .as_array()
                .ok_or_else(|| Error::InvalidData("sigma must be a list of cells".into()))?;
            if let Some(n) = v.get("N").and_then(Value::as_u64) {
                if n as usize != cells.len() {
                    return Err(Error::Dimension(format!(
                        "N = {n} but sigma has {} cells",
                        cells.len()
                    )));
                }
            }
            let mats = cells
                .iter()
                .enumerate()
                .map(|(i, c)| matrix_from_json(c, m, &format!("sigma cell {i}")))
                .collect::<Result<Vec<_>>>()?;
            SigmaField::new(m, mats)?
        }
    };
    ProblemL::new(sigma, boundary)
}

pub fn problem_to_json(p: &ProblemL) -> Value {
    let b = &p.boundary;
    json!({
        "m": b.m,
        "N": p.sigma.n_cells(),
        "sigma": p.sigma.cells().iter().map(matrix_to_json).collect::<Vec<_>>(),
        "T1": matrix_to_json(&b.t1),
        "T2": matrix_to_json(&b.t2),
        "H1": matrix_to_json(&b.h1),
        "H2": matrix_to_json(&b.h2),
    })
}

/// Spectral-data file: `{ "m", "entries": [{ "n", "k", "lambda", "multiplicity", "alpha" }] }`.
pub fn dataset_to_json(d: &SpectralDataSet) -> Value {
    json!({
        "m": d.m,
        "entries": d.entries.iter().map(|e| json!({
            "n": e.index.n,
            "k": e.index.k,
            "lambda": e.lambda,
            "multiplicity": e.multiplicity,
            "alpha": matrix_to_json(&e.alpha),
        })).collect::<Vec<_>>(),
    })
}

pub fn dataset_from_json(v: &Value) -> Result<SpectralDataSet> {
    let m = usize_field(v, "m")?;
    let list = field(v, "entries")?
        .as_array()
        .ok_or_else(|| Error::InvalidData("entries must be a list".into()))?;
    let mut entries = Vec::with_capacity(list.len());
    for (i, e) in list.iter().enumerate() {
        let lambda = field(e, "lambda")?
            .as_f64()
            .ok_or_else(|| Error::InvalidData(format!("entry {i}: lambda must be a number")))?;
        entries.push(SpectralEntry {
            index: SpectralIndex::new(usize_field(e, "n")?, usize_field(e, "k")?),
            lambda,
            alpha: matrix_from_json(field(e, "alpha")?, m, &format!("alpha of entry {i}"))?,
            multiplicity: usize_field(e, "multiplicity")?,
        });
    }
    SpectralDataSet::new(m, entries)
}

/// Flat table `n,k,lambda,mult,alpha_re_ij...,alpha_im_ij...` (row-major).
pub fn dataset_to_csv(d: &SpectralDataSet) -> String {
    use std::fmt::Write as _;
    let m = d.m;
    let mut out = String::from("n,k,lambda,mult");
    for i in 0..m {
        for j in 0..m {
            let _ = write!(
                out,
                ",alpha_re_{}{},alpha_im_{}{}",
                i + 1,
                j + 1,
                i + 1,
                j + 1
            );
        }
    }
    out.push('\n');
    for e in &d.entries {
        let _ = write!(
            out,
            "{},{},{:.16e},{}",
            e.index.n, e.index.k, e.lambda, e.multiplicity
        );
        for i in 0..m {
            for j in 0..m {
                let z = e.alpha[(i, j)];
                let _ = write!(out, ",{:.16e},{:.16e}", z.re, z.im);
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_json_file(path: &std::path::Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
