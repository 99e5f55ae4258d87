//! The vector sequence `Y_nk = (cos(ρx)T1 + sin(ρx)T1⊥)E_nk` built from
//! spectral data, and numerical Riesz-basis diagnostics (Gram extremes and
//! quadratic closeness).
//!
//! `E_nk` runs through an orthonormal basis of `Ran B_nk`, with
//! `B_nk = (π/2)T_nk⁻¹ α_nk T_nk⁻¹` and `T_nk = T1 + ρ_nk T1⊥` (`I` at `ρ = 0`).
//! Negative eigenvalues `λ = -κ²` use `κ` in `T_nk` and the hyperbolic
//! functions in `Y_nk`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dataset::SpectralDataSet;
use crate::error::{Error, Result};
use crate::linalg::{eye, hermitian_eigen, op_norm, CMat};
use crate::problem::{ProblemL, SpectralIndex};
use crate::propagator::{phi_initial, sample_solution};

/// Relative eigenvalue threshold for `Ran B_nk`.
const RANGE_TOL: f64 = 1e-8;
/// Smallest accepted grid size.
pub const MIN_GRID: usize = 1024;

/// One member of a family: index, unit vector `E_nk`, and samples of the
/// vector function on the uniform grid (column `j` is the value at `x_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEntry {
    pub index: SpectralIndex,
    pub e: CMat,
    pub samples: CMat,
}

/// Sampled vector functions on `K + 1` uniform nodes of `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFamily {
    pub m: usize,
    pub k: usize,
    pub entries: Vec<BasisEntry>,
}

impl BasisFamily {
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.k)
    }

    /// Entries with `n ≤ n_max`.
    pub fn truncated(&self, n_max: usize) -> BasisFamily {
        BasisFamily {
            m: self.m,
            k: self.k,
            entries: self
                .entries
                .iter()
                .filter(|e| e.index.n <= n_max)
                .cloned()
                .collect(),
        }
    }

    /// CSV of one entry: `x, re_1, im_1, ..., re_m, im_m`.
    pub fn entry_csv(&self, i: usize) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("x");
        for c in 1..=self.m {
            let _ = write!(out, ",re_{c},im_{c}");
        }
        out.push('\n');
        let s = &self.entries[i].samples;
        for (j, x) in self.grid().iter().enumerate() {
            let _ = write!(out, "{x:.16e}");
            for c in 0..self.m {
                let _ = write!(out, ",{:.16e},{:.16e}", s[(c, j)].re, s[(c, j)].im);
            }
            out.push('\n');
        }
        out
    }
}

fn uniform_grid(k: usize) -> Vec<f64> {
    (0..=k)
        .map(|j| if j == k { PI } else { PI * j as f64 / k as f64 })
        .collect()
}

fn trapezoid_weights(k: usize) -> Vec<f64> {
    let h = PI / k as f64;
    (0..=k)
        .map(|j| if j == 0 || j == k { h / 2.0 } else { h })
        .collect()
}

/// `T_nk` for an eigenvalue: `T1 + |ρ|T1⊥`, or `I` at `λ = 0`.
fn t_matrix(t1: &CMat, lambda: f64) -> CMat {
    let m = t1.nrows();
    if lambda == 0.0 {
        return eye(m);
    }
    let rho = lambda.abs().sqrt();
    t1 + (eye(m) - t1).scale(rho)
}

fn t_matrix_inverse(t1: &CMat, lambda: f64) -> CMat {
    let m = t1.nrows();
    if lambda == 0.0 {
        return eye(m);
    }
    let rho = lambda.abs().sqrt();
    t1 + (eye(m) - t1).scale(1.0 / rho)
}

/// `B = (π/2) T⁻¹ α T⁻¹` for one entry.
pub fn b_matrix(t1: &CMat, lambda: f64, alpha: &CMat) -> CMat {
    let ti = t_matrix_inverse(t1, lambda);
    (&ti * alpha * &ti).scale(PI / 2.0)
}

/// Make the first component of largest modulus real and positive.
fn fix_phase(v: &mut CMat) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for i in 0..v.nrows() {
        let a = v[(i, 0)].norm();
        if a > best_abs * (1.0 + 1e-9) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let ph = v[(best, 0)] / best_abs;
        let c = ph.conj();
        v.apply(|z| *z *= c);
    }
}

/// Orthonormal `E_nk` per entry: for each group, the eigenvectors of `B`
/// above `1e-8‖B‖`, by descending eigenvalue, with the phase convention of
/// [`fix_phase`]. A truncated last group takes the leading vectors.
#[allow(non_snake_case)]
pub fn select_E(data: &SpectralDataSet, t1: &CMat) -> Result<Vec<CMat>> {
    let m = data.m;
    let mut out = vec![CMat::zeros(m, 1); data.len()];
    for group in &data.groups {
        let lead = &data.entries[group[0]];
        let b = b_matrix(t1, lead.lambda, &lead.alpha);
        let (vals, vecs) = hermitian_eigen(&b);
        let norm = op_norm(&b);
        let count = vals.iter().filter(|&&v| v > RANGE_TOL * norm).count();
        if norm == 0.0 || count != lead.multiplicity {
            return Err(Error::RankMismatch(format!(
                "rank of B at n = {} is {count}, multiplicity {}",
                lead.index.n, lead.multiplicity
            )));
        }
        for (slot, &pos) in group.iter().enumerate() {
            let mut col = vecs.columns(slot, 1).into_owned();
            fix_phase(&mut col);
            out[pos] = col;
        }
    }
    Ok(out)
}

/// Values `(c(x)T1 + s(x)T1⊥)E` on the grid, with `(c, s) = (cos ρx, sin ρx)`,
/// `(cosh κx, sinh κx)` for `λ = -κ²`, and `(1, x)` at `λ = 0`.
fn y_samples(t1: &CMat, lambda: f64, e: &CMat, grid: &[f64]) -> CMat {
    let m = t1.nrows();
    let a = t1 * e;
    let b = (eye(m) - t1) * e;
    let rho = lambda.abs().sqrt();
    let mut s = CMat::zeros(m, grid.len());
    for (j, &x) in grid.iter().enumerate() {
        let (c, sn) = if lambda > 0.0 {
            ((rho * x).cos(), (rho * x).sin())
        } else if lambda < 0.0 {
            ((rho * x).cosh(), (rho * x).sinh())
        } else {
            (1.0, x)
        };
        for i in 0..m {
            s[(i, j)] = a[(i, 0)] * c + b[(i, 0)] * sn;
        }
    }
    s
}

fn check_grid(k: usize) -> Result<()> {
    if k < MIN_GRID {
        return Err(Error::InvalidData(format!(
            "grid size {k} below {MIN_GRID}"
        )));
    }
    Ok(())
}

/// The family `{Y_nk}` sampled on `K + 1` uniform nodes.
#[allow(non_snake_case)]
pub fn build_Y(data: &SpectralDataSet, t1: &CMat, k: usize) -> Result<BasisFamily> {
    check_grid(k)?;
    let es = select_E(data, t1)?;
    let grid = uniform_grid(k);
    let entries = data
        .entries
        .par_iter()
        .zip(es.par_iter())
        .map(|(d, e)| BasisEntry {
            index: d.index,
            e: e.clone(),
            samples: y_samples(t1, d.lambda, e, &grid),
        })
        .collect();
    Ok(BasisFamily {
        m: data.m,
        k,
        entries,
    })
}

/// The eigenfunctions `φ(x, λ_nk) T_nk E_nk` of `problem`, with `E_nk` from
/// [`select_E`] applied to `data`.
pub fn eigenfunction_family(
    problem: &ProblemL,
    data: &SpectralDataSet,
    k: usize,
) -> Result<BasisFamily> {
    check_grid(k)?;
    if problem.m() != data.m {
        return Err(Error::Dimension("problem and data sizes differ".into()));
    }
    let t1 = &problem.boundary.t1;
    let es = select_E(data, t1)?;
    let grid = uniform_grid(k);
    let init = phi_initial(problem);
    let entries = data
        .entries
        .par_iter()
        .zip(es.par_iter())
        .map(|(d, e)| {
            let te = t_matrix(t1, d.lambda) * e;
            let states =
                sample_solution(problem, Complex64::new(d.lambda, 0.0), &init, &grid[1..])?;
            let mut s = CMat::zeros(data.m, grid.len());
            s.column_mut(0).copy_from(&(&init.y * &te).column(0));
            for (j, st) in states.iter().enumerate() {
                s.column_mut(j + 1).copy_from(&(&st.y * &te).column(0));
            }
            Ok(BasisEntry {
                index: d.index,
                e: e.clone(),
                samples: s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisFamily {
        m: data.m,
        k,
        entries,
    })
}

/// Gram matrix `(Y_i, Y_j)` by the composite trapezoid rule.
pub fn gram(family: &BasisFamily) -> CMat {
    let w = trapezoid_weights(family.k);
    let rows = family.m * (family.k + 1);
    let n = family.entries.len();
    let mut a = CMat::zeros(rows, n);
    for (c, e) in family.entries.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            let sw = wj.sqrt();
            for i in 0..family.m {
                a[(j * family.m + i, c)] = e.samples[(i, j)] * sw;
            }
        }
    }
    a.adjoint() * a
}

/// Extreme eigenvalues of the Gram matrix of the entries with `n ≤ n_max`.
pub fn frame_bounds(family: &BasisFamily, n_max: usize) -> (f64, f64) {
    let g = gram(&family.truncated(n_max));
    let (vals, _) = hermitian_eigen(&g);
    match (vals.last(), vals.first()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    }
}

/// `Σ‖Y_nk − Y⁰_nk‖²` with per-`n` contributions and partial sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Closeness {
    pub total: f64,
    pub per_n: Vec<(usize, f64)>,
    pub partial_sums: Vec<(usize, f64)>,
    /// Sum over `(N, 2N]` against the sum over `(N/2, N]`, `N = n_max/2`.
    pub tail_recent: f64,
    pub tail_previous: f64,
}

pub fn quadratic_closeness(family: &BasisFamily, reference: &BasisFamily) -> Result<Closeness> {
    if family.k != reference.k
        || family.m != reference.m
        || family.entries.len() != reference.entries.len()
    {
        return Err(Error::IndexMismatch(
            "families have different shapes".into(),
        ));
    }
    let w = trapezoid_weights(family.k);
    let mut per_n: Vec<(usize, f64)> = Vec::new();
    for (a, b) in family.entries.iter().zip(&reference.entries) {
        if a.index != b.index {
            return Err(Error::IndexMismatch(format!(
                "{:?} vs {:?}",
                a.index, b.index
            )));
        }
        let d = &a.samples - &b.samples;
        let v: f64 = (0..=family.k)
            .map(|j| w[j] * d.column(j).norm_squared())
            .sum();
        match per_n.last_mut() {
            Some(last) if last.0 == a.index.n => last.1 += v,
            _ => per_n.push((a.index.n, v)),
        }
    }
    let mut acc = 0.0;
    let partial_sums = per_n
        .iter()
        .map(|&(n, v)| {
            acc += v;
            (n, acc)
        })
        .collect();
    let n_max = per_n.iter().map(|p| p.0).max().unwrap_or(0);
    let big = n_max / 2;
    let sum = |lo: usize, hi: usize| {
        per_n
            .iter()
            .filter(|p| p.0 > lo && p.0 <= hi)
            .map(|p| p.1)
            .sum::<f64>()
    };
    Ok(Closeness {
        total: acc,
        tail_recent: sum(big, 2 * big),
        tail_previous: sum(big / 2, big),
        per_n,
        partial_sums,
    })
}
