//! Closed-form spectral theory of the zero case `σ = 0`, `H1 = H2 = 0`.
//!
//! Eigenvalues are `(n + r_k)²` where `r_k ∈ [0, 1)` are the zeros of
//! `det W⁰(ρ)`, and the weights follow from the residue projectors
//! `A_k = π Res_{r_k} E⁰`, `E⁰ = (W⁰)⁻¹ U⁰`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dataset::{SpectralDataSet, SpectralEntry};
use crate::error::{Error, Result};
use crate::linalg::{golden_section_min, hermitize, op_norm, singular_values, solve, CMat};
use crate::problem::{index_set_with, BoundaryData};

/// Singular-value threshold, relative to the size of `W⁰`, defining a root
/// and its multiplicity.
const ROOT_TOL: f64 = 1e-7;
/// Trapezoid nodes on residue circles.
const RESIDUE_NODES: usize = 256;

/// Roots, residue projectors and subspace dimensions of a boundary pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCaseModel {
    pub m: usize,
    /// Sorted roots in `[0, 1)`, repeated by multiplicity.
    pub roots: Vec<f64>,
    /// One `(r, A)` per distinct root, ascending in `r`.
    pub residues: Vec<(f64, CMat)>,
    pub p: usize,
    pub p_perp: usize,
}

impl ZeroCaseModel {
    pub fn new(boundary: &BoundaryData) -> Result<Self> {
        let roots = roots_r(boundary)?;
        let residues = a_residues_for(boundary, &roots)?;
        Ok(ZeroCaseModel {
            m: boundary.m,
            roots,
            residues,
            p: boundary.p(),
            p_perp: boundary.p_perp(),
        })
    }

    /// Projector `A` of the distinct root closest to `r` (cyclically).
    pub fn residue_at(&self, r: f64) -> Option<&CMat> {
        self.residues
            .iter()
            .find(|(rk, _)| cyclic_dist(*rk, r) < 1e-9)
            .map(|(_, a)| a)
    }
}

fn cyclic_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn c64(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `W⁰(ρ) = (T2T1 + T2⊥T1⊥) sin ρπ + (T2⊥T1 - T2T1⊥) cos ρπ`.
#[allow(non_snake_case)]
pub fn W0_eval(rho: Complex64, b: &BoundaryData) -> CMat {
    let (t1, t2, t1p, t2p) = (&b.t1, &b.t2, b.t1_perp(), b.t2_perp());
    let a = t2 * t1 + &t2p * &t1p;
    let c = &t2p * t1 - t2 * &t1p;
    let s = (rho * PI).sin();
    let co = (rho * PI).cos();
    a.map(|v| v * s) + c.map(|v| v * co)
}

/// `U⁰(ρ) = (T2T1 + T2⊥T1⊥) cos ρπ + (T2T1⊥ - T2⊥T1) sin ρπ`.
#[allow(non_snake_case)]
pub fn U0_eval(rho: Complex64, b: &BoundaryData) -> CMat {
    let (t1, t2, t1p, t2p) = (&b.t1, &b.t2, b.t1_perp(), b.t2_perp());
    let a = t2 * t1 + &t2p * &t1p;
    let c = t2 * &t1p - &t2p * t1;
    let s = (rho * PI).sin();
    let co = (rho * PI).cos();
    a.map(|v| v * co) + c.map(|v| v * s)
}

/// `E⁰(ρ) = W⁰(ρ)⁻¹ U⁰(ρ)`.
#[allow(non_snake_case)]
pub fn E0_eval(rho: Complex64, b: &BoundaryData) -> Result<CMat> {
    solve(&W0_eval(rho, b), &U0_eval(rho, b))
}

/// Zero-case Weyl matrix `M⁰(λ) = (T1 + ρT1⊥) E⁰(ρ) (ρ⁻¹T1 + T1⊥)`, `ρ = √λ`.
#[allow(non_snake_case)]
pub fn M0_eval(lambda: Complex64, b: &BoundaryData) -> Result<CMat> {
    let rho = lambda.sqrt();
    let t1p = b.t1_perp();
    let left = &b.t1 + t1p.map(|v| v * rho);
    let right = b.t1.map(|v| v / rho) + &t1p;
    Ok(left * E0_eval(rho, b)? * right)
}

/// Size of `W⁰` independent of `ρ`: the sum of the norms of its two
/// trigonometric coefficients.
fn w0_scale(b: &BoundaryData) -> f64 {
    let s = W0_eval(c64(0.5), b);
    let c = W0_eval(c64(0.0), b);
    (op_norm(&s) + op_norm(&c)).max(1e-300)
}

/// Smallest singular value of `W⁰` relative to `scale`, and all singular values.
fn rel_smin(rho: f64, b: &BoundaryData, scale: f64) -> (f64, Vec<f64>) {
    let s = singular_values(&W0_eval(c64(rho), b));
    (s[s.len() - 1] / scale, s)
}

fn scan_roots(b: &BoundaryData, grid: usize) -> Vec<(f64, usize)> {
    let scale = w0_scale(b);
    let h = 1.0 / grid as f64;
    let vals: Vec<f64> = (0..grid)
        .map(|i| rel_smin(i as f64 * h, b, scale).0)
        .collect();
    let mut found: Vec<(f64, usize)> = Vec::new();
    for i in 0..grid {
        let prev = vals[(i + grid - 1) % grid];
        let next = vals[(i + 1) % grid];
        if !(vals[i] <= prev && vals[i] <= next) {
            continue;
        }
        let centre = i as f64 * h;
        let (x, _) = golden_section_min(|x| rel_smin(x, b, scale).0, centre - h, centre + h, 1e-12);
        let (fx, s) = rel_smin(x, b, scale);
        if fx > ROOT_TOL {
            continue;
        }
        let mut r = x.rem_euclid(1.0);
        if (1.0 - r) < 1e-9 || r < 1e-9 {
            r = 0.0;
        }
        let mult = s.iter().filter(|&&v| v < ROOT_TOL * scale).count();
        if found.iter().all(|(q, _)| cyclic_dist(*q, r) > 1e-9) {
            found.push((r, mult));
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    found
}

/// The multiset `{r_k}` of zeros of `det W⁰` in `[0, 1)`, sorted.
pub fn roots_r(b: &BoundaryData) -> Result<Vec<f64>> {
    let mut last = 0;
    for grid in [1000, 10000] {
        let found = scan_roots(b, grid);
        let total: usize = found.iter().map(|(_, k)| k).sum();
        if total == b.m {
            return Ok(found
                .iter()
                .flat_map(|&(r, k)| std::iter::repeat_n(r, k))
                .collect());
        }
        last = total;
    }
    Err(Error::RootCountMismatch {
        found: last,
        expected: b.m,
    })
}

/// Residue projectors `A_k = π Res_{r_k} E⁰` for every distinct root.
#[allow(non_snake_case)]
pub fn A_residues(b: &BoundaryData) -> Result<Vec<(f64, CMat)>> {
    let roots = roots_r(b)?;
    a_residues_for(b, &roots)
}

fn a_residues_for(b: &BoundaryData, roots: &[f64]) -> Result<Vec<(f64, CMat)>> {
    let mut distinct: Vec<f64> = roots.to_vec();
    distinct.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let mut out = Vec::with_capacity(distinct.len());
    for (i, &r) in distinct.iter().enumerate() {
        let gap = distinct
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &q)| cyclic_dist(q, r))
            .fold(1.0_f64, f64::min);
        let delta = gap.min(0.5) / 3.0;
        if delta < 1e-4 {
            return Err(Error::ContourTooClose {
                root: r,
                radius: delta,
            });
        }
        let mut acc = CMat::zeros(b.m, b.m);
        for j in 0..RESIDUE_NODES {
            let theta = 2.0 * PI * (j as f64 + 0.5) / RESIDUE_NODES as f64;
            let e = Complex64::from_polar(1.0, theta);
            let rho = c64(r) + e * delta;
            acc += E0_eval(rho, b)?.map(|v| v * e);
        }
        let a = acc.map(|v| v * (PI * delta / RESIDUE_NODES as f64));
        out.push((r, hermitize(&a)));
    }
    Ok(out)
}

/// Closed-form spectral data over the index set truncated at `n_max`.
pub fn zero_spectral_data(b: &BoundaryData, n_max: usize) -> Result<SpectralDataSet> {
    let model = ZeroCaseModel::new(b)?;
    zero_spectral_data_from(&model, &b.t1, n_max)
}

/// Spectral data built from roots and residue projectors:
/// `λ = (n + r_k)²`, `α = (2/π)(T1 + ρT1⊥)A_k(T1 + ρT1⊥)` and
/// `α = (1/π)T1 A_k T1` at `ρ = 0`.
pub fn zero_spectral_data_from(
    model: &ZeroCaseModel,
    t1: &CMat,
    n_max: usize,
) -> Result<SpectralDataSet> {
    let m = model.m;
    let t1p = CMat::identity(m, m) - t1;
    let indices = index_set_with(m, model.p_perp, n_max);
    let mut entries = Vec::with_capacity(indices.len());
    for idx in indices {
        let r = model.roots[idx.k - 1];
        let rho = idx.n as f64 + r;
        let a = model
            .residue_at(r)
            .ok_or_else(|| Error::InvalidData(format!("no residue projector for r = {r}")))?;
        let (alpha, multiplicity) = if rho == 0.0 {
            ((t1 * a * t1).scale(1.0 / PI), model.p)
        } else {
            let t = t1 + t1p.scale(rho);
            let mult = model
                .roots
                .iter()
                .filter(|&&q| (q - r).abs() < 1e-9)
                .count();
            ((&t * a * &t).scale(2.0 / PI), mult)
        };
        entries.push(SpectralEntry {
            index: idx,
            lambda: rho * rho,
            alpha: hermitize(&alpha),
            multiplicity,
        });
    }
    SpectralDataSet::new(m, entries)
}
