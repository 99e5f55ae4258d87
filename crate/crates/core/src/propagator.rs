//! Exact propagation of `Y' = σY + Y^[1]`, `(Y^[1])' = -σY^[1] - σ²Y - λY`
//! across cells of constant `σ`.
//!
//! On a cell with constant `σ` the combination `Z = Y^[1] + σY` equals `Y'`
//! and `Y'' = -λY`, so the cell transfer is the scalar rotation
//! `Y ← cY + sZ`, `Z ← -λsY + cZ` with `c = cos ρh`, `s = sin(ρh)/ρ`. Both are
//! entire in `λ`, so there is no branch choice and no matrix exponential.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::problem::ProblemL;

use std::f64::consts::PI;

/// Solution pair `(Y, Y^[1])` at position `x`. The stored matrices are
/// multiplied by `exp(-log_scale)`; `log_scale` is zero unless rescaling was
/// requested.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorState {
    pub x: f64,
    pub y: CMat,
    pub y1: CMat,
    pub log_scale: f64,
}

impl PropagatorState {
    pub fn new(x: f64, y: CMat, y1: CMat) -> Self {
        PropagatorState {
            x,
            y,
            y1,
            log_scale: 0.0,
        }
    }

    /// `Y` and `Y^[1]` with the scale factor applied.
    pub fn unscaled(&self) -> (CMat, CMat) {
        let f = self.log_scale.exp();
        (self.y.scale(f), self.y1.scale(f))
    }
}

/// Overflow guard and rescaling switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    /// Largest admissible `|Im √λ| · span` without rescaling.
    pub exp_cap: f64,
    /// Factor `exp(|Im √λ| |h|)` out of every cell and track it in `log_scale`.
    pub rescale: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            exp_cap: 50.0,
            rescale: false,
        }
    }
}

impl PropagatorOptions {
    pub fn rescaled() -> Self {
        PropagatorOptions {
            rescale: true,
            ..Self::default()
        }
    }
}

/// Cell transfer coefficients `(c, s, log_factor)` for step `h` (signed).
/// With `scaled`, `c` and `s` carry the factor `exp(-log_factor)`.
fn transfer_coefficients(lambda: Complex64, h: f64, scaled: bool) -> (Complex64, Complex64, f64) {
    let rho = lambda.sqrt();
    let z = rho * h;
    if z.norm() < 0.5 {
        // Taylor series in w = -λh²; 20 terms reach double precision for |w| < 0.25.
        let w = -lambda * h * h;
        let mut c = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut term_c = Complex64::new(1.0, 0.0);
        let mut term_s = Complex64::new(1.0, 0.0);
        for k in 0..20 {
            c += term_c;
            s += term_s;
            let kk = k as f64;
            term_c *= w / ((2.0 * kk + 1.0) * (2.0 * kk + 2.0));
            term_s *= w / ((2.0 * kk + 2.0) * (2.0 * kk + 3.0));
        }
        return (c, s * h, 0.0);
    }
    let tau_h = (rho.im * h).abs();
    if scaled && tau_h > 0.0 {
        let iz = Complex64::new(0.0, 1.0) * z;
        let ep = (iz - tau_h).exp();
        let em = (-iz - tau_h).exp();
        let c = (ep + em) * 0.5;
        let s = (ep - em) / (Complex64::new(0.0, 2.0) * rho);
        (c, s, tau_h)
    } else {
        (z.cos(), z.sin() / rho, 0.0)
    }
}

/// Index of the cell entered when moving from `x` in direction `dir`.
fn cell_index(x: f64, width: f64, n: usize, dir: f64) -> usize {
    let u = x / width;
    let eps = 1e-12 * (1.0 + u.abs());
    let idx = if dir > 0.0 {
        (u + eps).floor()
    } else {
        (u - eps).ceil() - 1.0
    };
    idx.clamp(0.0, (n - 1) as f64) as usize
}

/// Propagate `state` from `from_x` to `to_x` with default options.
pub fn propagate(
    problem: &ProblemL,
    lambda: Complex64,
    from_x: f64,
    to_x: f64,
    state: &PropagatorState,
) -> Result<PropagatorState> {
    propagate_with(
        problem,
        lambda,
        from_x,
        to_x,
        state,
        PropagatorOptions::default(),
    )
}

/// Propagate `state` (located at `from_x`) to `to_x`, forward or backward.
pub fn propagate_with(
    problem: &ProblemL,
    lambda: Complex64,
    from_x: f64,
    to_x: f64,
    state: &PropagatorState,
    opts: PropagatorOptions,
) -> Result<PropagatorState> {
    let span = (to_x - from_x).abs();
    let growth = lambda.sqrt().im.abs() * span;
    if !opts.rescale && growth > opts.exp_cap {
        return Err(Error::ExpOverflow(growth));
    }
    let sigma = &problem.sigma;
    let n = sigma.n_cells();
    let width = sigma.cell_width();
    let dir = if to_x >= from_x { 1.0 } else { -1.0 };
    let mut x = from_x;
    let mut y = state.y.clone();
    let mut y1 = state.y1.clone();
    let mut log_scale = state.log_scale;
    while (to_x - x) * dir > 1e-15 {
        let idx = cell_index(x, width, n, dir);
        let boundary = if dir > 0.0 {
            (idx + 1) as f64 * width
        } else {
            idx as f64 * width
        };
        let end = if (boundary - to_x) * dir >= 0.0 {
            to_x
        } else {
            boundary
        };
        let h = end - x;
        let s_cell = &sigma.cells()[idx];
        let (c, s, lf) = transfer_coefficients(lambda, h, opts.rescale);
        let z = &y1 + s_cell * &y;
        let y_new = y.map(|v| v * c) + z.map(|v| v * s);
        let z_new = y.map(|v| v * (-lambda * s)) + z.map(|v| v * c);
        y1 = z_new - s_cell * &y_new;
        y = y_new;
        log_scale += lf;
        x = end;
    }
    Ok(PropagatorState {
        x: to_x,
        y,
        y1,
        log_scale,
    })
}

/// Initial data of `φ` at `x = 0`: `(T1, T1⊥ + H1)`.
pub fn phi_initial(problem: &ProblemL) -> PropagatorState {
    let b = &problem.boundary;
    PropagatorState::new(0.0, b.t1.clone(), b.t1_perp() + &b.h1)
}

/// Initial data of `ψ` at `x = 0`: `(-T1⊥, T1)`.
pub fn psi_initial(problem: &ProblemL) -> PropagatorState {
    let b = &problem.boundary;
    PropagatorState::new(0.0, -b.t1_perp(), b.t1.clone())
}

/// Initial data of `Ψ` at `x = π`: `(T2, T2⊥ + H2)`.
#[allow(non_snake_case)]
pub fn Psi_initial(problem: &ProblemL) -> PropagatorState {
    let b = &problem.boundary;
    PropagatorState::new(PI, b.t2.clone(), b.t2_perp() + &b.h2)
}

/// `φ(π, λ)` and its quasi-derivative.
pub fn phi(problem: &ProblemL, lambda: Complex64) -> Result<PropagatorState> {
    phi_with(problem, lambda, PropagatorOptions::default())
}

pub fn phi_with(
    problem: &ProblemL,
    lambda: Complex64,
    opts: PropagatorOptions,
) -> Result<PropagatorState> {
    propagate_with(problem, lambda, 0.0, PI, &phi_initial(problem), opts)
}

/// `ψ(π, λ)` and its quasi-derivative.
pub fn psi(problem: &ProblemL, lambda: Complex64) -> Result<PropagatorState> {
    psi_with(problem, lambda, PropagatorOptions::default())
}

pub fn psi_with(
    problem: &ProblemL,
    lambda: Complex64,
    opts: PropagatorOptions,
) -> Result<PropagatorState> {
    propagate_with(problem, lambda, 0.0, PI, &psi_initial(problem), opts)
}

/// `Ψ(0, λ)` and its quasi-derivative, propagated backward from `π`.
#[allow(non_snake_case)]
pub fn Psi(problem: &ProblemL, lambda: Complex64) -> Result<PropagatorState> {
    propagate(problem, lambda, PI, 0.0, &Psi_initial(problem))
}

/// Solution values on an increasing grid of positions, starting from `init`
/// (located at `init.x`). Positions below `init.x` are reached backward.
pub fn sample_solution(
    problem: &ProblemL,
    lambda: Complex64,
    init: &PropagatorState,
    grid: &[f64],
) -> Result<Vec<PropagatorState>> {
    let opts = PropagatorOptions {
        exp_cap: f64::INFINITY,
        rescale: false,
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut cur = init.clone();
    for &x in grid {
        let next = propagate_with(problem, lambda, cur.x, x, &cur, opts)?;
        out.push(next.clone());
        cur = next;
    }
    Ok(out)
}

/// Wronskian `⟨Y†, Z⟩ = Y† Z^[1] - (Y^[1])† Z`, where `y` must be the
/// solution evaluated at `λ̄` and `z` at `λ` (same position).
pub fn wronskian(y: &PropagatorState, z: &PropagatorState) -> CMat {
    let (ya, y1a) = y.unscaled();
    let (zb, z1b) = z.unscaled();
    ya.adjoint() * z1b - y1a.adjoint() * zb
}

/// Largest relative deviation of `⟨φ†, φ⟩(x)` from its value at `x = 0`
/// over the given positions.
pub fn wronskian_drift(problem: &ProblemL, lambda: Complex64, positions: &[f64]) -> Result<f64> {
    let init = phi_initial(problem);
    let fwd = sample_solution(problem, lambda, &init, positions)?;
    let conj = sample_solution(problem, lambda.conj(), &init, positions)?;
    let w0 = wronskian(&init, &init);
    let scale = fwd
        .iter()
        .zip(&conj)
        .map(|(a, b)| {
            let (ya, y1a) = b.unscaled();
            let (yb, y1b) = a.unscaled();
            crate::linalg::op_norm(&ya) * crate::linalg::op_norm(&y1b)
                + crate::linalg::op_norm(&y1a) * crate::linalg::op_norm(&yb)
        })
        .fold(1.0, f64::max);
    let mut worst = 0.0_f64;
    for (a, b) in fwd.iter().zip(&conj) {
        let w = wronskian(b, a);
        worst = worst.max(crate::linalg::max_abs(&(w - &w0)) / scale);
    }
    Ok(worst)
}
