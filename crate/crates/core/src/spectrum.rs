//! Forward spectral problem: characteristic matrix, eigenvalues with
//! multiplicities, Weyl matrix and weight matrices.
//!
//! Eigenvalues are scanned in the coordinate `s` with `λ = s|s|`, so negative
//! eigenvalues are reached along the imaginary `ρ` axis. The indicator is the
//! smallest singular value of the normalized characteristic matrix `W(ρ)`.
//! Every unit window in `ρ` is cross-checked by the argument principle
//! applied to `det W`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dataset::{SpectralDataSet, SpectralEntry};
use crate::error::{Error, Result};
use crate::linalg::{
    golden_section_min, hermitian_eigen, hermitize, max_abs, op_norm, singular_values, solve, CMat,
};
use crate::problem::{index_set, normalize_h1, BoundaryData, ProblemL};
use crate::propagator::{
    phi_initial, phi_with, psi_with, sample_solution, PropagatorOptions, PropagatorState,
};
use crate::zerocase::{roots_r, W0_eval};

/// Scan step in `s`.
const SCAN_STEP: f64 = 0.005;
/// Below this `|s|` the raw boundary form replaces the normalized `W`.
const SMALL_RHO: f64 = 0.05;
/// Relative indicator value accepted as an eigenvalue.
const RESIDUAL_TOL: f64 = 1e-8;
/// Relative singular-value threshold for multiplicities.
const MULT_TOL: f64 = 1e-6;
/// Trapezoid nodes on weight contours.
const WEIGHT_NODES: usize = 512;
/// Half-height of the `ρ`-plane counting rectangles.
const WINDOW_HALF_HEIGHT: f64 = 0.2;

/// `M(λ)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSample {
    pub lambda: Complex64,
    pub m: CMat,
}

/// A located eigenvalue. `rho` is `√λ` with the sign of `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvalueRecord {
    pub lambda: f64,
    pub rho: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

/// Full output of the eigenvalue search.
#[derive(Debug, Clone, PartialEq)]
pub struct LocateReport {
    pub records: Vec<EigenvalueRecord>,
    /// Minima whose indicator did not fall below the acceptance threshold:
    /// `(λ, relative residual)`.
    pub rejected: Vec<(f64, f64)>,
    /// `(lower ρ edge, upper ρ edge, eigenvalue count)` per window; the first
    /// window starts at the lower bound of the spectrum.
    pub windows: Vec<(f64, f64, usize)>,
}

/// `V2(Y) = T2(Y^[1](π) - H2 Y(π)) - T2⊥ Y(π)` on the stored (possibly
/// scaled) state.
#[allow(non_snake_case)]
pub fn boundary_form_V2(state: &PropagatorState, b: &BoundaryData) -> CMat {
    &b.t2 * (&state.y1 - &b.h2 * &state.y) - b.t2_perp() * &state.y
}

/// `W = -(ρ⁻¹T2 + T2⊥) V2 (T1 + ρT1⊥)`.
fn normalize_char(v2: &CMat, rho: Complex64, b: &BoundaryData) -> CMat {
    let left = b.t2.map(|v| v / rho) + b.t2_perp();
    let right = &b.t1 + b.t1_perp().map(|v| v * rho);
    -(left * v2 * right)
}

/// Normalized characteristic matrix `W(ρ) = -(ρT2 + T2⊥)⁻¹ V2(φ) (T1 + ρ⁻¹T1⊥)⁻¹`.
#[allow(non_snake_case)]
pub fn charW(problem: &ProblemL, rho: Complex64) -> Result<CMat> {
    let st = phi_with(problem, rho * rho, PropagatorOptions::default())?;
    Ok(normalize_char(
        &boundary_form_V2(&st, &problem.boundary),
        rho,
        &problem.boundary,
    ))
}

fn char_w_scaled(problem: &ProblemL, rho: Complex64) -> Result<CMat> {
    let st = phi_with(problem, rho * rho, PropagatorOptions::rescaled())?;
    Ok(normalize_char(
        &boundary_form_V2(&st, &problem.boundary),
        rho,
        &problem.boundary,
    ))
}

/// `ρ` for scan coordinate `s` (`λ = s|s|`).
fn rho_of_s(s: f64) -> Complex64 {
    if s >= 0.0 {
        Complex64::new(s, 0.0)
    } else {
        Complex64::new(0.0, -s)
    }
}

/// Size of `W⁰` independent of `ρ`.
fn w_scale(b: &BoundaryData) -> f64 {
    let s = W0_eval(Complex64::new(0.5, 0.0), b);
    let c = W0_eval(Complex64::new(0.0, 0.0), b);
    (op_norm(&s) + op_norm(&c)).max(1e-300)
}

/// Indicator at scan coordinate `s`: relative smallest singular value and
/// the multiplicity estimate.
struct Indicator<'a> {
    problem: &'a ProblemL,
    scale: f64,
}

impl Indicator<'_> {
    fn eval(&self, s: f64) -> Result<(f64, usize)> {
        let b = &self.problem.boundary;
        let (sv, reference) = if s.abs() >= SMALL_RHO {
            let w = char_w_scaled(self.problem, rho_of_s(s))?;
            let sv = singular_values(&w);
            let r = self.scale.max(sv[0]);
            (sv, r)
        } else {
            let lam = Complex64::new(s * s.abs(), 0.0);
            let st = phi_with(self.problem, lam, PropagatorOptions::rescaled())?;
            let v2 = boundary_form_V2(&st, b);
            let sv = singular_values(&v2);
            let r = (max_abs(&st.y) + max_abs(&st.y1)).max(sv[0]).max(1e-300);
            (sv, r)
        };
        let smin = sv[sv.len() - 1] / reference;
        let mult = sv.iter().filter(|&&v| v < MULT_TOL * reference).count();
        Ok((smin, mult))
    }

    fn value(&self, s: f64) -> f64 {
        self.eval(s).map(|v| v.0).unwrap_or(f64::INFINITY)
    }
}

/// Lower bound `-B` for the spectrum of a problem with `H1 = 0`:
/// `B = 2 s² + 2 h² + h/π`, `s = sup‖σ‖`, `h = ‖H2‖`.
pub fn spectrum_lower_bound(problem: &ProblemL) -> f64 {
    let s = problem.sigma.sup_norm();
    let h = op_norm(&problem.boundary.h2);
    -(2.0 * s * s + 2.0 * h * h + h / PI)
}

/// Offset of the counting windows: middle of the largest cyclic gap between
/// the zero-case roots, kept in `[0.05, 1.05)`.
fn window_offset(b: &BoundaryData) -> Result<f64> {
    let mut roots = roots_r(b)?;
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let mut best = (0.0, 0.5);
    for i in 0..roots.len() {
        let a = roots[i];
        let next = if i + 1 < roots.len() {
            roots[i + 1]
        } else {
            roots[0] + 1.0
        };
        let gap = next - a;
        if gap > best.0 + 1e-12 {
            best = (gap, a + 0.5 * gap);
        }
    }
    let mut o = best.1.rem_euclid(1.0);
    if o < SMALL_RHO {
        o += 1.0;
    }
    Ok(o)
}

/// Number of zeros of `f` inside the counterclockwise polygon through
/// `corners`, by tracking the argument with adaptive subdivision.
fn winding_count<F>(f: &F, corners: &[Complex64]) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    fn segment<F: Fn(Complex64) -> Result<Complex64>>(
        f: &F,
        a: Complex64,
        fa: Complex64,
        b: Complex64,
        fb: Complex64,
        depth: usize,
    ) -> Result<f64> {
        let d = (fb / fa).arg();
        if d.abs() <= PI / 3.0 || depth == 0 {
            return Ok(d);
        }
        let mid = (a + b) * 0.5;
        let fm = f(mid)?;
        Ok(segment(f, a, fa, mid, fm, depth - 1)? + segment(f, mid, fm, b, fb, depth - 1)?)
    }
    let mut total = 0.0;
    for i in 0..corners.len() {
        let a = corners[i];
        let b = corners[(i + 1) % corners.len()];
        let pieces = 32;
        let mut za = a;
        let mut fa = f(za)?;
        for j in 1..=pieces {
            let zb = a + (b - a) * (j as f64 / pieces as f64);
            let fb = f(zb)?;
            total += segment(f, za, fa, zb, fb, 16)?;
            za = zb;
            fa = fb;
        }
    }
    Ok(total / (2.0 * PI))
}

fn round_count(w: f64, what: &str) -> Result<usize> {
    let c = w.round();
    if (w - c).abs() > 0.1 || c < 0.0 {
        return Err(Error::MissedRootSuspicion(format!(
            "non-integer winding number {w:.4} on {what}"
        )));
    }
    Ok(c as usize)
}

/// Count of eigenvalues (with multiplicity) with `√λ` in `[a, b)`, `a > 0`.
fn count_rho_window(problem: &ProblemL, a: f64, b: f64) -> Result<usize> {
    let f =
        |rho: Complex64| -> Result<Complex64> { Ok(char_w_scaled(problem, rho)?.determinant()) };
    let h = WINDOW_HALF_HEIGHT;
    let corners = [
        Complex64::new(a, -h),
        Complex64::new(b, -h),
        Complex64::new(b, h),
        Complex64::new(a, h),
    ];
    round_count(
        winding_count(&f, &corners)?,
        &format!("rho window [{a}, {b}]"),
    )
}

/// Count of eigenvalues in `[lo, hi)` in the `λ` plane.
fn count_lambda_window(problem: &ProblemL, lo: f64, hi: f64) -> Result<usize> {
    let b = &problem.boundary;
    let f = |lam: Complex64| -> Result<Complex64> {
        let st = phi_with(problem, lam, PropagatorOptions::rescaled())?;
        Ok(boundary_form_V2(&st, b).determinant())
    };
    let h = 1.0;
    let corners = [
        Complex64::new(lo, -h),
        Complex64::new(hi, -h),
        Complex64::new(hi, h),
        Complex64::new(lo, h),
    ];
    round_count(
        winding_count(&f, &corners)?,
        &format!("lambda window [{lo}, {hi}]"),
    )
}

/// Accepted records and rejected minima `(λ, residual)` of one window.
type WindowScan = (Vec<EigenvalueRecord>, Vec<(f64, f64)>);
/// A window scan with the window `(lo, hi, expected count)`.
type WindowOutcome = (Vec<EigenvalueRecord>, Vec<(f64, f64)>, (f64, f64, usize));

/// Minima of the indicator on `[s_lo, s_hi)` with grid step at most `step`.
fn scan_window(ind: &Indicator<'_>, s_lo: f64, s_hi: f64, step: f64) -> Result<WindowScan> {
    let k = ((s_hi - s_lo) / step).ceil().max(2.0) as usize;
    let h = (s_hi - s_lo) / k as f64;
    let grid: Vec<f64> = (0..=k + 2).map(|j| s_lo + (j as f64 - 1.0) * h).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| ind.value(s)).collect();
    let mut records: Vec<EigenvalueRecord> = Vec::new();
    let mut rejected = Vec::new();
    for j in 1..grid.len() - 1 {
        if !(vals[j] <= vals[j - 1] && vals[j] <= vals[j + 1]) {
            continue;
        }
        let (s, _) = golden_section_min(
            |s| ind.value(s),
            grid[j - 1],
            grid[j + 1],
            1e-11 * (1.0 + grid[j].abs()),
        );
        if s < s_lo || s >= s_hi {
            continue;
        }
        let (res, mult) = ind.eval(s)?;
        let lambda = s * s.abs();
        if res > RESIDUAL_TOL {
            if res < 1e-3 {
                rejected.push((lambda, res));
            }
            continue;
        }
        if records.iter().any(|r| (r.rho - s).abs() < 1e-9) {
            continue;
        }
        records.push(EigenvalueRecord {
            lambda,
            rho: s,
            multiplicity: mult.max(1),
            residual: res,
        });
    }
    records.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok((records, rejected))
}

/// Scan a window, refining the grid until the multiplicity total matches the
/// argument-principle count.
fn resolve_window(
    ind: &Indicator<'_>,
    s_lo: f64,
    s_hi: f64,
    expected: usize,
) -> Result<WindowScan> {
    let mut step = SCAN_STEP;
    let mut last = 0;
    for _ in 0..5 {
        let (recs, rej) = scan_window(ind, s_lo, s_hi, step)?;
        let total: usize = recs.iter().map(|r| r.multiplicity).sum();
        if total == expected {
            return Ok((recs, rej));
        }
        last = total;
        step /= 4.0;
    }
    Err(Error::MissedRootSuspicion(format!(
        "window s in [{s_lo}, {s_hi}): scan found {last} eigenvalues, argument principle gives {expected}"
    )))
}

/// Move a window edge off nearby eigenvalues.
fn nudge_edge(ind: &Indicator<'_>, mut e: f64) -> f64 {
    for _ in 0..8 {
        if ind.value(e) >= 1e-3 {
            break;
        }
        e += 0.013;
    }
    e
}

/// All eigenvalues with `√λ ≤ rho_max` (and every negative eigenvalue),
/// with the window report.
pub fn locate_eigenvalues_report(problem: &ProblemL, rho_max: f64) -> Result<LocateReport> {
    let prob = normalize_h1(problem);
    let ind = Indicator {
        problem: &prob,
        scale: w_scale(&prob.boundary),
    };
    let bound = -spectrum_lower_bound(&prob);
    let tau = bound.sqrt() + 0.5;
    let o = window_offset(&prob.boundary)?;
    let n_windows = (rho_max - o).max(0.0).floor() as usize + 1;
    let edges: Vec<f64> = (0..=n_windows)
        .into_par_iter()
        .map(|n| nudge_edge(&ind, n as f64 + o))
        .collect();

    // window 0 in the λ plane, the rest in the ρ plane
    let results: Vec<Result<WindowOutcome>> = (0..=n_windows)
        .into_par_iter()
        .map(|w| {
            if w == 0 {
                let hi = edges[0];
                let count = count_lambda_window(&prob, -(tau * tau) - 1.0, hi * hi)?;
                let (r, j) = resolve_window(&ind, -tau, hi, count)?;
                Ok((r, j, (-tau, hi, count)))
            } else {
                let (lo, hi) = (edges[w - 1], edges[w]);
                let count = count_rho_window(&prob, lo, hi)?;
                let (r, j) = resolve_window(&ind, lo, hi, count)?;
                Ok((r, j, (lo, hi, count)))
            }
        })
        .collect();
    let mut report = LocateReport {
        records: Vec::new(),
        rejected: Vec::new(),
        windows: Vec::new(),
    };
    for r in results {
        let (recs, rej, win) = r?;
        report
            .records
            .extend(recs.into_iter().filter(|r| r.rho <= rho_max));
        report.rejected.extend(rej);
        report.windows.push(win);
    }
    Ok(report)
}

/// All eigenvalues with `√λ ≤ rho_max`, ascending, with multiplicities.
pub fn locate_eigenvalues(problem: &ProblemL, rho_max: f64) -> Result<Vec<EigenvalueRecord>> {
    Ok(locate_eigenvalues_report(problem, rho_max)?.records)
}

fn weyl_raw(problem: &ProblemL, lambda: Complex64) -> Result<(CMat, f64)> {
    let opts = PropagatorOptions::rescaled();
    let b = &problem.boundary;
    let st = phi_with(problem, lambda, opts)?;
    let v2phi = boundary_form_V2(&st, b);
    let v2psi = boundary_form_V2(&psi_with(problem, lambda, opts)?, b);
    // conditioning relative to the size of the solution, so that scalar
    // problems are covered too
    let sv = singular_values(&v2phi);
    let reference = sv[0].max(max_abs(&st.y) + max_abs(&st.y1));
    let smin = sv[sv.len() - 1];
    let c = if smin > 0.0 {
        reference / smin
    } else {
        f64::INFINITY
    };
    let m = solve(&v2phi, &v2psi).map(|x| -x)?;
    Ok((m, c))
}

/// Weyl matrix `M(λ) = -(V2 φ)⁻¹ V2 ψ`. Fails with `NearPole` when `V2 φ`
/// is singular to 1e-12 relative to the size of `φ(π)`.
pub fn weyl(problem: &ProblemL, lambda: Complex64) -> Result<WeylSample> {
    let (m, c) = weyl_raw(problem, lambda).map_err(|e| match e {
        Error::Singular(_) => Error::NearPole {
            lambda: format!("{lambda}"),
            cond: f64::INFINITY,
        },
        other => other,
    })?;
    if c > 1e12 {
        return Err(Error::NearPole {
            lambda: format!("{lambda}"),
            cond: c,
        });
    }
    Ok(WeylSample { lambda, m })
}

/// Weight matrix of the eigenvalue group `records[idx]`: the residue of `M`
/// by trapezoid quadrature on a circle of radius a third of the distance to
/// the neighbouring eigenvalues.
pub fn weight_matrix(problem: &ProblemL, records: &[EigenvalueRecord], idx: usize) -> Result<CMat> {
    let lam = records[idx].lambda;
    let mut gap = f64::INFINITY;
    if idx > 0 {
        gap = gap.min(lam - records[idx - 1].lambda);
    }
    if idx + 1 < records.len() {
        gap = gap.min(records[idx + 1].lambda - lam);
    }
    if !gap.is_finite() {
        gap = 1.0 + lam.abs().sqrt();
    }
    if gap <= 3e-6 * (1.0 + lam.abs()) {
        return Err(Error::GroupNotIsolated(format!(
            "lambda = {lam}, gap = {gap:e}"
        )));
    }
    weight_on_circle(problem, lam, gap / 3.0)
}

/// `(1/2πi)∮ M(λ) dλ` over the circle `|λ - centre| = radius`, Hermitized.
pub fn weight_on_circle(problem: &ProblemL, centre: f64, radius: f64) -> Result<CMat> {
    let m = problem.m();
    let mut acc = CMat::zeros(m, m);
    for j in 0..WEIGHT_NODES {
        let theta = 2.0 * PI * (j as f64 + 0.5) / WEIGHT_NODES as f64;
        let e = Complex64::from_polar(1.0, theta);
        let lam = Complex64::new(centre, 0.0) + e * radius;
        let (mm, c) = weyl_raw(problem, lam).map_err(|_| {
            Error::GroupNotIsolated(format!("contour around {centre} meets a pole"))
        })?;
        if c > 1e12 {
            return Err(Error::GroupNotIsolated(format!(
                "contour around {centre} meets a pole"
            )));
        }
        acc += mm.map(|v| v * e);
    }
    let alpha = hermitize(&acc.map(|v| v * (radius / WEIGHT_NODES as f64)));
    let (vals, _) = hermitian_eigen(&alpha);
    let norm = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = vals.last().copied().unwrap_or(0.0);
    if min < -1e-8 * norm {
        return Err(Error::NotPsd { min_eig: min, norm });
    }
    Ok(alpha)
}

/// Spectral data over the index set truncated at `n_max`.
pub fn spectral_data(problem: &ProblemL, n_max: usize) -> Result<SpectralDataSet> {
    let prob = normalize_h1(problem);
    let (indices, _, _) = index_set(&prob.boundary, n_max);
    let need = indices.len();
    let mut rho_max = n_max as f64 + 1.5;
    let records = loop {
        let recs = locate_eigenvalues(&prob, rho_max)?;
        let total: usize = recs.iter().map(|r| r.multiplicity).sum();
        if total > need {
            break recs;
        }
        rho_max += 1.0;
        if rho_max > 2.0 * n_max as f64 + 20.0 {
            return Err(Error::MissedRootSuspicion(format!(
                "only {total} eigenvalues up to rho = {rho_max}, need more than {need}"
            )));
        }
    };
    // number of records needed to cover the index set
    let mut used = 0;
    let mut covered = 0;
    while covered < need {
        covered += records[used].multiplicity;
        used += 1;
    }
    let weights: Vec<Result<CMat>> = (0..used)
        .into_par_iter()
        .map(|i| weight_matrix(&prob, &records, i))
        .collect();
    let mut entries = Vec::with_capacity(need);
    let mut it = indices.into_iter();
    for (rec, w) in records.iter().zip(weights) {
        let alpha = w?;
        for _ in 0..rec.multiplicity {
            if let Some(index) = it.next() {
                entries.push(SpectralEntry {
                    index,
                    lambda: rec.lambda,
                    alpha: alpha.clone(),
                    multiplicity: rec.multiplicity,
                });
            }
        }
    }
    SpectralDataSet::new(prob.m(), entries)
}

/// `‖V2(φ(·, λ)) α‖` for one entry.
pub fn val_residual(problem: &ProblemL, entry: &SpectralEntry) -> Result<f64> {
    let prob = normalize_h1(problem);
    let st = phi_with(
        &prob,
        Complex64::new(entry.lambda, 0.0),
        PropagatorOptions::rescaled(),
    )?;
    let f = st.log_scale.exp();
    Ok(op_norm(&(boundary_form_V2(&st, &prob.boundary) * &entry.alpha)) * f)
}

/// Cell-aligned composite Simpson nodes and weights on `[0, π]` with about
/// `total` intervals.
fn simpson_grid(n_cells: usize, total: usize) -> (Vec<f64>, Vec<f64>) {
    let per = ((total / n_cells).max(2) + 1) & !1;
    let w = PI / n_cells as f64;
    let h = w / per as f64;
    let mut xs = Vec::with_capacity(n_cells * per + 1);
    let mut ws = Vec::with_capacity(n_cells * per + 1);
    xs.push(0.0);
    ws.push(0.0);
    for c in 0..n_cells {
        let x0 = c as f64 * w;
        let last = ws.len() - 1;
        ws[last] += h / 3.0;
        for j in 1..=per {
            xs.push(if j == per {
                (c + 1) as f64 * w
            } else {
                x0 + j as f64 * h
            });
            let coef = if j == per {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            ws.push(coef * h / 3.0);
        }
    }
    (xs, ws)
}

/// Samples of `φ(·, λ)` on a grid.
fn phi_samples(problem: &ProblemL, lambda: f64, grid: &[f64]) -> Result<Vec<CMat>> {
    let init = phi_initial(problem);
    Ok(
        sample_solution(problem, Complex64::new(lambda, 0.0), &init, &grid[1..])?
            .into_iter()
            .map(|s| s.y)
            .fold(vec![init.y.clone()], |mut v, y| {
                v.push(y);
                v
            }),
    )
}

/// Largest orthogonality residual over group leaders of `data`:
/// `‖α_a (∫ φ_a† φ_b) α_b - δ_ab α_a‖ / (1 + ‖α_a‖ ‖α_b‖)`.
pub fn sym1_residual(problem: &ProblemL, data: &SpectralDataSet) -> Result<f64> {
    let prob = normalize_h1(problem);
    let (xs, ws) = simpson_grid(prob.sigma.n_cells(), 4096);
    let leaders: Vec<&SpectralEntry> = data.leaders().collect();
    let samples: Vec<Vec<CMat>> = leaders
        .par_iter()
        .map(|e| phi_samples(&prob, e.lambda, &xs))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..leaders.len())
        .flat_map(|a| (a..leaders.len()).map(move |b| (a, b)))
        .collect();
    let res: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let m = prob.m();
            let mut g = CMat::zeros(m, m);
            for (i, w) in ws.iter().enumerate() {
                g += (samples[a][i].adjoint() * &samples[b][i]).map(|v| v * *w);
            }
            let mut r = &leaders[a].alpha * g * &leaders[b].alpha;
            if a == b {
                r -= &leaders[a].alpha;
            }
            max_abs(&r) / (1.0 + op_norm(&leaders[a].alpha) * op_norm(&leaders[b].alpha)).sqrt()
        })
        .collect();
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// `‖M(λ̄)† - M(λ)‖` at one point.
pub fn weyl_symmetry_defect(problem: &ProblemL, lambda: Complex64) -> Result<f64> {
    let a = weyl(problem, lambda)?.m;
    let b = weyl(problem, lambda.conj())?.m;
    Ok(max_abs(&(b.adjoint() - a)))
}
