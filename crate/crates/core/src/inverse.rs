//! Recovery of the boundary projectors `T1`, `T2` from spectral data.
//!
//! The Weyl matrix is `M(λ) = 𝔐(λ) + C*`, where
//! `𝔐(λ) = Σ (1/(λ - λ_nk) + β(λ_nk)) α′_nk` with `β(λ) = λ/(λ² + ω²)`.
//! From the limits `(r_k, A_k)` the zero-case data are rebuilt, their Weyl
//! matrix `M⁰` is summed with the constant `C⁰* = lim (τT1⊥ - 𝔐⁰(-τ²))`,
//! and `T2` is read off the kernel of
//! `D* = (E⁰ + tI)T1 + (tE⁰ - I)T1⊥`, `t = tan ρ*π`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::asymptotics::{extract_r_A, RAExtraction};
use crate::dataset::SpectralDataSet;
use crate::error::{Error, Result};
use crate::linalg::{
    extrapolation_weights, eye, herm_defect, hermitian_eigen, hermitize, max_abs, op_norm,
    orthogonalize_projectors, projector_onto_top, singular_values, snap_to_projector, solve,
    tapered_weights, trace, CMat,
};
use crate::problem::{BoundaryData, ProblemL, SpectralIndex};
use crate::zerocase::{zero_spectral_data_from, ZeroCaseModel};

/// Terms per parallel block of the series (summed in index order).
const SERIES_BLOCK: usize = 256;
/// Relative distance to a data eigenvalue treated as a pole.
const POLE_TOL: f64 = 1e-12;
/// First trial value of `ρ*` and its shift.
const RHO_STAR_START: f64 = 0.26;
const RHO_STAR_STEP: f64 = 0.07;
/// Smallest admissible distance of `ρ*` from `r_k` (mod 1) and from `1/2`.
const RHO_STAR_CLEARANCE: f64 = 0.05;
/// Limits on the projector fit in `recover_T1`.
const T1_SNAP_LIMIT: f64 = 0.3;
const T1_CONVERGENCE_LIMIT: f64 = 0.05;
/// Model-based refinement passes in `recover_T1`.
const T1_REFINE_STEPS: usize = 4;
/// Nodes of the Gauss–Legendre rule used for tail integrals.
const TAIL_NODES: usize = 24;

/// Parameters of the regularized series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylSeriesConfig {
    pub omega: f64,
    /// Largest `n` included; `None` uses all data.
    pub n_max: Option<usize>,
}

impl Default for WeylSeriesConfig {
    fn default() -> Self {
        WeylSeriesConfig {
            omega: 1.0,
            n_max: None,
        }
    }
}

impl WeylSeriesConfig {
    fn check(&self) -> Result<()> {
        if self.omega.is_nan() || self.omega <= 0.0 || !self.omega.is_finite() {
            return Err(Error::InvalidData(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if let Some(n) = self.n_max {
            if n < 8 {
                return Err(Error::InvalidData(format!(
                    "series truncation must be at least 8, got {n}"
                )));
            }
        }
        Ok(())
    }
}

fn beta(lambda: f64, omega: f64) -> f64 {
    lambda / (lambda * lambda + omega * omega)
}

/// Truncated series `𝔐_N(λ)` over the entries with `n ≤ N`, using `α′`.
pub fn weyl_series(
    data: &SpectralDataSet,
    config: &WeylSeriesConfig,
    lambda: Complex64,
) -> Result<CMat> {
    config.check()?;
    let n_cut = config.n_max.unwrap_or(usize::MAX);
    let leaders: Vec<usize> = data
        .groups
        .iter()
        .map(|g| g[0])
        .filter(|&i| data.entries[i].index.n <= n_cut)
        .collect();
    for &i in &leaders {
        let l = data.entries[i].lambda;
        if (lambda - l).norm() <= POLE_TOL * (1.0 + l.abs()) {
            return Err(Error::PoleHit(format!("{lambda}")));
        }
    }
    let partial: Vec<CMat> = leaders
        .par_chunks(SERIES_BLOCK)
        .map(|block| {
            let mut acc = CMat::zeros(data.m, data.m);
            for &i in block {
                let e = &data.entries[i];
                let c =
                    Complex64::new(1.0, 0.0) / (lambda - e.lambda) + beta(e.lambda, config.omega);
                acc += e.alpha.map(|v| v * c);
            }
            acc
        })
        .collect();
    Ok(partial
        .into_iter()
        .fold(CMat::zeros(data.m, data.m), |a, b| a + b))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Scalar summands `ρʲ(1/(λ - ρ²) + β(ρ²))`, `j = 0, 1, 2`.
fn g_terms(rho: Complex64, lambda: Complex64, omega: f64) -> [Complex64; 3] {
    let r2 = rho * rho;
    let base = Complex64::new(1.0, 0.0) / (lambda - r2) + r2 / (r2 * r2 + omega * omega);
    [base, base * rho, base * r2]
}

/// `Σ_{n ≥ start} g_j(n + r)` for `j = 0, 1, 2`: explicit terms, then the
/// midpoint Euler–Maclaurin remainder with one derivative correction.
fn scalar_tails(
    r: f64,
    start: usize,
    lambda: Complex64,
    omega: f64,
    gl: &(Vec<f64>, Vec<f64>),
) -> [Complex64; 3] {
    let extra = 2000 + (50.0 * (lambda.norm().sqrt() + omega.sqrt())) as usize;
    let stop = start + extra;
    let mut s = [Complex64::new(0.0, 0.0); 3];
    for n in start..stop {
        let g = g_terms(Complex64::new(n as f64 + r, 0.0), lambda, omega);
        for j in 0..3 {
            s[j] += g[j];
        }
    }
    // ∫_{a}^∞ g(ρ)dρ with u = 1/ρ on (0, 1/a)
    let a = stop as f64 - 0.5 + r;
    let u0 = 1.0 / a;
    for (x, w) in gl.0.iter().zip(&gl.1) {
        let u = 0.5 * u0 * (x + 1.0);
        let g = g_terms(Complex64::new(1.0 / u, 0.0), lambda, omega);
        for j in 0..3 {
            s[j] += g[j] * (0.5 * u0 * w / (u * u));
        }
    }
    let h = 1e-3 * a;
    let gp = g_terms(Complex64::new(a + h, 0.0), lambda, omega);
    let gm = g_terms(Complex64::new(a - h, 0.0), lambda, omega);
    for j in 0..3 {
        s[j] -= (gp[j] - gm[j]) / (2.0 * h) / 24.0;
    }
    s
}

/// Series of exact zero-case data summed to infinity: explicit entries up to
/// the top row, then the continuation `λ = (n + r)²`,
/// `α′ = (2/π)(T1 + ρT1⊥)A(T1 + ρT1⊥)` of the top-row pattern.
#[derive(Debug, Clone)]
pub struct ZeroSeries {
    data: SpectralDataSet,
    t1: CMat,
    /// `(r, T1AT1, T1AT1⊥ + T1⊥AT1, T1⊥AT1⊥)` per top-row group.
    tail: Vec<(f64, [CMat; 3])>,
    omega: f64,
    gl: (Vec<f64>, Vec<f64>),
}

impl ZeroSeries {
    pub fn from_dataset(data: &SpectralDataSet, t1: &CMat, omega: f64) -> Result<Self> {
        let m = data.m;
        let n_top = data.n_max();
        if (1..=m).any(|k| data.position(SpectralIndex::new(n_top, k)).is_none()) || n_top == 0 {
            return Err(Error::InvalidData(
                "zero-case series needs a complete top row".into(),
            ));
        }
        let t1p = eye(m) - t1;
        let mut tail = Vec::new();
        for g in &data.groups {
            let e = &data.entries[g[0]];
            if e.index.n != n_top {
                continue;
            }
            let rho = e.lambda.sqrt();
            let ti = t1 + t1p.scale(1.0 / rho);
            let a = (&ti * &e.alpha * &ti).scale(PI / 2.0);
            let blocks = [
                t1 * &a * t1,
                t1 * &a * &t1p + &t1p * &a * t1,
                &t1p * &a * &t1p,
            ];
            tail.push((rho - n_top as f64, blocks));
        }
        Ok(ZeroSeries {
            data: data.clone(),
            t1: t1.clone(),
            tail,
            omega,
            gl: gauss_legendre(TAIL_NODES),
        })
    }

    pub fn t1(&self) -> &CMat {
        &self.t1
    }

    /// `𝔐⁰(λ)` including all terms.
    pub fn eval(&self, lambda: Complex64) -> Result<CMat> {
        let cfg = WeylSeriesConfig {
            omega: self.omega,
            n_max: None,
        };
        let mut acc = weyl_series(&self.data, &cfg, lambda)?;
        let start = self.data.n_max() + 1;
        for (r, blocks) in &self.tail {
            let s = scalar_tails(*r, start, lambda, self.omega, &self.gl);
            for j in 0..3 {
                acc += blocks[j].map(|v| v * s[j] * (2.0 / PI));
            }
        }
        Ok(acc)
    }
}

/// `C⁰* = lim_{τ→∞} (τT1⊥ - 𝔐⁰(-τ²))` from exact zero-case data, by
/// quadratic extrapolation in `1/τ` from `τ ∈ {2τ₁, 4τ₁, 8τ₁}`,
/// `τ₁ = max(n_max/4, 4)`, checked against `{τ₁, 2τ₁, 4τ₁}`.
#[allow(non_snake_case)]
pub fn C0_star(zero_data: &SpectralDataSet, t1: &CMat, config: &WeylSeriesConfig) -> Result<CMat> {
    config.check()?;
    let series = ZeroSeries::from_dataset(zero_data, t1, config.omega)?;
    c0_star_of(&series)
}

/// [`C0_star`] for an already built series.
pub fn c0_star_of(series: &ZeroSeries) -> Result<CMat> {
    let m = series.t1.nrows();
    let t1p = eye(m) - &series.t1;
    let f = |tau: f64| -> Result<CMat> {
        Ok(t1p.scale(tau) - series.eval(Complex64::new(-tau * tau, 0.0))?)
    };
    let tau = (series.data.n_max() as f64 / 4.0).max(4.0);
    let fs = [f(tau)?, f(2.0 * tau)?, f(4.0 * tau)?, f(8.0 * tau)?];
    let us = [1.0 / tau, 0.5 / tau, 0.25 / tau, 0.125 / tau];
    let extrapolate = |lo: usize| {
        let w = extrapolation_weights(&us[lo..lo + 3], 2);
        fs[lo..lo + 3]
            .iter()
            .zip(&w)
            .fold(CMat::zeros(m, m), |a, (x, wi)| a + x.scale(*wi))
    };
    let c = extrapolate(1);
    let check = extrapolate(0);
    let scale = 1.0 + op_norm(&c);
    if max_abs(&(&c - &check)) > 1e-6 * scale {
        return Err(Error::NoConvergence(format!(
            "C0* estimates differ by {:e}",
            max_abs(&(&c - &check))
        )));
    }
    Ok(hermitize(&c))
}

/// Recovered `T1` with its complement and snap distance.
#[derive(Debug, Clone, PartialEq)]
pub struct T1Recovery {
    pub t1: CMat,
    pub t1_perp: CMat,
    pub snap_distance: f64,
}

/// `G(n) = (π/2) Σ_k α′_nk / λ_nk`, which tends to `T1⊥`.
fn normalized_row(data: &SpectralDataSet, n: usize) -> Option<CMat> {
    let mut acc = CMat::zeros(data.m, data.m);
    for k in 1..=data.m {
        let i = data.position(SpectralIndex::new(n, k))?;
        let l = data.entries[i].lambda;
        if l <= 0.0 {
            return None;
        }
        acc += data.alpha_prime(i).scale(PI / 2.0 / l);
    }
    Some(acc)
}

/// Constant term of a tapered fit `c0 + c/n²` over all given rows.
fn fitted_limit(vals: &[(usize, CMat)]) -> CMat {
    let m = vals[0].1.nrows();
    let ns: Vec<usize> = vals.iter().map(|v| v.0).collect();
    let w = tapered_weights(&ns, &[0, 2]);
    vals.iter()
        .zip(&w)
        .fold(CMat::zeros(m, m), |a, (v, wi)| a + v.1.scale(*wi))
}

/// `G(n)` predicted by the zero-case model `(T1, {(r, A)})`.
fn model_row(t1: &CMat, clusters: &[(f64, CMat)], n: usize) -> CMat {
    let m = t1.nrows();
    let t1p = eye(m) - t1;
    clusters.iter().fold(CMat::zeros(m, m), |acc, (r, a)| {
        let s = t1.scale(1.0 / (n as f64 + r)) + &t1p;
        acc + &s * a * &s
    })
}

/// Clusters of an extraction with the projectors made mutually orthogonal
/// and summing to `I`.
fn consistent_clusters(extraction: &RAExtraction) -> Result<Vec<(f64, CMat)>> {
    let ranks: Vec<usize> = extraction.clusters.iter().map(|c| c.ks.len()).collect();
    let raw: Vec<CMat> = extraction.clusters.iter().map(|c| c.a.clone()).collect();
    let projectors = orthogonalize_projectors(&raw, &ranks)?;
    Ok(extraction
        .clusters
        .iter()
        .map(|c| c.r)
        .zip(projectors)
        .collect())
}

/// `T1⊥` as the projector limit of `G(n) = (π/2)Σ_k α′_nk/λ_nk`.
///
/// A first estimate fits `c0 + c/n²` with a taper over `(N/4, N]`. It is
/// refined by extrapolating `G` minus the prediction of the zero-case model
/// built from the current `T1` and the extracted `(r_k, A_k)`, which removes
/// the smooth part of the remainder.
#[allow(non_snake_case)]
pub fn recover_T1(data: &SpectralDataSet) -> Result<T1Recovery> {
    let n_max = data.n_max();
    if n_max < 16 {
        return Err(Error::InvalidData(format!(
            "recovering T1 needs n_max >= 16, got {n_max}"
        )));
    }
    let vals: Vec<(usize, CMat)> = (n_max / 4 + 1..=n_max)
        .map(|n| normalized_row(data, n).map(|g| (n, g)))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidData("incomplete rows in the data".into()))?;
    let first = hermitize(&fitted_limit(&vals));
    let top: Vec<&CMat> = vals
        .iter()
        .filter(|v| v.0 > n_max / 2)
        .map(|v| &v.1)
        .collect();
    let mean = top
        .iter()
        .fold(CMat::zeros(data.m, data.m), |a, v| a + *v)
        .scale(1.0 / top.len() as f64);
    if op_norm(&(&first - hermitize(&mean))) > T1_CONVERGENCE_LIMIT {
        return Err(Error::NoConvergence("T1-perp estimates disagree".into()));
    }
    let snap = snap_to_projector(&first, None);
    if snap.max_eig_deviation > T1_SNAP_LIMIT {
        return Err(Error::NoConvergence(format!(
            "T1-perp estimate is {:.3} away from a projector",
            snap.max_eig_deviation
        )));
    }
    let rank = trace(&snap.projector).re.round() as usize;
    let mut t1_perp = snap.projector;
    let mut distance = snap.distance;
    for _ in 0..T1_REFINE_STEPS {
        let t1 = eye(data.m) - &t1_perp;
        let Ok(clusters) = extract_r_A(data, &t1).and_then(|ex| consistent_clusters(&ex)) else {
            break;
        };
        let resid: Vec<(usize, CMat)> = vals
            .iter()
            .map(|(n, g)| (*n, g - model_row(&t1, &clusters, *n)))
            .collect();
        let raw = hermitize(&(&t1_perp + fitted_limit(&resid)));
        let next = snap_to_projector(&raw, Some(rank));
        let change = op_norm(&(&next.projector - &t1_perp));
        t1_perp = next.projector;
        distance = next.distance;
        if change < 1e-15 {
            break;
        }
    }
    Ok(T1Recovery {
        t1: eye(data.m) - &t1_perp,
        t1_perp,
        snap_distance: distance,
    })
}

/// Canonical solution `Ã = E + tI`, `B̃ = I - tE` of `(tA + B)⁻¹(A - tB) = E`.
#[allow(non_snake_case)]
pub fn solve_AB(e: &CMat, t: f64) -> Result<(CMat, CMat)> {
    let m = e.nrows();
    let a = e + eye(m).scale(t);
    let b = eye(m) - e.scale(t);
    let lhs = a.scale(t) + &b;
    let check =
        solve(&lhs, &(&a - b.scale(t))).map_err(|_| Error::SingularCombination(format!("{t}")))?;
    if max_abs(&(check - e)) > 1e-10 * (1.0 + max_abs(e)) {
        return Err(Error::SingularCombination(format!("{t}")));
    }
    Ok((a, b))
}

/// Recovered `T2` with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct T2Recovery {
    pub t2: CMat,
    /// `s_{rank+1}(D*) / (‖Ã‖ + ‖B̃‖)`.
    pub snap_distance: f64,
    pub rho_star: f64,
    pub rank: usize,
}

fn cyclic_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// First admissible `ρ*` in `0.26, 0.33, ...` at least `0.05` away from every
/// `r_k` (mod 1) and from `1/2`, after skipping `skip` admissible values.
fn choose_rho_star(roots: &[f64], skip: usize) -> Result<f64> {
    let mut rho = RHO_STAR_START;
    let mut left = skip;
    while rho < 1.0 {
        let clear = roots
            .iter()
            .all(|&r| cyclic_dist(rho, r) >= RHO_STAR_CLEARANCE)
            && (rho - 0.5).abs() >= RHO_STAR_CLEARANCE;
        if clear {
            if left == 0 {
                return Ok(rho);
            }
            left -= 1;
        }
        rho += RHO_STAR_STEP;
    }
    Err(Error::RhoStarUnusable(format!(
        "no admissible value for roots {roots:?}"
    )))
}

/// Eigenvalues above 1/2: the compressions `T1 A T1` at `r = 0` and
/// `T1⊥ A T1⊥` at `r = 1/2` have eigenvalues 0 or 1.
fn count_above_half(a: &CMat) -> usize {
    hermitian_eigen(a).0.iter().filter(|&&v| v > 0.5).count()
}

fn zero_model(extraction: &RAExtraction, t1: &CMat) -> Result<(ZeroCaseModel, usize)> {
    let m = t1.nrows();
    let mut roots = extraction.r.clone();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let t1p = eye(m) - t1;
    let mut p = 0;
    let mut q = 0;
    let mut generic = 0;
    let projectors = consistent_clusters(extraction)?;
    let mut residues = Vec::new();
    let mut zero_mult = 0;
    for (c, (_, a)) in extraction.clusters.iter().zip(projectors) {
        if c.r.abs() < 1e-12 {
            p = count_above_half(&(t1 * &a * t1));
            zero_mult = c.ks.len();
        } else if (c.r - 0.5).abs() < 1e-12 {
            q = count_above_half(&(&t1p * &a * &t1p));
        } else {
            generic += c.ks.len();
        }
        residues.push((c.r, a));
    }
    residues.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    if generic % 2 != 0 || zero_mult < p {
        return Err(Error::RankMismatch(format!(
            "root pattern {roots:?} is not admissible"
        )));
    }
    let model = ZeroCaseModel {
        m,
        roots,
        residues,
        p,
        p_perp: zero_mult - p,
    };
    Ok((model, p + q + generic / 2))
}

/// `T2` from the limits `(r_k, A_k)` and `T1`.
#[allow(non_snake_case)]
pub fn recover_T2(
    extraction: &RAExtraction,
    t1: &CMat,
    config: &WeylSeriesConfig,
) -> Result<T2Recovery> {
    recover_t2_at(extraction, t1, config, 0)
}

/// As [`recover_T2`], using the `skip`-th admissible `ρ*` instead of the first.
pub fn recover_t2_at(
    extraction: &RAExtraction,
    t1: &CMat,
    config: &WeylSeriesConfig,
    skip: usize,
) -> Result<T2Recovery> {
    config.check()?;
    let m = t1.nrows();
    let (model, rank) = zero_model(extraction, t1)?;
    let n_series = config.n_max.unwrap_or(32);
    let data = zero_spectral_data_from(&model, t1, n_series)?;
    let series = ZeroSeries::from_dataset(&data, t1, config.omega)?;
    let c0 = c0_star_of(&series)?;
    let rho = choose_rho_star(&model.roots, skip)?;
    let m0 = series.eval(Complex64::new(rho * rho, 0.0))? + c0;
    let t1p = eye(m) - t1;
    let e0 = (t1 + t1p.scale(1.0 / rho)) * m0 * (t1.scale(rho) + &t1p);
    let t = (rho * PI).tan();
    let (a, b) = solve_AB(&e0, t)?;
    let scale = op_norm(&a) + op_norm(&b);
    let d = a * t1 - b * &t1p;
    let (t2, _) = projector_onto_top(&d.adjoint(), rank);
    let snap_distance = singular_values(&d).get(rank).copied().unwrap_or(0.0) / scale;
    Ok(T2Recovery {
        t2,
        snap_distance,
        rho_star: rho,
        rank,
    })
}

/// Both projectors from spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct T12Recovery {
    pub t1: T1Recovery,
    pub t2: T2Recovery,
    pub extraction: RAExtraction,
}

impl T12Recovery {
    pub fn boundary(&self) -> Result<BoundaryData> {
        BoundaryData::from_projectors(self.t1.t1.clone(), self.t2.t2.clone())
    }

    pub fn snap_distance(&self) -> f64 {
        self.t1
            .snap_distance
            .max(self.t2.snap_distance)
            .max(self.extraction.max_snap_distance())
    }
}

/// `T1` from the weight asymptotics, `(r_k, A_k)` by extrapolation, then `T2`.
#[allow(non_snake_case)]
pub fn algorithm_T12(data: &SpectralDataSet, config: &WeylSeriesConfig) -> Result<T12Recovery> {
    let t1 = recover_T1(data)?;
    let extraction = extract_r_A(data, &t1.t1)?;
    let t2 = recover_T2(&extraction, &t1.t1, config)?;
    Ok(T12Recovery { t1, t2, extraction })
}

/// `σ - H◇` with `H2 + T2 H◇ T2`; spectral data are unchanged when
/// `H◇ = T1⊥ H◇ T1⊥` is Hermitian.
pub fn apply_transform(problem: &ProblemL, h_diamond: &CMat) -> Result<ProblemL> {
    let b = &problem.boundary;
    if h_diamond.nrows() != b.m || h_diamond.ncols() != b.m {
        return Err(Error::Dimension(format!(
            "H-diamond must be {}x{}",
            b.m, b.m
        )));
    }
    let scale = 1.0 + max_abs(h_diamond);
    let t1p = b.t1_perp();
    if herm_defect(h_diamond) > 1e-12 * scale {
        return Err(Error::BadDiamond("not Hermitian".into()));
    }
    if max_abs(&(&t1p * h_diamond * &t1p - h_diamond)) > 1e-12 * scale {
        return Err(Error::BadDiamond("must equal T1-perp H T1-perp".into()));
    }
    let h2 = hermitize(&(&b.h2 + &b.t2 * h_diamond * &b.t2));
    let boundary = BoundaryData {
        m: b.m,
        t1: b.t1.clone(),
        t2: b.t2.clone(),
        h1: b.h1.clone(),
        h2,
    };
    ProblemL::new(problem.sigma.shifted(&(-h_diamond)), boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, filled, zeros};
    use crate::zerocase::{zero_spectral_data, M0_eval};

    fn dd() -> BoundaryData {
        BoundaryData::dirichlet(1)
    }
    fn rr() -> BoundaryData {
        BoundaryData::from_projectors(eye(1), eye(1)).unwrap()
    }
    fn mixed() -> BoundaryData {
        BoundaryData::from_projectors(diag_real(&[1.0, 0.0]), diag_real(&[0.0, 1.0])).unwrap()
    }
    fn star() -> BoundaryData {
        BoundaryData::from_projectors(zeros(3), filled(3, 1.0 / 3.0)).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(TAIL_NODES);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_series_converges_at_first_order() {
        let cfg = WeylSeriesConfig::default();
        let d = zero_spectral_data(&dd(), 800).unwrap();
        let c0 = C0_star(&d.truncated(64).unwrap(), &zeros(1), &cfg).unwrap();
        let exact = 1.0 / PI.tanh();
        let err = |n: usize| {
            let s = weyl_series(
                &d,
                &WeylSeriesConfig {
                    omega: 1.0,
                    n_max: Some(n),
                },
                Complex64::new(-1.0, 0.0),
            )
            .unwrap();
            (s[(0, 0)] + c0[(0, 0)] - exact).norm()
        };
        let (e400, e800) = (err(400), err(800));
        assert!(e400 < 5e-3, "{e400}");
        assert!((e400 / e800 - 2.0).abs() < 0.1, "{e400} {e800}");
    }

    #[test]
    fn full_zero_series_matches_closed_form() {
        for b in [dd(), rr(), mixed(), star()] {
            let cfg = WeylSeriesConfig::default();
            let d = zero_spectral_data(&b, 32).unwrap();
            let c0 = C0_star(&d, &b.t1, &cfg).unwrap();
            let s = ZeroSeries::from_dataset(&d, &b.t1, 1.0).unwrap();
            for lam in [
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.3, 0.7),
                Complex64::new(2.0, -1.0),
            ] {
                let got = s.eval(lam).unwrap() + &c0;
                let want = M0_eval(lam, &b).unwrap();
                assert!(max_abs(&(got - want)) < 1e-8, "{lam}");
            }
        }
    }

    #[test]
    fn mixed_c0_is_diagonal() {
        let b = mixed();
        let c0 = C0_star(
            &zero_spectral_data(&b, 32).unwrap(),
            &b.t1,
            &WeylSeriesConfig::default(),
        )
        .unwrap();
        assert!(c0[(0, 1)].norm() < 1e-10 && c0[(1, 0)].norm() < 1e-10);
    }

    #[test]
    fn series_is_hermitian_symmetric_and_detects_poles() {
        let d = zero_spectral_data(&mixed(), 20).unwrap();
        let cfg = WeylSeriesConfig::default();
        let l = Complex64::new(0.7, 0.4);
        let a = weyl_series(&d, &cfg, l).unwrap();
        let b = weyl_series(&d, &cfg, l.conj()).unwrap();
        assert!(max_abs(&(b.adjoint() - a)) < 1e-12);
        assert!(matches!(
            weyl_series(&d, &cfg, Complex64::new(0.25, 0.0)),
            Err(Error::PoleHit(_))
        ));
    }

    #[test]
    fn omega_changes_series_by_a_constant() {
        let d = zero_spectral_data(&star(), 400).unwrap();
        let diff = |l: f64| {
            let a = weyl_series(
                &d,
                &WeylSeriesConfig {
                    omega: 1.0,
                    n_max: None,
                },
                Complex64::new(l, 0.0),
            )
            .unwrap();
            let b = weyl_series(
                &d,
                &WeylSeriesConfig {
                    omega: 2.0,
                    n_max: None,
                },
                Complex64::new(l, 0.0),
            )
            .unwrap();
            a - b
        };
        let base = diff(-1.0);
        for l in [-3.0, 0.1, 0.6, 1.7] {
            assert!(max_abs(&(diff(l) - &base)) < 1e-4);
        }
    }

    #[test]
    fn recover_t1_on_examples() {
        let t = recover_T1(&zero_spectral_data(&dd(), 16).unwrap()).unwrap();
        assert!(max_abs(&t.t1) < 1e-12);
        let t = recover_T1(&zero_spectral_data(&rr(), 16).unwrap()).unwrap();
        assert!(max_abs(&(t.t1 - eye(1))) < 1e-12);
        let t = recover_T1(&zero_spectral_data(&mixed(), 16).unwrap()).unwrap();
        assert!(max_abs(&(t.t1 - diag_real(&[1.0, 0.0]))) < 1e-10);
    }

    #[test]
    fn solve_ab_examples() {
        let (a, b) = solve_AB(&zeros(2), 1.0).unwrap();
        assert_eq!(a, eye(2));
        assert_eq!(b, eye(2));
        let rho: f64 = 0.26;
        let e = CMat::from_element(1, 1, Complex64::new(1.0 / (rho * PI).tan(), 0.0));
        let (a, b) = solve_AB(&e, (rho * PI).tan()).unwrap();
        assert!((a[(0, 0)].re - (1.0 / (rho * PI).tan() + (rho * PI).tan())).abs() < 1e-12);
        assert!(b[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn exact_recovery_on_examples() {
        for b in [dd(), rr(), mixed(), star()] {
            let d = zero_spectral_data(&b, 16).unwrap();
            let rec = algorithm_T12(&d, &WeylSeriesConfig::default()).unwrap();
            assert!(max_abs(&(&rec.t1.t1 - &b.t1)) < 1e-8);
            assert!(
                max_abs(&(&rec.t2.t2 - &b.t2)) < 1e-8,
                "{} vs {}",
                rec.t2.t2,
                b.t2
            );
        }
    }

    #[test]
    fn t2_is_independent_of_rho_star() {
        let b = star();
        let d = zero_spectral_data(&b, 16).unwrap();
        let ex = extract_r_A(&d, &b.t1).unwrap();
        let cfg = WeylSeriesConfig::default();
        let t0 = recover_t2_at(&ex, &b.t1, &cfg, 0).unwrap();
        for skip in 1..3 {
            let t = recover_t2_at(&ex, &b.t1, &cfg, skip).unwrap();
            assert!(t.rho_star != t0.rho_star);
            assert!(max_abs(&(&t.t2 - &t0.t2)) < 1e-8);
        }
    }

    #[test]
    fn diamond_must_live_on_t1_perp() {
        let b = BoundaryData::from_projectors(diag_real(&[1.0, 0.0]), filled(2, 0.5)).unwrap();
        let p = ProblemL::zero_potential(b, 4).unwrap();
        assert_eq!(apply_transform(&p, &zeros(2)).unwrap(), p);
        assert!(matches!(
            apply_transform(&p, &diag_real(&[0.1, 0.0])),
            Err(Error::BadDiamond(_))
        ));
        let q = apply_transform(&p, &diag_real(&[0.0, 0.4])).unwrap();
        assert!((q.sigma.cells()[0][(1, 1)].re + 0.4).abs() < 1e-15);
    }
}
