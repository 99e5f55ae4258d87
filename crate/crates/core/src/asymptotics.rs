//! Asymptotic diagnostics of spectral data and extraction of the limit
//! objects `r_k` and `A_k`.
//!
//! With `T_nk = T1 + ρ_nk T1⊥`, the data satisfy
//! `ρ_nk = n + r_k + ϰ_nk` and
//! `(π/2) Σ_{s: r_s = r_k} T_ns⁻¹ α′_ns T_ns⁻¹ = A_k + K_nk`,
//! with `{ϰ_nk}` and `{‖K_nk‖}` square summable.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde_json::json;

use crate::dataset::SpectralDataSet;
use crate::error::{Error, Result};
use crate::linalg::{eye, hermitize, op_norm, snap_to_projector, tapered_weights, CMat};

/// Tolerance for merging `r` estimates into one cluster.
const CLUSTER_TOL: f64 = 0.02;
/// Largest eigenvalue deviation from {0, 1} accepted when snapping `A`.
const SNAP_LIMIT: f64 = 0.3;
/// Largest change between the two extrapolations of a limit.
const CONVERGENCE_LIMIT: f64 = 0.05;

/// One distinct limit `r` with its projector.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCluster {
    pub r: f64,
    /// Indices `k` (1-based) whose `ρ_nk - n` tends to `r`.
    pub ks: Vec<usize>,
    /// Snapped projector `A`.
    pub a: CMat,
    /// Extrapolated estimate before snapping.
    pub a_raw: CMat,
    /// Spectral-norm distance between `a_raw` and `a`.
    pub snap_distance: f64,
}

/// Limits extracted from finite data.
#[derive(Debug, Clone, PartialEq)]
pub struct RAExtraction {
    /// `r_k` for `k = 1..m`.
    pub r: Vec<f64>,
    pub clusters: Vec<RootCluster>,
}

impl RAExtraction {
    pub fn cluster_of(&self, k: usize) -> Option<&RootCluster> {
        self.clusters.iter().find(|c| c.ks.contains(&k))
    }

    pub fn max_snap_distance(&self) -> f64 {
        self.clusters
            .iter()
            .map(|c| c.snap_distance)
            .fold(0.0, f64::max)
    }
}

/// `T_nk⁻¹ = T1 + ρ⁻¹T1⊥`, or `I` at `ρ = 0`.
pub fn t_inverse(t1: &CMat, rho: f64) -> CMat {
    if rho == 0.0 {
        return eye(t1.nrows());
    }
    t1 + (eye(t1.nrows()) - t1).scale(1.0 / rho)
}

/// Values of `n` with a complete row `(n, 1..m)` in the upper part of the data.
fn fit_range(data: &SpectralDataSet, from: usize) -> Vec<usize> {
    let n_max = data.n_max();
    (from.max(1)..=n_max)
        .filter(|&n| {
            (1..=data.m).all(|k| {
                data.position(crate::problem::SpectralIndex::new(n, k))
                    .is_some()
            })
        })
        .collect()
}

fn rho_of(data: &SpectralDataSet, n: usize, k: usize) -> f64 {
    let i = data
        .position(crate::problem::SpectralIndex::new(n, k))
        .expect("index present");
    data.entries[i].rho()
}

/// `B_n = (π/2) Σ_{k ∈ ks} T_nk⁻¹ α′_nk T_nk⁻¹`.
fn cluster_weight(data: &SpectralDataSet, t1: &CMat, n: usize, ks: &[usize]) -> CMat {
    let mut b = CMat::zeros(data.m, data.m);
    for &k in ks {
        let i = data
            .position(crate::problem::SpectralIndex::new(n, k))
            .expect("index present");
        let ti = t_inverse(t1, data.entries[i].rho());
        b += &ti * data.alpha_prime(i) * &ti;
    }
    b.scale(PI / 2.0)
}

fn extrapolate_scalar(ns: &[usize], w: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    ns.iter().zip(w).map(|(&n, wi)| wi * f(n)).sum()
}

fn extrapolate_matrix(m: usize, ns: &[usize], w: &[f64], f: impl Fn(usize) -> CMat) -> CMat {
    let mut acc = CMat::zeros(m, m);
    for (&n, wi) in ns.iter().zip(w) {
        acc += f(n).scale(*wi);
    }
    acc
}

/// Snap noisy estimates near the self-symmetric points 0 and 1/2 and
/// symmetrize noisy pairs `r, 1 - r` (the root set is invariant under
/// `r ↦ 1 - r`). Estimates flagged exact are left alone.
fn regularize_roots(mut rs: Vec<f64>, noisy: &[bool]) -> Vec<f64> {
    for (r, _) in rs.iter_mut().zip(noisy).filter(|p| *p.1) {
        if *r < CLUSTER_TOL || *r > 1.0 - CLUSTER_TOL {
            *r = 0.0;
        } else if (*r - 0.5).abs() < CLUSTER_TOL {
            *r = 0.5;
        }
    }
    let n = rs.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if !noisy[i] || paired[i] || rs[i] == 0.0 || rs[i] == 0.5 {
            continue;
        }
        if let Some(j) = (0..n).find(|&j| {
            j != i && noisy[j] && !paired[j] && (rs[i] + rs[j] - 1.0).abs() < 2.0 * CLUSTER_TOL
        }) {
            let a = 0.5 * (rs[i] + 1.0 - rs[j]);
            rs[i] = a;
            rs[j] = 1.0 - a;
            paired[i] = true;
            paired[j] = true;
        }
    }
    rs
}

/// Estimate `r_k` and `A_k` (each constant plus `1/n` trend) by
/// tapered least-squares fits over the upper three quarters of the data,
/// then snap.
#[allow(non_snake_case)]
pub fn extract_r_A(data: &SpectralDataSet, t1: &CMat) -> Result<RAExtraction> {
    extract_r_a(data, t1)
}

fn extract_r_a(data: &SpectralDataSet, t1: &CMat) -> Result<RAExtraction> {
    let m = data.m;
    let n_max = data.n_max();
    let ns = fit_range(data, n_max / 4);
    let ns_check = fit_range(data, n_max / 2);
    if ns_check.len() < 3 {
        return Err(Error::InvalidData(format!(
            "need n_max >= 4 for extrapolation, got {n_max}"
        )));
    }
    // r and A: constant plus 1/n trend (the remainder oscillates with a
    // nonzero mean). Tapered fits over (N/4, N], checked against the same
    // fits over (N/2, N].
    let w1 = tapered_weights(&ns, &[0, 1]);
    let w1_check = tapered_weights(&ns_check, &[0, 1]);
    let mut r_est = Vec::with_capacity(m);
    let mut r_noise = Vec::with_capacity(m);
    for k in 1..=m {
        let a = extrapolate_scalar(&ns, &w1, |n| rho_of(data, n, k) - n as f64);
        let b = extrapolate_scalar(&ns_check, &w1_check, |n| rho_of(data, n, k) - n as f64);
        if (a - b).abs() > CONVERGENCE_LIMIT {
            return Err(Error::NoConvergence(format!(
                "r_{k}: estimates {a} and {b}"
            )));
        }
        r_est.push(a);
        r_noise.push((a - b).abs());
    }
    // cluster the estimates in index order (they are non-decreasing)
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 1..=m {
        match groups.last_mut() {
            Some(g) if (r_est[k - 1] - r_est[g[g.len() - 1] - 1]).abs() < CLUSTER_TOL => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let means: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&k| r_est[k - 1]).sum::<f64>() / g.len() as f64)
        .collect();
    let noisy: Vec<bool> = groups
        .iter()
        .map(|g| g.iter().any(|&k| r_noise[k - 1] > 1e-8))
        .collect();
    let means = regularize_roots(means, &noisy);
    let mut r = vec![0.0; m];
    let mut clusters = Vec::with_capacity(groups.len());
    for (g, &rm) in groups.iter().zip(&means) {
        for &k in g {
            r[k - 1] = rm;
        }
        let a_raw = hermitize(&extrapolate_matrix(m, &ns, &w1, |n| {
            cluster_weight(data, t1, n, g)
        }));
        let a_top = hermitize(&extrapolate_matrix(m, &ns_check, &w1_check, |n| {
            cluster_weight(data, t1, n, g)
        }));
        if op_norm(&(&a_raw - &a_top)) > CONVERGENCE_LIMIT {
            return Err(Error::NoConvergence(format!(
                "A for r = {rm}: estimates differ by {:e}",
                op_norm(&(&a_raw - &a_top))
            )));
        }
        let snap = snap_to_projector(&a_raw, Some(g.len()));
        if snap.max_eig_deviation > SNAP_LIMIT {
            return Err(Error::NoConvergence(format!(
                "A for r = {rm} is {:.3} away from a projector",
                snap.max_eig_deviation
            )));
        }
        clusters.push(RootCluster {
            r: rm,
            ks: g.clone(),
            a: snap.projector,
            a_raw,
            snap_distance: snap.distance,
        });
    }
    Ok(RAExtraction { r, clusters })
}

/// Cauchy tail test on `v(n) ≥ 0`: the sum over `(N, 2N]` must not exceed
/// the sum over `(N/2, N]`, `N = n_max / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailTest {
    pub n: usize,
    pub recent: f64,
    pub previous: f64,
    pub pass: bool,
}

fn tail_test(per_n: &[(usize, f64)]) -> TailTest {
    let n_max = per_n.iter().map(|p| p.0).max().unwrap_or(0);
    let big_n = n_max / 2;
    let sum = |lo: usize, hi: usize| {
        per_n
            .iter()
            .filter(|p| p.0 > lo && p.0 <= hi)
            .map(|p| p.1)
            .sum::<f64>()
    };
    let recent = sum(big_n, 2 * big_n);
    let previous = sum(big_n / 2, big_n);
    TailTest {
        n: big_n,
        recent,
        previous,
        pass: recent <= previous * (1.0 + 1e-12) + 1e-28,
    }
}

fn partial_sums(per_n: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    per_n
        .iter()
        .map(|&(n, v)| {
            acc += v;
            (n, acc)
        })
        .collect()
}

/// One row of the `ϰ` report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaRow {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaReport {
    pub rows: Vec<KappaRow>,
    /// Cumulative `Σϰ²` per `n`.
    pub partial_sums: Vec<(usize, f64)>,
    pub tail: TailTest,
}

/// `ϰ_nk = ρ_nk - n - r_k` for `n ≥ 1`, partial sums of squares and the tail test.
pub fn kappa_report(data: &SpectralDataSet, r: &[f64]) -> KappaReport {
    let rows: Vec<KappaRow> = data
        .entries
        .iter()
        .filter(|e| e.index.n >= 1)
        .map(|e| {
            let rho = e.rho();
            KappaRow {
                n: e.index.n,
                k: e.index.k,
                rho,
                kappa: rho - e.index.n as f64 - r[e.index.k - 1],
            }
        })
        .collect();
    let per_n = per_n_squares(rows.iter().map(|row| (row.n, row.kappa)));
    KappaReport {
        partial_sums: partial_sums(&per_n),
        tail: tail_test(&per_n),
        rows,
    }
}

fn per_n_squares(vals: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (n, v) in vals {
        match out.last_mut() {
            Some(last) if last.0 == n => last.1 += v * v,
            _ => out.push((n, v * v)),
        }
    }
    out
}

/// One row of the weight-gap report: `‖K_nk‖` for the cluster led by `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub n: usize,
    pub k: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub partial_sums: Vec<(usize, f64)>,
    pub tail: TailTest,
}

/// `‖K_nk‖` per `n ≥ 1` and cluster, partial sums of squares and the tail test.
pub fn weight_gap_report(data: &SpectralDataSet, clusters: &[RootCluster], t1: &CMat) -> GapReport {
    let ns = fit_range(data, 1);
    let mut rows = Vec::new();
    for &n in &ns {
        for c in clusters {
            let k = c.ks[0];
            let norm = op_norm(&(cluster_weight(data, t1, n, &c.ks) - &c.a));
            rows.push(GapRow { n, k, norm });
        }
    }
    let per_n = per_n_squares(rows.iter().map(|row| (row.n, row.norm)));
    GapReport {
        partial_sums: partial_sums(&per_n),
        tail: tail_test(&per_n),
        rows,
    }
}

/// CSV with columns `n,k,rho,kappa,Knorm`.
pub fn report_csv(kappa: &KappaReport, gap: &GapReport, extraction: &RAExtraction) -> String {
    let mut out = String::from("n,k,rho,kappa,Knorm\n");
    for row in &kappa.rows {
        let lead = extraction
            .cluster_of(row.k)
            .map(|c| c.ks[0])
            .unwrap_or(row.k);
        let knorm = gap
            .rows
            .iter()
            .find(|g| g.n == row.n && g.k == lead)
            .map(|g| g.norm)
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e}",
            row.n, row.k, row.rho, row.kappa, knorm
        );
    }
    out
}

/// JSON form of the report.
pub fn report_json(
    kappa: &KappaReport,
    gap: &GapReport,
    extraction: &RAExtraction,
) -> serde_json::Value {
    let tail = |t: &TailTest| json!({ "N": t.n, "recent": t.recent, "previous": t.previous, "pass": t.pass });
    json!({
        "r": extraction.r,
        "clusters": extraction.clusters.iter().map(|c| json!({
            "r": c.r,
            "k": c.ks,
            "A": crate::io::matrix_to_json(&c.a),
            "snap_distance": c.snap_distance,
        })).collect::<Vec<_>>(),
        "kappa": kappa.rows.iter().map(|r| json!({"n": r.n, "k": r.k, "rho": r.rho, "kappa": r.kappa})).collect::<Vec<_>>(),
        "kappa_partial_sums": kappa.partial_sums,
        "kappa_tail": tail(&kappa.tail),
        "K": gap.rows.iter().map(|r| json!({"n": r.n, "k": r.k, "norm": r.norm})).collect::<Vec<_>>(),
        "K_partial_sums": gap.partial_sums,
        "K_tail": tail(&gap.tail),
    })
}
