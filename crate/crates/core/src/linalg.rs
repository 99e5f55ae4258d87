//! Small dense complex linear-algebra helpers on top of nalgebra.
//!
//! All matrices in the crate are `DMatrix<Complex64>`; the problems are
//! desk-sized (m rarely above 8), so nothing here tries to be clever about
//! allocation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(m: usize) -> CMat {
    CMat::identity(m, m)
}

pub fn zeros(m: usize) -> CMat {
    CMat::zeros(m, m)
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(m, n, |i, j| cr(rows[i][j]))
}

pub fn diag_real(d: &[f64]) -> CMat {
    let m = d.len();
    CMat::from_fn(m, m, |i, j| if i == j { cr(d[i]) } else { cr(0.0) })
}

/// Matrix with every entry equal to `v`.
pub fn filled(m: usize, v: f64) -> CMat {
    CMat::from_element(m, m, cr(v))
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entrywise deviation from Hermiticity.
pub fn herm_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let (n, k) = a.shape();
    let r = n.min(k);
    if r == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = augmented(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    vals.truncate(r);
    vals.iter().map(|v| v.max(0.0)).collect()
}

/// `[[0, A], [A†, 0]]`.
fn augmented(a: &CMat) -> CMat {
    let (n, k) = a.shape();
    let mut h = CMat::zeros(n + k, n + k);
    h.view_mut((0, n), (n, k)).copy_from(a);
    h.view_mut((n, 0), (k, n)).copy_from(&a.adjoint());
    h
}

/// Singular values (descending) and the matching left singular vectors from
/// the Hermitian eigenproblem of `[[0, A], [A†, 0]]`, whose eigenvalues are
/// `±s_i`. Small singular values keep absolute accuracy `ε‖A‖`. The complex
/// SVD of nalgebra loses up to `1e-4` on nearly rank-deficient `2×2` input.
fn augmented_svd(a: &CMat) -> (Vec<f64>, CMat) {
    let (n, k) = a.shape();
    let r = n.min(k);
    if r == 0 {
        return (Vec::new(), CMat::zeros(n, 0));
    }
    let (vals, vecs) = hermitian_eigen(&augmented(a));
    let s = vals[..r].iter().map(|v| v.max(0.0)).collect();
    let u = vecs.view((0, 0), (n, r)).scale(std::f64::consts::SQRT_2);
    // Columns for (near-)zero singular values are not determined by the
    // eigenvectors; QR keeps the leading ones and completes an orthonormal set.
    let q = u.qr().q();
    (s, q.columns(0, r).into_owned())
}

/// Spectral norm.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Number of singular values above `rel_tol * s_max` (absolute `abs_floor`
/// guards the all-zero matrix).
pub fn numerical_rank(a: &CMat, rel_tol: f64, abs_floor: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= abs_floor {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Left singular vectors sorted by descending singular value.
pub fn left_singular(a: &CMat) -> (Vec<f64>, CMat) {
    augmented_svd(a)
}

/// Orthogonal projector onto the span of the first `k` columns of `u`
/// (assumed orthonormal).
pub fn projector_from_columns(u: &CMat, k: usize) -> CMat {
    let m = u.nrows();
    let mut t = zeros(m);
    for j in 0..k {
        let col = u.column(j);
        t += col * col.adjoint();
    }
    hermitize(&t)
}

/// Orthogonal projector onto the column space of `a`, with numerical rank
/// taken at `1e-8 * s_max(a)`. Returns the zero matrix when `a` vanishes.
pub fn projector_onto_range(a: &CMat) -> CMat {
    projector_onto_range_tol(a, 1e-8)
}

pub fn projector_onto_range_tol(a: &CMat, rel_tol: f64) -> CMat {
    let m = a.nrows();
    let (s, u) = left_singular(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 1e-300 {
        return zeros(m);
    }
    let k = s.iter().filter(|&&v| v > rel_tol * smax).count();
    projector_from_columns(&u, k)
}

/// Projector onto the dominant `rank`-dimensional left singular subspace.
/// Also returns `s_{rank+1} / s_max`, the relative size of what was dropped.
pub fn projector_onto_top(a: &CMat, rank: usize) -> (CMat, f64) {
    let m = a.nrows();
    let (s, u) = left_singular(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if rank == 0 || smax <= 1e-300 {
        return (zeros(m), if smax > 0.0 { 1.0 } else { 0.0 });
    }
    let dropped = s.get(rank).copied().unwrap_or(0.0) / smax;
    (projector_from_columns(&u, rank.min(s.len())), dropped)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitize(a);
    let m = h.nrows();
    if m == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let cols: Vec<_> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (vals, CMat::from_columns(&cols))
}

/// Result of rounding a Hermitian matrix to an orthogonal projector.
#[derive(Debug, Clone)]
pub struct ProjectorSnap {
    pub projector: CMat,
    /// Spectral-norm distance between the input and the snapped projector.
    pub distance: f64,
    /// Largest distance of any eigenvalue from its rounded value in {0, 1}.
    pub max_eig_deviation: f64,
}

/// Round eigenvalues of a Hermitian matrix to {0, 1}. With `rank = Some(k)`
/// the top `k` eigenvalues go to 1 regardless of their size.
pub fn snap_to_projector(a: &CMat, rank: Option<usize>) -> ProjectorSnap {
    let h = hermitize(a);
    let (vals, vecs) = hermitian_eigen(&h);
    let k = rank.unwrap_or_else(|| vals.iter().filter(|&&v| v > 0.5).count());
    let projector = projector_from_columns(&vecs, k);
    let max_eig_deviation = vals
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < k { (v - 1.0).abs() } else { v.abs() })
        .fold(0.0, f64::max);
    let distance = op_norm(&(&h - &projector));
    ProjectorSnap {
        projector,
        distance,
        max_eig_deviation,
    }
}

/// Entrywise check of `T = T† = T²`.
pub fn is_projector(t: &CMat, tol: f64) -> bool {
    t.is_square() && herm_defect(t) <= tol && max_abs(&(t * t - t)) <= tol
}

/// Solve `a x = b` by LU with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("LU solve failed".into()))
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix inverse failed".into()))
}

/// Condition number in the spectral norm (infinite if singular).
pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn ensure_square(a: &CMat, m: usize, what: &str) -> Result<()> {
    if a.nrows() != m || a.ncols() != m {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {m}x{m}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Mutually orthogonal projectors summing to `I`, closest in the Löwdin
/// sense to the dominant `ranks[k]`-dimensional eigenspaces of `ps[k]`.
pub fn orthogonalize_projectors(ps: &[CMat], ranks: &[usize]) -> Result<Vec<CMat>> {
    let m = ps.first().map_or(0, |p| p.nrows());
    if ranks.iter().sum::<usize>() != m || ps.len() != ranks.len() {
        return Err(Error::Dimension(
            "projector ranks must add up to the size".into(),
        ));
    }
    let mut cols = Vec::with_capacity(m);
    for (p, &k) in ps.iter().zip(ranks) {
        let (_, vecs) = hermitian_eigen(p);
        cols.extend((0..k).map(|j| vecs.column(j).into_owned()));
    }
    let u = CMat::from_columns(&cols);
    let (vals, vecs) = hermitian_eigen(&(u.adjoint() * &u));
    if vals.last().copied().unwrap_or(0.0) < 1e-8 {
        return Err(Error::Singular(
            "projector ranges are linearly dependent".into(),
        ));
    }
    let inv_sqrt = &vecs
        * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            m,
            vals.iter().map(|v| Complex64::new(1.0 / v.sqrt(), 0.0)),
        ))
        * vecs.adjoint();
    let w = u * inv_sqrt;
    let mut out = Vec::with_capacity(ps.len());
    let mut start = 0;
    for &k in ranks {
        let block = w.columns(start, k).into_owned();
        out.push(hermitize(&(&block * block.adjoint())));
        start += k;
    }
    Ok(out)
}

/// Weights `w` such that `Σ w_i y_i` is the value at `u = 0` of the
/// least-squares polynomial of the given degree through `(u_i, y_i)`.
/// Linear in the data, so it applies entrywise to matrices.
pub fn extrapolation_weights(us: &[f64], degree: usize) -> Vec<f64> {
    let n = us.len();
    let d = degree.min(n.saturating_sub(1));
    let v = DMatrix::<f64>::from_fn(n, d + 1, |i, j| us[i].powi(j as i32));
    let pinv = v
        .pseudo_inverse(1e-14)
        .expect("pseudo-inverse of a Vandermonde matrix");
    pinv.row(0).iter().copied().collect()
}

/// Weights `w` such that `Σ w_i y_i` is the constant coefficient of the
/// least-squares fit `y(n) ≈ Σ_j c_j n^{-p_j}` (`powers[0]` must be 0), with
/// each sample weighted by a `sin²` taper over the range of `ns`. The taper
/// suppresses remainders that oscillate in `n`.
pub fn tapered_weights(ns: &[usize], powers: &[i32]) -> Vec<f64> {
    let len = ns.len();
    let (lo, hi) = (ns[0] as f64, ns[len - 1] as f64);
    let taper: Vec<f64> = ns
        .iter()
        .map(|&n| {
            (std::f64::consts::PI * (n as f64 - lo + 1.0) / (hi - lo + 2.0))
                .sin()
                .powi(2)
        })
        .collect();
    let k = powers.len().min(len);
    let a = DMatrix::<f64>::from_fn(len, k, |i, j| {
        taper[i].sqrt() * (ns[i] as f64).powi(-powers[j])
    });
    let pinv = a
        .pseudo_inverse(1e-14)
        .expect("pseudo-inverse of a tapered design matrix");
    (0..len).map(|i| pinv[(0, i)] * taper[i].sqrt()).collect()
}

/// Golden-section minimization of a unimodal `f` on `[a, b]` until the
/// bracket is shorter than `tol`. Returns `(argmin, min)`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
