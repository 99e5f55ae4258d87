//! Problem description: boundary projectors, the piecewise-constant matrix
//! potential primitive, the index set of the spectrum and the transform that
//! removes `H1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, eye, herm_defect, max_abs, numerical_rank, CMat};

/// Entrywise tolerance for projector and Hermiticity checks.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Relative singular-value threshold for subspace dimensions.
pub const SUBSPACE_RANK_TOL: f64 = 1e-8;

/// Boundary data `T1, T2, H1, H2` of
/// `T1 (Y'(0) - H1 Y(0)) - T1⊥ Y(0) = 0` and
/// `T2 (Y'(π) - H2 Y(π)) - T2⊥ Y(π) = 0` (quasi-derivatives).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub m: usize,
    pub t1: CMat,
    pub t2: CMat,
    pub h1: CMat,
    pub h2: CMat,
}

impl BoundaryData {
    pub fn t1_perp(&self) -> CMat {
        eye(self.m) - &self.t1
    }

    pub fn t2_perp(&self) -> CMat {
        eye(self.m) - &self.t2
    }

    /// `p = dim(Ran T1 ∩ Ran T2)`.
    pub fn p(&self) -> usize {
        intersection_dim(&self.t1_perp(), &self.t2_perp())
    }

    /// `p⊥ = dim(Ker T1 ∩ Ker T2)`.
    pub fn p_perp(&self) -> usize {
        intersection_dim(&self.t1, &self.t2)
    }

    /// Dirichlet at both ends, `H = 0`.
    pub fn dirichlet(m: usize) -> Self {
        let z = CMat::zeros(m, m);
        BoundaryData {
            m,
            t1: z.clone(),
            t2: z.clone(),
            h1: z.clone(),
            h2: z,
        }
    }

    /// Projectors only, `H1 = H2 = 0`.
    pub fn from_projectors(t1: CMat, t2: CMat) -> Result<Self> {
        let m = t1.nrows();
        validate_boundary(t1, t2, CMat::zeros(m, m), CMat::zeros(m, m), m)
    }
}

/// `dim(Ker A ∩ Ker B)` for projectors `A`, `B` via the rank of `[A; B]`.
fn intersection_dim(a: &CMat, b: &CMat) -> usize {
    let m = a.nrows();
    let mut stacked = CMat::zeros(2 * m, m);
    stacked.view_mut((0, 0), (m, m)).copy_from(a);
    stacked.view_mut((m, 0), (m, m)).copy_from(b);
    m - numerical_rank(&stacked, SUBSPACE_RANK_TOL, SUBSPACE_RANK_TOL)
}

/// Check the structural requirements on boundary data.
pub fn validate_boundary(t1: CMat, t2: CMat, h1: CMat, h2: CMat, m: usize) -> Result<BoundaryData> {
    if m == 0 {
        return Err(Error::Dimension("m must be positive".into()));
    }
    for (mat, name) in [(&t1, "T1"), (&t2, "T2"), (&h1, "H1"), (&h2, "H2")] {
        ensure_square(mat, m, name)?;
    }
    for (t, name) in [(&t1, "T1"), (&t2, "T2")] {
        if herm_defect(t) > STRUCTURE_TOL {
            return Err(Error::NotProjector(format!("{name} is not Hermitian")));
        }
        if max_abs(&(t * t - t)) > STRUCTURE_TOL {
            return Err(Error::NotProjector(format!("{name} is not idempotent")));
        }
    }
    for (h, t, name) in [(&h1, &t1, "H1"), (&h2, &t2, "H2")] {
        if herm_defect(h) > STRUCTURE_TOL {
            return Err(Error::BadH(format!("{name} is not Hermitian")));
        }
        if max_abs(&(t * h * t - h)) > STRUCTURE_TOL {
            return Err(Error::BadH(format!("{name} differs from T {name} T")));
        }
    }
    Ok(BoundaryData { m, t1, t2, h1, h2 })
}

/// Piecewise-constant Hermitian matrix function on `(0, π)`: cell `i` holds
/// the value on `(iπ/N, (i+1)π/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaField {
    m: usize,
    cells: Vec<CMat>,
}

impl SigmaField {
    pub fn new(m: usize, cells: Vec<CMat>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidData("sigma needs at least one cell".into()));
        }
        for (i, c) in cells.iter().enumerate() {
            ensure_square(c, m, &format!("sigma cell {i}"))?;
            if herm_defect(c) > STRUCTURE_TOL {
                return Err(Error::NotHermitian(format!("sigma cell {i}")));
            }
        }
        Ok(SigmaField { m, cells })
    }

    pub fn zero(m: usize, n: usize) -> Self {
        SigmaField {
            m,
            cells: vec![CMat::zeros(m, m); n.max(1)],
        }
    }

    pub fn constant(value: CMat, n: usize) -> Result<Self> {
        let m = value.nrows();
        Self::new(m, vec![value; n.max(1)])
    }

    /// Diagonal field from scalar per-component cell values; every component
    /// must have the same cell count.
    pub fn diagonal(components: &[Vec<f64>]) -> Result<Self> {
        let m = components.len();
        let n = components.first().map_or(0, |c| c.len());
        if m == 0 || n == 0 || components.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidData(
                "diagonal sigma needs equal, nonempty cell counts".into(),
            ));
        }
        let cells = (0..n)
            .map(|i| {
                let d: Vec<f64> = components.iter().map(|c| c[i]).collect();
                crate::linalg::diag_real(&d)
            })
            .collect();
        Self::new(m, cells)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[CMat] {
        &self.cells
    }

    pub fn cell_width(&self) -> f64 {
        PI / self.cells.len() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| max_abs(c) == 0.0)
    }

    /// Largest spectral norm over the cells.
    pub fn sup_norm(&self) -> f64 {
        self.cells
            .iter()
            .map(crate::linalg::op_norm)
            .fold(0.0, f64::max)
    }

    /// Split every cell into `factor` equal cells (values unchanged).
    pub fn refine(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let cells = self
            .cells
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.clone(), factor))
            .collect();
        SigmaField { m: self.m, cells }
    }

    /// Add the constant matrix `shift` on every cell.
    pub fn shifted(&self, shift: &CMat) -> Self {
        SigmaField {
            m: self.m,
            cells: self.cells.iter().map(|c| c + shift).collect(),
        }
    }
}

/// A complete matrix Sturm–Liouville problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemL {
    pub sigma: SigmaField,
    pub boundary: BoundaryData,
    pub p: usize,
    pub p_perp: usize,
}

impl ProblemL {
    pub fn new(sigma: SigmaField, boundary: BoundaryData) -> Result<Self> {
        if sigma.m() != boundary.m {
            return Err(Error::Dimension(format!(
                "sigma is {}x{} but boundary data is {}x{}",
                sigma.m(),
                sigma.m(),
                boundary.m,
                boundary.m
            )));
        }
        let p = boundary.p();
        let p_perp = boundary.p_perp();
        debug_assert!(p + p_perp <= boundary.m);
        Ok(ProblemL {
            sigma,
            boundary,
            p,
            p_perp,
        })
    }

    pub fn m(&self) -> usize {
        self.boundary.m
    }

    /// Zero potential on `n` cells.
    pub fn zero_potential(boundary: BoundaryData, n: usize) -> Result<Self> {
        Self::new(SigmaField::zero(boundary.m, n), boundary)
    }

    pub fn is_zero_case(&self) -> bool {
        self.sigma.is_zero()
            && max_abs(&self.boundary.h1) == 0.0
            && max_abs(&self.boundary.h2) == 0.0
    }
}

/// Index `(n, k)` of the spectrum, `k` counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpectralIndex {
    pub n: usize,
    pub k: usize,
}

impl SpectralIndex {
    pub fn new(n: usize, k: usize) -> Self {
        SpectralIndex { n, k }
    }
}

/// The index set truncated at `n <= n_max`, in lexicographic order, together
/// with `p` and `p⊥`.
pub fn index_set(boundary: &BoundaryData, n_max: usize) -> (Vec<SpectralIndex>, usize, usize) {
    let p = boundary.p();
    let p_perp = boundary.p_perp();
    (index_set_with(boundary.m, p_perp, n_max), p, p_perp)
}

pub(crate) fn index_set_with(m: usize, p_perp: usize, n_max: usize) -> Vec<SpectralIndex> {
    let mut out = Vec::with_capacity((n_max + 1) * m);
    for k in (p_perp + 1)..=m {
        out.push(SpectralIndex::new(0, k));
    }
    for n in 1..=n_max {
        for k in 1..=m {
            out.push(SpectralIndex::new(n, k));
        }
    }
    out
}

/// Move `H1` into the potential: `σ + H1`, `H1 = 0`, `H2 - T2 H1 T2`.
/// Spectral data are unchanged.
pub fn normalize_h1(problem: &ProblemL) -> ProblemL {
    let b = &problem.boundary;
    if max_abs(&b.h1) == 0.0 {
        return problem.clone();
    }
    let h2 = &b.h2 - &b.t2 * &b.h1 * &b.t2;
    let boundary = BoundaryData {
        m: b.m,
        t1: b.t1.clone(),
        t2: b.t2.clone(),
        h1: CMat::zeros(b.m, b.m),
        h2: crate::linalg::hermitize(&h2),
    };
    ProblemL {
        sigma: problem.sigma.shifted(&b.h1),
        boundary,
        p: problem.p,
        p_perp: problem.p_perp,
    }
}
