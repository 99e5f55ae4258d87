//! Spectral data `{λ_nk, α_nk}` with multiplicity grouping.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, max_abs, op_norm, CMat};
use crate::problem::SpectralIndex;

/// Relative λ-distance below which two eigenvalues form one group.
pub const GROUP_TOL: f64 = 1e-6;

/// One entry of a spectral data set. `alpha` is the weight matrix of the
/// whole group the entry belongs to (equal across the group).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEntry {
    pub index: SpectralIndex,
    pub lambda: f64,
    pub alpha: CMat,
    pub multiplicity: usize,
}

impl SpectralEntry {
    /// `√λ` with the sign of `λ` (negative eigenvalues give negative values).
    pub fn rho(&self) -> f64 {
        self.lambda.signum() * self.lambda.abs().sqrt()
    }
}

/// Indexed spectral data in index order, with groups of equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataSet {
    pub m: usize,
    pub entries: Vec<SpectralEntry>,
    /// Entry positions per group, in order.
    pub groups: Vec<Vec<usize>>,
}

impl SpectralDataSet {
    /// Validate ordering, Hermiticity, positivity and group consistency.
    pub fn new(m: usize, entries: Vec<SpectralEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.alpha.nrows() != m || e.alpha.ncols() != m {
                return Err(Error::Dimension(format!(
                    "alpha of entry {i} is not {m}x{m}"
                )));
            }
            if e.index.k == 0 || e.index.k > m {
                return Err(Error::InvalidData(format!(
                    "entry {i}: k = {} out of range",
                    e.index.k
                )));
            }
            if e.multiplicity == 0 {
                return Err(Error::InvalidData(format!("entry {i}: zero multiplicity")));
            }
            let norm = op_norm(&e.alpha);
            if crate::linalg::herm_defect(&e.alpha) > 1e-10 * (1.0 + norm) {
                return Err(Error::NotHermitian(format!("alpha of entry {i}")));
            }
            let (vals, _) = hermitian_eigen(&e.alpha);
            let min = vals.last().copied().unwrap_or(0.0);
            if min < -1e-8 * norm {
                return Err(Error::InvalidData(format!(
                    "alpha of entry {i} is not positive semidefinite (min eigenvalue {min:e})"
                )));
            }
        }
        for (i, w) in entries.windows(2).enumerate() {
            if w[0].index >= w[1].index {
                return Err(Error::InvalidData(format!(
                    "entries {i}, {} out of index order",
                    i + 1
                )));
            }
            if w[1].lambda < w[0].lambda - GROUP_TOL * (1.0 + w[0].lambda.abs()) {
                return Err(Error::InvalidData(format!(
                    "lambda decreases at entry {}",
                    i + 1
                )));
            }
        }
        let groups = group_entries(&entries);
        let last = groups.len().saturating_sub(1);
        for (g, members) in groups.iter().enumerate() {
            let first = &entries[members[0]];
            for &j in members {
                let e = &entries[j];
                let scale = 1.0 + op_norm(&first.alpha);
                if max_abs(&(&e.alpha - &first.alpha)) > 1e-8 * scale {
                    return Err(Error::InvalidData(format!(
                        "alpha differs inside the group at entry {j}"
                    )));
                }
                let size_ok = e.multiplicity == members.len()
                    || (g == last && members.len() < e.multiplicity);
                if !size_ok {
                    return Err(Error::InvalidData(format!(
                        "entry {j}: multiplicity {} but group size {}",
                        e.multiplicity,
                        members.len()
                    )));
                }
            }
        }
        Ok(SpectralDataSet { m, entries, groups })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.entries.iter().map(|e| e.index.n).max().unwrap_or(0)
    }

    /// `α′`: the group weight on the first entry of each group, zero on the
    /// remaining members.
    pub fn alpha_prime(&self, i: usize) -> CMat {
        let e = &self.entries[i];
        if self.is_group_leader(i) {
            e.alpha.clone()
        } else {
            CMat::zeros(self.m, self.m)
        }
    }

    pub fn is_group_leader(&self, i: usize) -> bool {
        self.groups.iter().any(|g| g[0] == i)
    }

    /// Group leaders in order.
    pub fn leaders(&self) -> impl Iterator<Item = &SpectralEntry> + '_ {
        self.groups.iter().map(move |g| &self.entries[g[0]])
    }

    /// Entries with `n` in the given inclusive range.
    pub fn truncated(&self, n_max: usize) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .filter(|e| e.index.n <= n_max)
            .cloned()
            .collect();
        Self::new(self.m, entries)
    }

    /// Position of the entry with the given index.
    pub fn position(&self, index: SpectralIndex) -> Option<usize> {
        self.entries.binary_search_by(|e| e.index.cmp(&index)).ok()
    }
}

/// Maximal runs of consecutive entries whose eigenvalues agree to
/// `GROUP_TOL·(1+|λ|)`.
pub fn group_entries(entries: &[SpectralEntry]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        match groups.last_mut() {
            Some(g)
                if {
                    let l = entries[g[0]].lambda;
                    (e.lambda - l).abs() < GROUP_TOL * (1.0 + l.abs())
                } =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}
