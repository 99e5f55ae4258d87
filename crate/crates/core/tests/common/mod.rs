//! Random problem generators shared by the integration tests.
#![allow(dead_code)]

use matsl_core::linalg::{hermitize, op_norm, zeros, CMat};
use matsl_core::{BoundaryData, ProblemL, SigmaField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Hermitian `m×m` matrix with spectral norm `amp`.
pub fn rand_herm(rng: &mut ChaCha8Rng, m: usize, amp: f64) -> CMat {
    let a = CMat::from_fn(m, m, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = hermitize(&a);
    h.scale(amp / op_norm(&h).max(1e-300))
}

/// Random orthogonal projector of the given rank.
pub fn rand_proj(rng: &mut ChaCha8Rng, m: usize, rank: usize) -> CMat {
    let a = CMat::from_fn(m, m, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    if rank == 0 {
        return zeros(m);
    }
    let q = a.qr().q();
    let q = q.columns(0, rank).into_owned();
    hermitize(&(&q * q.adjoint()))
}

/// Random projector pair with random ranks.
pub fn rand_boundary(rng: &mut ChaCha8Rng, m: usize) -> BoundaryData {
    let r1 = rng.gen_range(0..=m);
    let r2 = rng.gen_range(0..=m);
    let t1 = rand_proj(rng, m, r1);
    let t2 = rand_proj(rng, m, r2);
    BoundaryData::from_projectors(t1, t2).expect("random projectors are valid")
}

/// Random piecewise-constant `σ` with `cells` cells of norm `amp`.
pub fn rand_sigma(rng: &mut ChaCha8Rng, m: usize, cells: usize, amp: f64) -> SigmaField {
    SigmaField::new(m, (0..cells).map(|_| rand_herm(rng, m, amp)).collect())
        .expect("random cells are Hermitian")
}

pub fn problem(sigma: SigmaField, b: BoundaryData) -> ProblemL {
    ProblemL::new(sigma, b).expect("matching sizes")
}
