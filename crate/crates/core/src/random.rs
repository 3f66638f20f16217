//! Seeded random instances for the property suites.
//!
//! Every generator draws from a caller-supplied [`ChaCha8Rng`], so a single
//! seed fixes a whole suite run.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::hermitian::SparseHermitian;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// A Hermitian matrix with at most `d` nonzeros per row and declared
/// sparsity exactly `d`, rescaled so its spectral norm lies in `[1/2, 1]`.
///
/// Entries are placed symmetrically: a random diagonal, then off-diagonal
/// pairs wherever both rows still have room.
pub fn hermitian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Result<SparseHermitian> {
    if n == 0 || d == 0 || d > n {
        return domain(format!("need 1 <= d <= N for a random instance, got N = {n}, d = {d}"));
    }
    let mut filled = vec![vec![false; n]; n];
    let mut count = vec![0usize; n];
    let mut entries = Vec::new();
    for j in 0..n {
        if rng.random_bool(0.5) {
            entries.push((j, j, Complex64::new(rng.random_range(-1.0..1.0), 0.0)));
            filled[j][j] = true;
            count[j] += 1;
        }
    }
    for _ in 0..4 * n * d {
        let j = rng.random_range(0..n);
        let k = rng.random_range(0..n);
        if j == k || filled[j][k] || count[j] >= d || count[k] >= d {
            continue;
        }
        entries.push((j, k, unit_complex(rng)));
        filled[j][k] = true;
        filled[k][j] = true;
        count[j] += 1;
        count[k] += 1;
    }
    if entries.is_empty() {
        entries.push((0, 0, Complex64::new(1.0, 0.0)));
    }
    let m = SparseHermitian::from_triangle(n, entries)?.with_sparsity(d)?;
    let norm = m.spectral()?.norm_bound();
    let target = rng.random_range(0.5..=1.0);
    if norm == 0.0 {
        return Ok(m);
    }
    m.scaled(target / norm)
}

/// Uniformly random direction on the unit sphere in `C^n`.
pub fn state(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    loop {
        let v = DVector::from_fn(n, |_, _| unit_complex(rng));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Random unitary from the QR factorization of a random complex matrix.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |_, _| unit_complex(rng));
    m.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;

    #[test]
    fn instances_respect_sparsity_and_norm() {
        let mut rng = seeded(11);
        for n in [2, 4, 8] {
            for d in 1..=3.min(n) {
                for _ in 0..5 {
                    let a = hermitian(&mut rng, n, d).unwrap();
                    assert_eq!(a.sparsity(), d);
                    assert!((0..n).all(|j| a.row(j).len() <= d));
                    let norm = a.spectral().unwrap().norm_bound();
                    assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&norm));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = hermitian(&mut seeded(3), 8, 3).unwrap();
        let b = hermitian(&mut seeded(3), 8, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, hermitian(&mut seeded(4), 8, 3).unwrap());
    }

    #[test]
    fn states_and_unitaries() {
        let mut rng = seeded(5);
        let psi = state(&mut rng, 6);
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert!(unitarity_defect(&unitary(&mut rng, 5)) < 1e-12);
    }

    #[test]
    fn oversized_sparsity_is_rejected() {
        assert!(hermitian(&mut seeded(0), 2, 3).is_err());
    }
}
