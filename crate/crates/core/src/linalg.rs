//! Small dense helpers shared by the walk, LCU and amplification code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Candidate ordering used when extending an isometry to a unitary.
///
/// Different orderings give different (equally valid) completions; the
/// post-selected outputs must not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    #[default]
    Ascending,
    Descending,
}

const RANK_TOL: f64 = 1e-8;

/// Extends orthonormal columns to a full unitary by Gram–Schmidt against
/// standard basis vectors, orthogonalizing twice for stability.
pub fn complete_unitary(columns: &DMatrix<Complex64>, completion: Completion) -> Result<DMatrix<Complex64>> {
    let dim = columns.nrows();
    let given = columns.ncols();
    if given > dim {
        return domain(format!("{given} columns cannot be orthonormal in dimension {dim}"));
    }
    let gram = columns.adjoint() * columns;
    let err = (gram - DMatrix::identity(given, given)).norm();
    if err > 1e-10 {
        return Err(Error::Numerical {
            message: "columns to complete are not orthonormal".into(),
            residual: err,
        });
    }

    let mut basis: Vec<DVector<Complex64>> = columns.column_iter().map(|c| c.into_owned()).collect();
    let candidates: Box<dyn Iterator<Item = usize>> = match completion {
        Completion::Ascending => Box::new(0..dim),
        Completion::Descending => Box::new((0..dim).rev()),
    };
    for e in candidates {
        if basis.len() == dim {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > RANK_TOL {
            basis.push(v / Complex64::new(norm, 0.0));
        }
    }
    if basis.len() != dim {
        return Err(Error::Numerical {
            message: "unitary completion lost rank".into(),
            residual: (dim - basis.len()) as f64,
        });
    }
    Ok(DMatrix::from_columns(&basis))
}

/// Frobenius distance of `U†U` from the identity.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - DMatrix::identity(n, n)).norm()
}

/// Normalizes a vector, refusing (near-)zero input.
pub fn normalized(v: &DVector<Complex64>, context: &str) -> Result<DVector<Complex64>> {
    let norm = v.norm();
    if !(norm > 1e-300) {
        return Err(Error::Degenerate {
            context: context.into(),
            norm,
        });
    }
    Ok(v / Complex64::new(norm, 0.0))
}

/// Checks that a state has unit norm.
pub fn check_unit(psi: &DVector<Complex64>, tol: f64) -> Result<()> {
    let n = psi.norm();
    if (n - 1.0).abs() > tol {
        return domain(format!("input state must have unit norm, got {n}"));
    }
    Ok(())
}

pub fn real_vector(values: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)))
}

/// Unit vector along coordinate `i`.
pub fn basis_vector(dim: usize, i: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[i] = Complex64::new(1.0, 0.0);
    v
}

/// Normalized all-ones vector.
pub fn uniform_state(dim: usize) -> DVector<Complex64> {
    DVector::from_element(dim, Complex64::new(1.0 / (dim as f64).sqrt(), 0.0))
}
