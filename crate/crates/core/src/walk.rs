//! Quantum walk realization of `T_n(A/d)`.
//!
//! Two backends compute the same thing. The full-space backend builds the
//! states `|ψ_j⟩`, the isometry `T`, the (signed) swap `S` and the walk
//! `W = S(2TT† − 1)` on `C^{2N} ⊗ C^{2N}`, and reads `T† W^n T`. The block
//! backend works directly with the `2N × 2N` restriction of `W` to its
//! invariant subspace, `[[H, −√(1−H²)], [√(1−H²), H]]` with `H = A/d`.
//!
//! Square-root branches: for an upper-triangle entry `z = A_rc` the
//! amplitude on `|c⟩` in row `r` is the principal `√z̄`; the mirrored
//! amplitude in row `c` is the other branch fixed by
//! `s(c, r) · conj(s(r, c)) = z`. With the principal branch on both sides a
//! negative real entry would come out with the wrong sign.
//!
//! Diagonal entries enter `T†ST` as `|s(j, j)|²`, which cannot be negative,
//! so the swap carries a sign `−1` on `|j, j⟩` whenever `A_jj < 0`. It is
//! still a Hermitian involution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{capability, domain, Error, Result};
use crate::hermitian::{QueryCounts, SparseHermitian, SpectralData};
use crate::linalg::check_unit;

/// Largest `N` for which the full `(2N)²`-dimensional walk is built.
pub const MAX_EXPLICIT_WALK_DIM: usize = 16;

/// Tolerance on `‖A/d‖ ≤ 1` and on entry magnitudes.
pub const NORM_SLACK: f64 = 1e-10;

/// Eigenvalues of `1 − H²` below this are treated as degenerate directions
/// of the invariant subspace.
pub const DEGENERACY_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Amplitude pair `(s(j,k), √(1 − |A_jk|))` for one term of `|ψ_j⟩`.
fn amplitudes(j: usize, k: usize, a_jk: Complex64) -> Result<(Complex64, Complex64)> {
    let mag = a_jk.norm();
    if mag > 1.0 + NORM_SLACK {
        return domain(format!("|A[{j},{k}]| = {mag} exceeds 1; rescale the matrix"));
    }
    // signed zeros would otherwise pick different sides of the branch cut
    let canonical = |z: Complex64| Complex64::new(z.re + 0.0, z.im + 0.0);
    let s = if mag == 0.0 {
        Complex64::default()
    } else if j <= k {
        canonical(a_jk).conj().sqrt()
    } else {
        // mirror of the upper entry z = A_kj = conj(A_jk)
        let z = canonical(a_jk.conj());
        z * z.conj().sqrt() / mag
    };
    Ok((s, c((1.0 - mag).max(0.0).sqrt())))
}

/// `|ψ_j⟩ ∈ C^{2N} ⊗ C^{2N}` built through the oracle, with rows padded to
/// exactly `d` terms at the columns the oracle reports.
pub fn psi_state(oracle: &crate::hermitian::Oracle<'_>, j: usize) -> Result<DVector<Complex64>> {
    let m = oracle.matrix();
    let n = m.dim();
    let d = m.sparsity();
    if j >= n {
        return domain(format!("row {j} outside dimension {n}"));
    }
    let side = 2 * n;
    let mut v = DVector::zeros(side * side);
    let norm = c(1.0 / (d as f64).sqrt());
    for l in 0..d {
        let k = oracle.col(j, l)?;
        let a = oracle.entry(j, k)?;
        let (s, rest) = amplitudes(j, k, a)?;
        v[j * side + k] += s * norm;
        v[j * side + k + n] += rest * norm;
    }
    Ok(v)
}

/// The walk `W = S(2TT† − 1)` on the doubled space.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    n: usize,
    sparsity: usize,
    isometry: DMatrix<Complex64>,
    diag_signs: Vec<f64>,
    queries: QueryCounts,
}

impl WalkOperator {
    pub fn new(a: &SparseHermitian) -> Result<Self> {
        let n = a.dim();
        if n > MAX_EXPLICIT_WALK_DIM {
            return capability(format!(
                "full walk space limited to N <= {MAX_EXPLICIT_WALK_DIM} (got {n}); use WalkBlock"
            ));
        }
        let oracle = a.oracle();
        let side = 2 * n;
        let mut isometry = DMatrix::zeros(side * side, n);
        for j in 0..n {
            isometry.set_column(j, &psi_state(&oracle, j)?);
        }
        let diag_signs = (0..n)
            .map(|j| oracle.entry(j, j).map(|v| if v.re < 0.0 { -1.0 } else { 1.0 }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            sparsity: a.sparsity(),
            isometry,
            diag_signs,
            queries: oracle.counts(),
        })
    }

    pub fn system_dim(&self) -> usize {
        self.n
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// Dimension `(2N)²` of the walk space.
    pub fn space_dim(&self) -> usize {
        4 * self.n * self.n
    }

    /// `T`, a `(2N)² × N` isometry.
    pub fn isometry(&self) -> &DMatrix<Complex64> {
        &self.isometry
    }

    /// Oracle calls spent building `T` and the swap signs.
    pub fn construction_queries(&self) -> QueryCounts {
        self.queries
    }

    /// `S|a, b⟩ = |b, a⟩`, with sign `−1` on `|j, j⟩` for negative `A_jj`.
    pub fn swap(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let side = 2 * self.n;
        let mut out = DVector::zeros(v.len());
        for a in 0..side {
            for b in 0..side {
                out[b * side + a] = v[a * side + b];
            }
        }
        for (j, &s) in self.diag_signs.iter().enumerate() {
            out[j * side + j] *= s;
        }
        out
    }

    /// `(2TT† − 1) v`.
    pub fn reflect(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let t = &self.isometry;
        let proj = t * (t.adjoint() * v);
        proj * c(2.0) - v
    }

    /// One walk step `W v`.
    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.swap(&self.reflect(v))
    }

    /// `W† v = (2TT† − 1) S v`.
    pub fn apply_adjoint(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.reflect(&self.swap(v))
    }

    fn materialize(&self, f: impl Fn(&DVector<Complex64>) -> DVector<Complex64>) -> DMatrix<Complex64> {
        let dim = self.space_dim();
        let cols: Vec<_> = (0..dim)
            .map(|i| f(&crate::linalg::basis_vector(dim, i)))
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// Dense `W`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.materialize(|v| self.apply(v))
    }

    pub fn reflection_matrix(&self) -> DMatrix<Complex64> {
        self.materialize(|v| self.reflect(v))
    }

    pub fn swap_matrix(&self) -> DMatrix<Complex64> {
        self.materialize(|v| self.swap(v))
    }

    /// `T† W^n T`, an `N × N` matrix.
    pub fn chebyshev_block(&self, steps: usize) -> DMatrix<Complex64> {
        let cols: Vec<_> = self
            .isometry
            .column_iter()
            .map(|col| {
                let mut v = col.into_owned();
                for _ in 0..steps {
                    v = self.apply(&v);
                }
                self.isometry.adjoint() * v
            })
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// Orthonormal basis of the invariant subspace `span{T|j⟩, ST|j⟩}`.
    pub fn invariant_basis(&self) -> Result<InvariantBasis> {
        let t = &self.isometry;
        let st = DMatrix::from_columns(
            &t.column_iter()
                .map(|col| self.swap(&col.into_owned()))
                .collect::<Vec<_>>(),
        );
        let h = t.adjoint() * &st;
        let spec = SpectralData::new(&h)?;
        let mut degenerate = 0;
        let inv_sqrt = spec.apply(|l| {
            let gap = 1.0 - l * l;
            if gap > DEGENERACY_TOL {
                1.0 / gap.sqrt()
            } else {
                0.0
            }
        });
        for &l in spec.eigenvalues() {
            if 1.0 - l * l <= DEGENERACY_TOL {
                degenerate += 1;
            }
        }
        // Löwdin orthonormalization of the component of ST orthogonal to range(T).
        let complement = (&st - t * &h) * inv_sqrt;
        let mut basis = DMatrix::zeros(t.nrows(), 2 * self.n);
        basis.columns_mut(0, self.n).copy_from(t);
        basis.columns_mut(self.n, self.n).copy_from(&complement);
        Ok(InvariantBasis { basis, degenerate })
    }

    /// `W` restricted to the invariant subspace, in the basis from
    /// [`Self::invariant_basis`].
    pub fn restricted(&self) -> Result<DMatrix<Complex64>> {
        let b = self.invariant_basis()?.basis;
        let wb = DMatrix::from_columns(
            &b.column_iter()
                .map(|col| self.apply(&col.into_owned()))
                .collect::<Vec<_>>(),
        );
        Ok(b.adjoint() * wb)
    }

    /// `‖(1 − P_B) W P_B‖_F`, zero when the subspace is invariant.
    pub fn invariance_defect(&self) -> Result<f64> {
        let b = self.invariant_basis()?.basis;
        let mut total = 0.0;
        // zero columns mark degenerate directions
        for col in b.column_iter().filter(|col| col.norm() > 0.5) {
            let w = self.apply(&col.into_owned());
            let leak = &w - &b * (b.adjoint() * &w);
            total += leak.norm_squared();
        }
        Ok(total.sqrt())
    }
}

/// Columns `T|j⟩` followed by the orthonormalized `ST|j⟩` components.
#[derive(Debug, Clone)]
pub struct InvariantBasis {
    pub basis: DMatrix<Complex64>,
    /// Directions where `ST|j⟩` already lies in `range(T)` (`|λ(H)| = 1`);
    /// the corresponding columns are zero.
    pub degenerate: usize,
}

/// The `2N × 2N` block form of the walk on its invariant subspace.
#[derive(Debug, Clone)]
pub struct WalkBlock {
    h: DMatrix<Complex64>,
    block: DMatrix<Complex64>,
}

impl WalkBlock {
    pub fn new(a: &SparseHermitian) -> Result<Self> {
        let n = a.dim();
        let h = a.to_dense() / c(a.sparsity() as f64);
        let spec = SpectralData::new(&h)?;
        let norm = spec.norm_bound();
        if norm > 1.0 + NORM_SLACK {
            return domain(format!("‖A/d‖ = {norm} exceeds 1"));
        }
        let root = spec.apply(|l| (1.0 - l * l).max(0.0).sqrt());
        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&h);
        block.view_mut((n, n), (n, n)).copy_from(&h);
        block.view_mut((0, n), (n, n)).copy_from(&(-&root));
        block.view_mut((n, 0), (n, n)).copy_from(&root);
        Ok(Self { h, block })
    }

    pub fn system_dim(&self) -> usize {
        self.h.nrows()
    }

    /// `H = A/d`.
    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.block
    }

    pub fn power(&self, n: usize) -> DMatrix<Complex64> {
        let dim = self.block.nrows();
        (0..n).fold(DMatrix::identity(dim, dim), |acc, _| &self.block * acc)
    }

    /// One step on a `2N` block vector.
    pub fn step(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.block * v
    }

    /// Embeds `ψ` as `[ψ; 0]`.
    pub fn embed(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.system_dim();
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(psi);
        v
    }
}

/// Which realization of the walk to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Block,
    FullSpace,
}

/// Result of post-selecting `T† W^n T ψ`.
#[derive(Debug, Clone)]
pub struct ChebApplication {
    /// `T_n(A/d) ψ`, unnormalized.
    pub result: DVector<Complex64>,
    /// `‖result‖²`.
    pub success_probability: f64,
    pub walk_steps: u64,
    pub oracle_queries: QueryCounts,
}

/// Applies `T_n(A/d)` to a unit state through the walk.
pub fn apply_cheb(
    a: &SparseHermitian,
    steps: usize,
    psi: &DVector<Complex64>,
    backend: Backend,
) -> Result<ChebApplication> {
    if psi.len() != a.dim() {
        return domain(format!("state of length {} for a {}-dim matrix", psi.len(), a.dim()));
    }
    check_unit(psi, 1e-10)?;
    let (result, oracle_queries) = match backend {
        Backend::Block => {
            let block = WalkBlock::new(a)?;
            let mut v = block.embed(psi);
            for _ in 0..steps {
                v = block.step(&v);
            }
            (v.rows(0, a.dim()).into_owned(), QueryCounts::default())
        }
        Backend::FullSpace => {
            let walk = WalkOperator::new(a)?;
            let t = walk.isometry();
            let mut v = t * psi;
            for _ in 0..steps {
                v = walk.apply(&v);
            }
            (t.adjoint() * v, walk.construction_queries())
        }
    };
    let success_probability = result.norm_squared();
    if !success_probability.is_finite() {
        return Err(Error::Numerical {
            message: "walk produced a non-finite state".into(),
            residual: success_probability,
        });
    }
    Ok(ChebApplication {
        result,
        success_probability,
        walk_steps: steps as u64,
        oracle_queries,
    })
}
