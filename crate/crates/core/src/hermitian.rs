//! Sparse Hermitian matrices with oracle-style access, and the dense
//! spectral oracle used as ground truth for every matrix function.
//!
//! Indices are zero-based throughout the library. The on-disk matrix format
//! is one-based and is translated at the boundary.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{capability, domain, Error, Result};

/// Largest dimension handled by the dense eigensolver.
pub const MAX_DENSE_DIM: usize = 512;

/// Number of grid points used for the conservative `inf |f|` estimate.
pub const F_MIN_GRID: usize = 1001;

/// A d-sparse Hermitian matrix stored by rows, both triangles present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
    sparsity: usize,
}

impl SparseHermitian {
    /// Builds from a full list of entries; the caller supplies both
    /// triangles and Hermiticity is checked exactly.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        if dim == 0 {
            return domain("matrix dimension must be positive");
        }
        let mut map = BTreeMap::new();
        for (j, k, v) in entries {
            if j >= dim || k >= dim {
                return domain(format!("entry ({j}, {k}) outside a {dim}x{dim} matrix"));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return domain(format!("non-finite entry at ({j}, {k})"));
            }
            if map.insert((j, k), v).is_some() {
                return domain(format!("duplicate entry at ({j}, {k})"));
            }
        }
        for (&(j, k), v) in &map {
            let mirror = map.get(&(k, j)).copied().unwrap_or_default();
            if mirror != v.conj() {
                return domain(format!(
                    "not Hermitian: A[{j},{k}] = {v} but A[{k},{j}] = {mirror}"
                ));
            }
        }
        let mut rows = vec![Vec::new(); dim];
        for ((j, k), v) in map {
            if v != Complex64::new(0.0, 0.0) {
                rows[j].push((k, v));
            }
        }
        let sparsity = rows.iter().map(Vec::len).max().unwrap_or(0).max(1);
        Ok(Self {
            dim,
            rows,
            sparsity,
        })
    }

    /// Builds from one triangle (either may be given); the mirrored entry is
    /// filled in by conjugation. Giving both `(j, k)` and `(k, j)` counts as
    /// a duplicate.
    pub fn from_triangle<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut canonical = BTreeMap::new();
        for (j, k, v) in entries {
            let (key, value) = if j <= k { ((j, k), v) } else { ((k, j), v.conj()) };
            if canonical.insert(key, value).is_some() {
                return domain(format!("duplicate entry at ({j}, {k})"));
            }
        }
        let mut full = Vec::with_capacity(2 * canonical.len());
        for ((j, k), v) in canonical {
            if j == k {
                if v.im != 0.0 {
                    return domain(format!("diagonal entry ({j}, {j}) must be real, got {v}"));
                }
                full.push((j, j, v));
            } else {
                full.push((j, k, v));
                full.push((k, j, v.conj()));
            }
        }
        Self::from_entries(dim, full)
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return domain("matrix must be square");
        }
        let n = m.nrows();
        let entries = (0..n).flat_map(|j| (0..n).map(move |k| (j, k, m[(j, k)])));
        Self::from_entries(n, entries)
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_entries(
            values.len(),
            values
                .iter()
                .enumerate()
                .map(|(j, &v)| (j, j, Complex64::new(v, 0.0))),
        )
    }

    /// Declares a larger sparsity bound than the one inferred from the rows.
    pub fn with_sparsity(mut self, d: usize) -> Result<Self> {
        let needed = self.rows.iter().map(Vec::len).max().unwrap_or(0).max(1);
        if d < needed {
            return domain(format!("sparsity {d} below the densest row ({needed})"));
        }
        if d > self.dim {
            return domain(format!("sparsity {d} exceeds the dimension {}", self.dim));
        }
        self.sparsity = d;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// Nonzero entries of row `j`, columns strictly increasing.
    pub fn row(&self, j: usize) -> &[(usize, Complex64)] {
        &self.rows[j]
    }

    /// Entry lookup without touching any query counter.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.rows[j]
            .binary_search_by_key(&k, |&(c, _)| c)
            .map(|i| self.rows[j][i].1)
            .unwrap_or_default()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies every entry by a real factor, keeping the sparsity bound.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = Self::from_entries(
            self.dim,
            self.rows
                .iter()
                .enumerate()
                .flat_map(|(j, r)| r.iter().map(move |&(k, v)| (j, k, v * factor))),
        )?;
        out.sparsity = self.sparsity;
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (j, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                m[(j, k)] = v;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(
            self.dim,
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(k, a)| a * v[k]).sum()),
        )
    }

    /// Oracle access with a fresh query counter scoped to the returned handle.
    pub fn oracle(&self) -> Oracle<'_> {
        Oracle {
            matrix: self,
            entry_queries: AtomicU64::new(0),
            col_queries: AtomicU64::new(0),
        }
    }

    /// Dense eigendecomposition, verified for reconstruction and unitarity.
    pub fn spectral(&self) -> Result<SpectralData> {
        SpectralData::new(&self.to_dense())
    }
}

/// Counts of oracle calls made through one [`Oracle`] handle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounts {
    pub entry: u64,
    pub col: u64,
}

impl QueryCounts {
    pub fn total(&self) -> u64 {
        self.entry + self.col
    }
}

/// The two oracle maps of the sparse access model: matrix entries and
/// positions of nonzeros within a row.
#[derive(Debug)]
pub struct Oracle<'a> {
    matrix: &'a SparseHermitian,
    entry_queries: AtomicU64,
    col_queries: AtomicU64,
}

impl<'a> Oracle<'a> {
    pub fn matrix(&self) -> &'a SparseHermitian {
        self.matrix
    }

    /// `A[j, k]`, zero when absent.
    pub fn entry(&self, j: usize, k: usize) -> Result<Complex64> {
        let n = self.matrix.dim;
        if j >= n || k >= n {
            return domain(format!("oracle entry ({j}, {k}) outside dimension {n}"));
        }
        self.entry_queries.fetch_add(1, Ordering::Relaxed);
        Ok(self.matrix.get(j, k))
    }

    /// Column of the `l`-th nonzero of row `j`.
    ///
    /// When row `j` has fewer than `l + 1` nonzeros the result is the
    /// `(l - nnz)`-th smallest column that holds a zero, so the padded
    /// columns of a row are distinct and the first of them is the row's
    /// first zero entry.
    pub fn col(&self, j: usize, l: usize) -> Result<usize> {
        let n = self.matrix.dim;
        let d = self.matrix.sparsity;
        if j >= n {
            return domain(format!("oracle row {j} outside dimension {n}"));
        }
        if l >= d {
            return domain(format!("nonzero index {l} exceeds sparsity {d}"));
        }
        self.col_queries.fetch_add(1, Ordering::Relaxed);
        let row = &self.matrix.rows[j];
        if l < row.len() {
            return Ok(row[l].0);
        }
        let mut skip = l - row.len();
        let mut nz = row.iter().map(|&(c, _)| c).peekable();
        for c in 0..n {
            if nz.peek() == Some(&c) {
                nz.next();
                continue;
            }
            if skip == 0 {
                return Ok(c);
            }
            skip -= 1;
        }
        // unreachable while sparsity <= dim
        capability(format!("row {j} cannot be padded to {d} distinct columns"))
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            entry: self.entry_queries.load(Ordering::Relaxed),
            col: self.col_queries.load(Ordering::Relaxed),
        }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

/// Spectral quantities that enter the success-probability bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStats {
    /// `max_j |λ_j|`.
    pub norm_bound: f64,
    /// `min_j |f(λ_j)|` over the actual spectrum.
    pub mu: f64,
    /// `min |f|` over a uniform grid on `[-Λ, Λ]`.
    pub f_min: f64,
}

impl SpectralData {
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return domain("matrix must be square");
        }
        if n > MAX_DENSE_DIM {
            return capability(format!(
                "dense eigendecomposition limited to N <= {MAX_DENSE_DIM}, got {n}"
            ));
        }
        let eig = nalgebra::SymmetricEigen::new(a.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

        let out = Self {
            eigenvalues,
            eigenvectors,
        };
        let residual = (out.apply(|x| x) - a).norm();
        let scale = a.norm().max(1.0);
        if !(residual <= 1e-10 * n as f64 * scale) {
            return Err(Error::Numerical {
                message: "eigendecomposition does not reconstruct the matrix".into(),
                residual,
            });
        }
        let unitarity =
            (out.eigenvectors.adjoint() * &out.eigenvectors - DMatrix::identity(n, n)).norm();
        if !(unitarity <= 1e-10) {
            return Err(Error::Numerical {
                message: "eigenvector matrix is not unitary".into(),
                residual: unitarity,
            });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// `Σ_j f(λ_j) |u_j⟩⟨u_j|`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<Complex64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (c, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(c).scale_mut(fl);
        }
        scaled * u.adjoint()
    }

    /// `f(A) ψ` without forming `f(A)`.
    pub fn apply_to<F: Fn(f64) -> f64>(&self, f: F, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let u = &self.eigenvectors;
        let mut coords = u.adjoint() * psi;
        for (c, &l) in coords.iter_mut().zip(&self.eigenvalues) {
            *c *= f(l);
        }
        u * coords
    }

    pub fn norm_bound(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    pub fn stats<F: Fn(f64) -> f64>(&self, f: F) -> SpectralStats {
        let norm_bound = self.norm_bound();
        let mu = self
            .eigenvalues
            .iter()
            .map(|&l| f(l).abs())
            .fold(f64::INFINITY, f64::min);
        let f_min = (0..F_MIN_GRID)
            .map(|i| -norm_bound + 2.0 * norm_bound * i as f64 / (F_MIN_GRID - 1) as f64)
            .map(|x| f(x).abs())
            .fold(f64::INFINITY, f64::min);
        SpectralStats {
            norm_bound,
            mu,
            f_min,
        }
    }
}

/// `f(A)` by dense eigendecomposition.
pub fn exact_matrix_function<F: Fn(f64) -> f64>(
    a: &SparseHermitian,
    f: F,
) -> Result<DMatrix<Complex64>> {
    Ok(a.spectral()?.apply(f))
}

/// `(Λ, μ, f_min)` for `f` on the spectrum of `A`.
pub fn spectral_stats<F: Fn(f64) -> f64>(a: &SparseHermitian, f: F) -> Result<SpectralStats> {
    Ok(a.spectral()?.stats(f))
}

/// On-disk matrix description: one-based `[row, col, re, im]` entries, one
/// triangle sufficient.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
}

impl MatrixFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_matrix(&self) -> Result<SparseHermitian> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for &(r, c, re, im) in &self.entries {
            if r == 0 || c == 0 {
                return domain(format!("matrix file indices are one-based, got ({r}, {c})"));
            }
            entries.push((r - 1, c - 1, Complex64::new(re, im)));
        }
        let m = SparseHermitian::from_triangle(self.dim, entries)?;
        match self.sparsity {
            Some(d) => m.with_sparsity(d),
            None => Ok(m),
        }
    }

    /// Upper-triangle description of `m`.
    pub fn from_matrix(m: &SparseHermitian) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.dim() {
            for &(k, v) in m.row(j) {
                if k >= j {
                    entries.push((j + 1, k + 1, v.re, v.im));
                }
            }
        }
        Self {
            dim: m.dim(),
            entries,
            sparsity: Some(m.sparsity()),
        }
    }
}
