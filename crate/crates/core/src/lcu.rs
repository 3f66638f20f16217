//! Linear combination of unitaries.
//!
//! `f̃(A) = Σ_j γ_j T_j(A/(Λd))` is applied by preparing the control state
//! `V|0⟩ = Σ_j √(|γ_j|/γ) |j⟩`, selecting `sign(γ_j) T† W^j T` on branch `j`,
//! unpreparing, and post-selecting the control and walk ancillas on zero.
//! The success branch holds `f̃(A)ψ / γ`.
//!
//! Two execution paths are provided. [`run_lcu_operator`] works at operator
//! level through the walk's invariant-subspace block and scales to the dense
//! limit. [`ExplicitLcu`] materializes every register and unitary of the
//! circuit for small instances, so the two can be compared.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cheb::{rescaled_cheb_coeffs, ChebyshevSeries, TaylorSpec};
use crate::error::{capability, domain, Error, Result};
use crate::hermitian::{QueryCounts, SparseHermitian, SpectralData};
use crate::linalg::{check_unit, complete_unitary, normalized, Completion};
use crate::walk::{WalkBlock, WalkOperator};

/// Runs whose success probability falls below this are rejected as degenerate.
pub const DEGENERATE_PROBABILITY: f64 = 1e-14;

/// Size limits of the explicit circuit path.
pub const MAX_EXPLICIT_SYSTEM_DIM: usize = 8;
pub const MAX_EXPLICIT_TERMS: usize = 8;

/// Absolute allowance for floating-point roundoff when comparing a measured
/// distance with an exact-arithmetic bound.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A Chebyshev series prepared for execution on a matrix of given sparsity.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuPlan {
    series: ChebyshevSeries,
    sparsity: usize,
    magnitudes: Vec<f64>,
    signs: Vec<f64>,
    control_qubits: u32,
    weight: f64,
}

impl LcuPlan {
    /// `series` must be in `T_j(x / (Λ d))` with `d = sparsity`.
    pub fn new(series: ChebyshevSeries, sparsity: usize) -> Result<Self> {
        if sparsity == 0 {
            return domain("sparsity must be at least 1");
        }
        let weight = series.weight();
        if !(weight > 0.0) {
            return domain("plan has zero coefficient weight");
        }
        let magnitudes = series.coefficients().iter().map(|g| g.abs()).collect();
        let signs = series
            .coefficients()
            .iter()
            .map(|&g| if g < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let control_qubits = series.len().next_power_of_two().trailing_zeros();
        Ok(Self {
            series,
            sparsity,
            magnitudes,
            signs,
            control_qubits,
            weight,
        })
    }

    pub fn from_taylor(spec: &TaylorSpec, sparsity: usize) -> Result<Self> {
        Self::new(rescaled_cheb_coeffs(spec, sparsity)?, sparsity)
    }

    pub fn series(&self) -> &ChebyshevSeries {
        &self.series
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// `Λ`, recovered from the series scale `Λ d`.
    pub fn norm_bound(&self) -> f64 {
        self.series.scale() / self.sparsity as f64
    }

    /// `γ = Σ_j |γ_j|`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Number of terms `L`.
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn control_qubits(&self) -> u32 {
        self.control_qubits
    }

    /// `2^s ≥ L`.
    pub fn control_dim(&self) -> usize {
        1 << self.control_qubits
    }

    /// `√(|γ_j| / γ)`, zero-padded to the control dimension.
    pub fn control_amplitudes(&self) -> Vec<f64> {
        let mut amps: Vec<f64> = self
            .magnitudes
            .iter()
            .map(|m| (m / self.weight).sqrt())
            .collect();
        amps.resize(self.control_dim(), 0.0);
        amps
    }

    /// Walk steps of the deepest term, the figure quoted as O(L).
    pub fn deepest_term_steps(&self) -> u64 {
        self.series.degree() as u64
    }

    /// `Σ_j j` over nonzero terms, what a naive select circuit spends.
    pub fn total_walk_steps(&self) -> u64 {
        self.series
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(j, _)| j as u64)
            .sum()
    }

    /// Evaluates `f̃(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.series.eval(x)
    }
}

/// Unitary on the control register whose first column is the control state.
pub fn prepare_control(plan: &LcuPlan, completion: Completion) -> Result<DMatrix<Complex64>> {
    let amps = plan.control_amplitudes();
    let v = DVector::from_iterator(amps.len(), amps.into_iter().map(c));
    complete_unitary(&DMatrix::from_columns(&[v]), completion)
}

/// Walk-step and oracle accounting for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Resources {
    pub deepest_term_steps: u64,
    pub total_walk_steps: u64,
    pub oracle_queries: QueryCounts,
}

/// Post-selected output of an LCU run together with its verification data.
#[derive(Debug, Clone)]
pub struct LcuOutcome {
    /// Normalized success-branch state.
    pub state: DVector<Complex64>,
    /// Measured `‖f̃(A)ψ‖² / γ²`.
    pub success_probability: f64,
    /// `|⟨state|oracle⟩|²` against the normalized `f(A)ψ`.
    pub fidelity: f64,
    /// `‖state − oracle‖`.
    pub distance: f64,
    /// `2 − 2 Re⟨state|oracle⟩`, equal to `distance²` up to roundoff.
    pub overlap_distance_sq: f64,
    pub weight: f64,
    /// `(‖f̃(A)ψ‖ / γ)²` computed independently from the spectral decomposition.
    pub spectral_probability: f64,
    /// `(μ̃ / γ)²`, `μ̃ = min_j |f̃(λ_j)|`.
    pub predicted_probability_bound: f64,
    /// `(μ / γ)²`, `μ = min_j |f(λ_j)|`.
    pub target_probability_bound: f64,
    pub mu: f64,
    pub mu_tilde: f64,
    /// `max_j |f(λ_j) − f̃(λ_j)|`.
    pub truncation_error: f64,
    /// `‖f(A) − D‖₂` for the operator `D` the walk actually realizes.
    pub operator_error: f64,
    /// Normalized-state error bound, when its hypotheses hold.
    pub error_bound: Option<f64>,
    pub resources: Resources,
}

impl LcuOutcome {
    /// `p ≥ (μ̃/γ)²`.
    pub fn probability_bound_holds(&self) -> bool {
        self.success_probability >= self.predicted_probability_bound - 1e-12
    }

    /// The unsquared `p ≥ μ/γ`, reported but not required.
    pub fn unsquared_bound_holds(&self) -> bool {
        self.success_probability >= self.mu / self.weight - 1e-12
    }

    pub fn error_bound_holds(&self) -> bool {
        self.error_bound
            .is_none_or(|b| self.distance <= b + ROUNDOFF_FLOOR)
    }

    /// The sup-norm error used in the normalized-state bound.
    pub fn realized_error(&self) -> f64 {
        self.truncation_error.max(self.operator_error)
    }
}

/// `2ε / (|λ_min| − ε)`: distance between `Cψ/‖Cψ‖` and `Dψ/‖Dψ‖` when
/// `‖C − D‖ ≤ ε` and `C` has no eigenvalue smaller than `|λ_min|` in magnitude.
pub fn normalized_error_bound(min_abs_eigen: f64, eps: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&eps) {
        return domain(format!("error bound requires 0 <= eps < 1/2, got {eps}"));
    }
    if !(min_abs_eigen > eps) {
        return domain(format!(
            "error bound undefined: smallest eigenvalue magnitude {min_abs_eigen} <= eps {eps}"
        ));
    }
    Ok(2.0 * eps / (min_abs_eigen - eps))
}

fn check_plan_matrix(a: &SparseHermitian, plan: &LcuPlan, psi: &DVector<Complex64>) -> Result<()> {
    if psi.len() != a.dim() {
        return domain(format!("state of length {} for a {}-dim matrix", psi.len(), a.dim()));
    }
    check_unit(psi, 1e-10)?;
    if a.sparsity() != plan.sparsity() {
        return domain(format!(
            "plan built for sparsity {} but matrix has sparsity {}",
            plan.sparsity(),
            a.sparsity()
        ));
    }
    Ok(())
}

/// The matrix the walk sees: `A / Λ`, so the walk yields `T_j(A/(Λd))`.
fn walk_matrix(a: &SparseHermitian, plan: &LcuPlan) -> Result<SparseHermitian> {
    let lambda = plan.norm_bound();
    if lambda == 1.0 {
        Ok(a.clone())
    } else {
        a.scaled(1.0 / lambda)
    }
}

/// `Σ_j γ_j T_j(H) X` for a block of columns `X`, by iterating the walk block.
fn block_series(block: &WalkBlock, plan: &LcuPlan, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = block.system_dim();
    let mut state = DMatrix::zeros(2 * n, x.ncols());
    state.rows_mut(0, n).copy_from(x);
    let mut acc = DMatrix::zeros(n, x.ncols());
    for (j, &g) in plan.series().coefficients().iter().enumerate() {
        if j > 0 {
            state = block.matrix() * &state;
        }
        if g != 0.0 {
            acc += state.rows(0, n) * c(g);
        }
    }
    acc
}

/// `D = Σ_j γ_j T_j(A/(Λd))` as realized by the walk block.
pub fn realized_operator(a: &SparseHermitian, plan: &LcuPlan) -> Result<DMatrix<Complex64>> {
    let block = WalkBlock::new(&walk_matrix(a, plan)?)?;
    let n = a.dim();
    Ok(block_series(&block, plan, &DMatrix::identity(n, n)))
}

fn largest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Verification against the spectral oracle, shared by both paths.
fn assemble_outcome<F: Fn(f64) -> f64>(
    a: &SparseHermitian,
    plan: &LcuPlan,
    psi: &DVector<Complex64>,
    success_branch: DVector<Complex64>,
    target: F,
    resources: Resources,
) -> Result<LcuOutcome> {
    let success_probability = success_branch.norm_squared();
    if !(success_probability >= DEGENERATE_PROBABILITY) {
        return Err(Error::Degenerate {
            context: "LCU success branch".into(),
            norm: success_branch.norm() * plan.weight(),
        });
    }
    let state = normalized(&success_branch, "LCU success branch")?;

    let spectral = a.spectral()?;
    let exact = spectral.apply_to(&target, psi);
    let oracle = normalized(&exact, "exact f(A)ψ")?;
    let overlap = oracle.dotc(&state);
    let fidelity = overlap.norm_sqr();
    let distance = (&state - &oracle).norm();
    let overlap_distance_sq = 2.0 - 2.0 * overlap.re;

    let weight = plan.weight();
    let approx = |x: f64| plan.eval(x).unwrap_or(f64::NAN);
    let spectral_probability = (spectral.apply_to(approx, psi).norm() / weight).powi(2);
    let eigen = spectral.eigenvalues();
    let mu = eigen.iter().map(|&l| target(l).abs()).fold(f64::INFINITY, f64::min);
    let mu_tilde = eigen.iter().map(|&l| approx(l).abs()).fold(f64::INFINITY, f64::min);
    let truncation_error = eigen
        .iter()
        .map(|&l| (target(l) - approx(l)).abs())
        .fold(0.0, f64::max);
    let realized = realized_operator(a, plan)?;
    let operator_error = largest_singular_value(&(spectral.apply(&target) - realized));
    let eps = truncation_error.max(operator_error);
    let error_bound = normalized_error_bound(mu, eps).ok();

    Ok(LcuOutcome {
        state,
        success_probability,
        fidelity,
        distance,
        overlap_distance_sq,
        weight,
        spectral_probability,
        predicted_probability_bound: (mu_tilde / weight).powi(2),
        target_probability_bound: (mu / weight).powi(2),
        mu,
        mu_tilde,
        truncation_error,
        operator_error,
        error_bound,
        resources,
    })
}

/// Operator-level LCU through the walk's invariant-subspace block.
pub fn run_lcu_operator<F: Fn(f64) -> f64>(
    a: &SparseHermitian,
    plan: &LcuPlan,
    psi: &DVector<Complex64>,
    target: F,
) -> Result<LcuOutcome> {
    check_plan_matrix(a, plan, psi)?;
    let block = WalkBlock::new(&walk_matrix(a, plan)?)?;
    let x = DMatrix::from_columns(std::slice::from_ref(psi));
    let v = block_series(&block, plan, &x).column(0).into_owned();
    let success_branch = v / c(plan.weight());
    let resources = Resources {
        deepest_term_steps: plan.deepest_term_steps(),
        total_walk_steps: plan.total_walk_steps(),
        oracle_queries: QueryCounts::default(),
    };
    assemble_outcome(a, plan, psi, success_branch, target, resources)
}

/// The full LCU circuit on `control ⊗ walk space`, every unitary explicit.
///
/// The walk space is `C^{2N} ⊗ C^{2N}` in a frame where the system occupies
/// its first `N` coordinates: a unitary dilation of `T` maps coordinate `i`
/// to `T|i⟩`. A full-register index is `c · (2N)² + a · N + i` with control
/// `c`, walk ancilla `a` and system `i`; success means `c = 0` and `a = 0`.
#[derive(Debug, Clone)]
pub struct ExplicitLcu {
    plan: LcuPlan,
    walk: WalkOperator,
    dilation: DMatrix<Complex64>,
    control: DMatrix<Complex64>,
}

impl ExplicitLcu {
    pub fn new(a: &SparseHermitian, plan: &LcuPlan, completion: Completion) -> Result<Self> {
        if a.dim() > MAX_EXPLICIT_SYSTEM_DIM {
            return capability(format!(
                "explicit circuit limited to N <= {MAX_EXPLICIT_SYSTEM_DIM}, got {}",
                a.dim()
            ));
        }
        if plan.len() > MAX_EXPLICIT_TERMS {
            return capability(format!(
                "explicit circuit limited to L <= {MAX_EXPLICIT_TERMS}, got {}",
                plan.len()
            ));
        }
        if a.sparsity() != plan.sparsity() {
            return domain("plan and matrix sparsity differ");
        }
        let wm = walk_matrix(a, plan)?;
        WalkBlock::new(&wm)?;
        let walk = WalkOperator::new(&wm)?;
        let dilation = complete_unitary(walk.isometry(), completion)?;
        let control = prepare_control(plan, completion)?;
        Ok(Self {
            plan: plan.clone(),
            walk,
            dilation,
            control,
        })
    }

    pub fn system_dim(&self) -> usize {
        self.walk.system_dim()
    }

    pub fn walk_dim(&self) -> usize {
        self.walk.space_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.control.nrows()
    }

    pub fn total_dim(&self) -> usize {
        self.control_dim() * self.walk_dim()
    }

    /// Size of the combined flag register (control and walk ancilla).
    pub fn flag_dim(&self) -> usize {
        self.total_dim() / self.system_dim()
    }

    pub fn control_unitary(&self) -> &DMatrix<Complex64> {
        &self.control
    }

    pub fn dilation(&self) -> &DMatrix<Complex64> {
        &self.dilation
    }

    pub fn walk(&self) -> &WalkOperator {
        &self.walk
    }

    /// `|0⟩_control |0⟩_ancilla |ψ⟩`.
    pub fn embed(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.total_dim());
        v.rows_mut(0, psi.len()).copy_from(psi);
        v
    }

    /// Success-flag component (`c = 0`, `a = 0`).
    pub fn success_component(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        v.rows(0, self.system_dim()).into_owned()
    }

    fn apply_control(&self, v: &DVector<Complex64>, m: &DMatrix<Complex64>) -> DVector<Complex64> {
        let k = self.control_dim();
        let d = self.walk_dim();
        let blocks = DMatrix::from_column_slice(d, k, v.as_slice());
        let mixed = blocks * m.transpose();
        DVector::from_column_slice(mixed.as_slice())
    }

    /// Branch `j` of the select unitary on one walk-space block.
    fn branch(&self, j: usize, v: DVector<Complex64>, adjoint: bool) -> DVector<Complex64> {
        if j >= self.plan.len() {
            return v;
        }
        let mut w = &self.dilation * v;
        for _ in 0..j {
            w = if adjoint {
                self.walk.apply_adjoint(&w)
            } else {
                self.walk.apply(&w)
            };
        }
        self.dilation.adjoint() * w * c(self.plan.signs()[j])
    }

    /// `U = Σ_j |j⟩⟨j| ⊗ sign(γ_j) D† W^j D`.
    pub fn apply_select(&self, v: &DVector<Complex64>, adjoint: bool) -> DVector<Complex64> {
        let d = self.walk_dim();
        let mut out = DVector::zeros(v.len());
        for j in 0..self.control_dim() {
            let block = v.rows(j * d, d).into_owned();
            out.rows_mut(j * d, d).copy_from(&self.branch(j, block, adjoint));
        }
        out
    }

    /// `(V† ⊗ 1) U (V ⊗ 1) v`.
    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let prepared = self.apply_control(v, &self.control);
        let selected = self.apply_select(&prepared, false);
        self.apply_control(&selected, &self.control.adjoint())
    }

    pub fn apply_adjoint(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let prepared = self.apply_control(v, &self.control);
        let selected = self.apply_select(&prepared, true);
        self.apply_control(&selected, &self.control.adjoint())
    }

    /// Dense matrix of the whole circuit.
    pub fn dense(&self) -> Result<DMatrix<Complex64>> {
        let dim = self.total_dim();
        if dim > 2048 {
            return capability(format!("dense circuit of dimension {dim} is too large"));
        }
        let cols: Vec<_> = (0..dim)
            .map(|i| self.apply(&crate::linalg::basis_vector(dim, i)))
            .collect();
        Ok(DMatrix::from_columns(&cols))
    }

    pub fn resources(&self) -> Resources {
        Resources {
            deepest_term_steps: self.plan.deepest_term_steps(),
            total_walk_steps: self.plan.total_walk_steps(),
            oracle_queries: self.walk.construction_queries(),
        }
    }
}

/// The explicit-circuit path with the default completions.
pub fn run_lcu_full<F: Fn(f64) -> f64>(
    a: &SparseHermitian,
    plan: &LcuPlan,
    psi: &DVector<Complex64>,
    target: F,
) -> Result<LcuOutcome> {
    run_lcu_full_with(a, plan, psi, target, Completion::default())
}

pub fn run_lcu_full_with<F: Fn(f64) -> f64>(
    a: &SparseHermitian,
    plan: &LcuPlan,
    psi: &DVector<Complex64>,
    target: F,
    completion: Completion,
) -> Result<LcuOutcome> {
    check_plan_matrix(a, plan, psi)?;
    let circuit = ExplicitLcu::new(a, plan, completion)?;
    let out = circuit.apply(&circuit.embed(psi));
    let success_branch = circuit.success_component(&out);
    assemble_outcome(a, plan, psi, success_branch, target, circuit.resources())
}

/// Result of the two-term warm-up construction.
#[derive(Debug, Clone)]
pub struct TwoUnitaryOutcome {
    /// Normalized `(α0 U0 + α1 U1) ψ`.
    pub state: DVector<Complex64>,
    pub p_success: f64,
    /// `α0 α1 ‖(U1 − U0)ψ‖² / α²`.
    pub p_fail: f64,
    /// `4 α0 α1 / α²`.
    pub p_fail_bound: f64,
    /// Full two-register state after `V†·U·V`, ancilla-major.
    pub register: DVector<Complex64>,
}

/// Implements `α0 U0 + α1 U1` with one ancilla qubit.
pub fn two_unitary_lcu(
    alpha0: f64,
    u0: &DMatrix<Complex64>,
    alpha1: f64,
    u1: &DMatrix<Complex64>,
    psi: &DVector<Complex64>,
) -> Result<TwoUnitaryOutcome> {
    if !(alpha0 > 0.0 && alpha1 > 0.0) {
        return domain("coefficients must be positive; absorb phases into the unitaries");
    }
    let n = psi.len();
    for (name, u) in [("U0", u0), ("U1", u1)] {
        if u.nrows() != n || u.ncols() != n {
            return domain(format!("{name} has the wrong shape"));
        }
        let defect = crate::linalg::unitarity_defect(u);
        if defect > 1e-10 {
            return domain(format!("{name} is not unitary (defect {defect:e})"));
        }
    }
    check_unit(psi, 1e-10)?;
    let alpha = alpha0 + alpha1;
    let (s0, s1) = ((alpha0 / alpha).sqrt(), (alpha1 / alpha).sqrt());
    let v = DMatrix::from_row_slice(2, 2, &[c(s0), c(-s1), c(s1), c(s0)]);

    // |0⟩|ψ⟩ → V ⊗ 1
    let mut reg = DVector::zeros(2 * n);
    for a in 0..2 {
        reg.rows_mut(a * n, n).copy_from(&(psi * v[(a, 0)]));
    }
    // controlled U
    let top = u0 * reg.rows(0, n);
    let bottom = u1 * reg.rows(n, n);
    reg.rows_mut(0, n).copy_from(&top);
    reg.rows_mut(n, n).copy_from(&bottom);
    // V† ⊗ 1
    let vd = v.adjoint();
    let (r0, r1) = (reg.rows(0, n).into_owned(), reg.rows(n, n).into_owned());
    let out0 = &r0 * vd[(0, 0)] + &r1 * vd[(0, 1)];
    let out1 = &r0 * vd[(1, 0)] + &r1 * vd[(1, 1)];
    reg.rows_mut(0, n).copy_from(&out0);
    reg.rows_mut(n, n).copy_from(&out1);

    let p_success = out0.norm_squared();
    let diff = (u1 - u0) * psi;
    let p_fail = alpha0 * alpha1 * diff.norm_squared() / (alpha * alpha);
    let state = if p_success > DEGENERATE_PROBABILITY {
        normalized(&out0, "two-unitary success branch")?
    } else {
        return Err(Error::Degenerate {
            context: "two-unitary success branch".into(),
            norm: out0.norm(),
        });
    };
    Ok(TwoUnitaryOutcome {
        state,
        p_success,
        p_fail,
        p_fail_bound: 4.0 * alpha0 * alpha1 / (alpha * alpha),
        register: reg,
    })
}

/// `f̃(A)ψ` straight from the spectral decomposition, for cross-checks.
pub fn spectral_series_action(
    spectral: &SpectralData,
    plan: &LcuPlan,
    psi: &DVector<Complex64>,
) -> DVector<Complex64> {
    spectral.apply_to(|x| plan.eval(x).unwrap_or(f64::NAN), psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::monomial_cheb_coeffs;
    use crate::linalg::{basis_vector, real_vector, uniform_state, unitarity_defect};

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample4() -> SparseHermitian {
        SparseHermitian::from_triangle(
            4,
            [
                (0, 0, cx(0.3, 0.0)),
                (0, 1, cx(-0.25, 0.2)),
                (1, 1, cx(-0.2, 0.0)),
                (2, 3, cx(0.1, -0.3)),
                (1, 2, cx(0.35, 0.0)),
                (3, 3, cx(-0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    fn exp_spec(len: usize, lambda: f64) -> TaylorSpec {
        let mut fact = 1.0;
        let alpha = (0..len)
            .map(|i| {
                if i > 0 {
                    fact *= i as f64;
                }
                1.0 / fact
            })
            .collect();
        TaylorSpec::new(alpha, std::f64::consts::E, lambda).unwrap()
    }

    fn monomial_plan(k: usize, lambda: f64, d: usize) -> LcuPlan {
        let mut alpha = vec![0.0; k + 1];
        alpha[k] = 1.0;
        LcuPlan::from_taylor(&TaylorSpec::new(alpha, 1.0, lambda).unwrap(), d).unwrap()
    }

    #[test]
    fn plan_shape() {
        let plan = LcuPlan::new(ChebyshevSeries::new(vec![1.0, -2.0, 1.0], 1.0).unwrap(), 1).unwrap();
        assert_eq!(plan.control_dim(), 4);
        assert_eq!(plan.weight(), 4.0);
        assert_eq!(plan.signs(), &[1.0, -1.0, 1.0]);
        let one = LcuPlan::new(ChebyshevSeries::new(vec![1.0], 1.0).unwrap(), 1).unwrap();
        assert_eq!(one.control_dim(), 1);
        assert!(LcuPlan::new(ChebyshevSeries::new(vec![0.0, 0.0], 1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn control_preparation_examples() {
        let mk = |g: Vec<f64>| LcuPlan::new(ChebyshevSeries::new(g, 1.0).unwrap(), 1).unwrap();
        let v = prepare_control(&mk(vec![1.0]), Completion::Ascending).unwrap();
        assert_eq!(v, DMatrix::identity(1, 1));
        let v = prepare_control(&mk(vec![1.0, 1.0]), Completion::Ascending).unwrap();
        let h = 0.5f64.sqrt();
        assert!((v.column(0) - real_vector(&[h, h])).norm() < 1e-15);
        for completion in [Completion::Ascending, Completion::Descending] {
            let v = prepare_control(&mk(vec![1.0, 2.0, 1.0]), completion).unwrap();
            assert!((v.column(0) - real_vector(&[0.5, h, 0.5, 0.0])).norm() < 1e-15);
            assert!(unitarity_defect(&v) < 1e-12);
        }
    }

    #[test]
    fn error_bound_examples() {
        assert!((normalized_error_bound(1.0, 0.25).unwrap() - 0.5 / 0.75).abs() < 1e-15);
        assert_eq!(normalized_error_bound(1.0, 0.0).unwrap(), 0.0);
        assert!((normalized_error_bound(2.0, 0.25).unwrap() - 0.5 / 1.75).abs() < 1e-15);
        assert!(normalized_error_bound(0.2, 0.25).is_err());
        assert!(normalized_error_bound(1.0, 0.5).is_err());
        for eps in [0.01, 0.1, 0.3, 0.49] {
            assert!(normalized_error_bound(1.0, eps).unwrap() < 4.0 * eps);
        }
    }

    #[test]
    fn two_unitary_examples() {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let z = DMatrix::from_diagonal(&real_vector(&[1.0, -1.0]));
        let psi = real_vector(&[0.3, 0.4]) / cx(0.5, 0.0);
        let r = two_unitary_lcu(0.5, &id, 0.5, &id, &psi).unwrap();
        assert!(r.p_fail.abs() < 1e-15);
        assert!((r.state - &psi).norm() < 1e-14);

        let plus = uniform_state(2);
        let r = two_unitary_lcu(0.5, &id, 0.5, &z, &plus).unwrap();
        assert!((r.state - basis_vector(2, 0)).norm() < 1e-14);
        assert!((r.p_success - 0.5).abs() < 1e-14);
        assert!((r.p_fail - (1.0 - r.p_success)).abs() < 1e-12);

        // final register matches the closed-form three-step derivation
        let (a0, a1) = (0.3, 0.9);
        let r = two_unitary_lcu(a0, &id, a1, &z, &plus).unwrap();
        let a = a0 + a1;
        let good = (&plus * cx(a0, 0.0) + &z * &plus * cx(a1, 0.0)) / cx(a, 0.0);
        let bad = (&z * &plus - &plus) * cx((a0 * a1).sqrt() / a, 0.0);
        assert!((r.register.rows(0, 2) - good).norm() < 1e-12);
        assert!((r.register.rows(2, 2) - bad).norm() < 1e-12);

        assert!(two_unitary_lcu(0.5, &(id.clone() * cx(2.0, 0.0)), 0.5, &id, &plus).is_err());
        assert!(two_unitary_lcu(-0.5, &id, 0.5, &id, &plus).is_err());
    }

    #[test]
    fn identity_function_plan() {
        let a = sample4();
        let psi = uniform_state(4);
        let lambda = a.spectral().unwrap().norm_bound();
        let d = a.sparsity() as f64;
        let plan = LcuPlan::from_taylor(&TaylorSpec::new(vec![0.0, 1.0], 1.0, lambda).unwrap(), a.sparsity())
            .unwrap();
        assert_eq!(plan.series().coefficients(), &[0.0, lambda * d]);
        let out = run_lcu_operator(&a, &plan, &psi, |x| x).unwrap();
        let ap = a.mul_vec(&psi);
        assert!((out.state.clone() - &ap / cx(ap.norm(), 0.0)).norm() < 1e-12);
        assert!((out.success_probability - (ap.norm() / (lambda * d)).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn cube_on_diagonal() {
        let a = SparseHermitian::diagonal(&[0.5, 0.25]).unwrap();
        let plan = monomial_plan(3, 1.0, 1);
        assert_eq!(plan.series().coefficients(), monomial_cheb_coeffs(3).unwrap().as_slice());
        let out = run_lcu_operator(&a, &plan, &basis_vector(2, 0), |x| x.powi(3)).unwrap();
        assert!((out.state.clone() - basis_vector(2, 0)).norm() < 1e-14);
        assert!((out.success_probability - 1.0 / 64.0).abs() < 1e-15);
        assert!(out.distance < 1e-10);
    }

    #[test]
    fn exp_on_sample_matches_oracle() {
        let a = sample4();
        let psi = uniform_state(4);
        let plan = LcuPlan::from_taylor(&exp_spec(22, 1.0), a.sparsity()).unwrap();
        let out = run_lcu_operator(&a, &plan, &psi, f64::exp).unwrap();
        assert!(out.fidelity >= 1.0 - 1e-5);
        assert!(out.truncation_error <= 1e-6);
        assert!(out.error_bound_holds());
        assert!(out.probability_bound_holds());
        assert!((out.success_probability - out.spectral_probability).abs() < 1e-12);
        assert!((out.distance.powi(2) - out.overlap_distance_sq).abs() < 1e-10);
        assert_eq!(out.resources.deepest_term_steps, 21);
        assert_eq!(out.resources.total_walk_steps, (1..22).sum::<u64>());
    }

    #[test]
    fn lambda_rescaling() {
        let a = sample4().scaled(2.5).unwrap();
        let lambda = a.spectral().unwrap().norm_bound();
        assert!(lambda > 1.0);
        let plan = LcuPlan::from_taylor(&exp_spec(40, lambda), a.sparsity()).unwrap();
        let out = run_lcu_operator(&a, &plan, &uniform_state(4), f64::exp).unwrap();
        assert!(out.distance < 1e-8, "{}", out.distance);
    }

    #[test]
    fn full_path_matches_operator_path() {
        let a = SparseHermitian::diagonal(&[0.6, -0.3]).unwrap();
        let plan = monomial_plan(2, 1.0, 1);
        let psi = real_vector(&[0.8, 0.6]);
        let op = run_lcu_operator(&a, &plan, &psi, |x| x * x).unwrap();
        let full = run_lcu_full(&a, &plan, &psi, |x| x * x).unwrap();
        assert!((op.state.clone() - &full.state).norm() < 1e-10);
        assert!((op.success_probability - full.success_probability).abs() < 1e-10);

        let a = sample4();
        let plan = LcuPlan::from_taylor(&exp_spec(6, 1.0), a.sparsity()).unwrap();
        let psi = uniform_state(4);
        let op = run_lcu_operator(&a, &plan, &psi, f64::exp).unwrap();
        let asc = run_lcu_full_with(&a, &plan, &psi, f64::exp, Completion::Ascending).unwrap();
        let desc = run_lcu_full_with(&a, &plan, &psi, f64::exp, Completion::Descending).unwrap();
        assert!((op.state.clone() - &asc.state).norm() < 1e-9);
        assert!((op.success_probability - asc.success_probability).abs() < 1e-10);
        assert!((asc.state.clone() - &desc.state).norm() < 1e-10);
        assert!((asc.success_probability - desc.success_probability).abs() < 1e-10);
        assert!(asc.resources.oracle_queries.total() > 0);
    }

    #[test]
    fn constant_plan_full_path() {
        let a = sample4();
        let d = a.sparsity();
        let plan = LcuPlan::new(ChebyshevSeries::new(vec![1.0], d as f64).unwrap(), d).unwrap();
        let psi = uniform_state(4);
        let out = run_lcu_full(&a, &plan, &psi, |_| 1.0).unwrap();
        assert!((out.state - &psi).norm() < 1e-12);
        assert!((out.success_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_circuit_is_unitary() {
        let a = SparseHermitian::diagonal(&[0.6, -0.3]).unwrap();
        let plan = monomial_plan(2, 1.0, 1);
        let circuit = ExplicitLcu::new(&a, &plan, Completion::Ascending).unwrap();
        let w = circuit.dense().unwrap();
        assert!(unitarity_defect(&w) < 1e-10);
        let v = DVector::from_fn(circuit.total_dim(), |i, _| cx(i as f64, 1.0));
        assert!((circuit.apply_adjoint(&circuit.apply(&v)) - &v).norm() < 1e-10 * v.norm());
    }

    #[test]
    fn explicit_limits() {
        let big = SparseHermitian::diagonal(&[0.1; 9]).unwrap();
        let plan = monomial_plan(2, 1.0, 1);
        assert!(matches!(
            ExplicitLcu::new(&big, &plan, Completion::Ascending),
            Err(Error::Capability(_))
        ));
        let long = LcuPlan::from_taylor(&exp_spec(9, 1.0), 1).unwrap();
        let small = SparseHermitian::diagonal(&[0.1, 0.2]).unwrap();
        assert!(matches!(
            ExplicitLcu::new(&small, &long, Completion::Ascending),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn degenerate_output_is_rejected() {
        let a = SparseHermitian::diagonal(&[0.0, 0.5]).unwrap();
        let plan = monomial_plan(1, 1.0, 1);
        let err = run_lcu_operator(&a, &plan, &basis_vector(2, 0), |x| x).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }

    #[test]
    fn sparsity_mismatch_is_rejected() {
        let a = sample4();
        let plan = monomial_plan(1, 1.0, 1);
        assert!(run_lcu_operator(&a, &plan, &uniform_state(4), |x| x).is_err());
    }
}
