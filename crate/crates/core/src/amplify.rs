//! Amplitude amplification of the LCU success branch.
//!
//! With `|Ψ_i⟩ = W (1 ⊗ P)|0⟩ = √p |0^m⟩|φ⟩ + √(1−p) |Φ⊥⟩` the Grover iterate
//! `G = −R_i R_t` rotates by `2θ`, `sin θ = √p`, inside the plane spanned by
//! `|Ψ_i⟩` and its success component. `R_t` flips the sign of the success
//! flag and `R_i` reflects about `|Ψ_i⟩`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::lcu::{ExplicitLcu, DEGENERATE_PROBABILITY};
use crate::linalg::{basis_vector, check_unit, complete_unitary, normalized, unitarity_defect, Completion};

/// `c` in `2r + 1 ≤ c / √p`.
pub const REPETITION_CONSTANT: f64 = FRAC_PI_2;

const UNITARY_TOL: f64 = 1e-10;

/// `θ = arcsin √p`.
pub fn grover_angle(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0 + 1e-12) {
        return domain(format!("cannot amplify with success probability {p}"));
    }
    Ok(p.min(1.0).sqrt().asin())
}

/// `⌊π/(4θ) − 1/2⌋`, the largest round count that does not overshoot.
pub fn default_rounds(p: f64) -> Result<usize> {
    let theta = grover_angle(p)?;
    // Exact ratios such as θ = π/6 must not floor down through roundoff.
    let x = FRAC_PI_4 / theta - 0.5;
    Ok((x + 1e-9).floor().max(0.0) as usize)
}

/// Result of amplifying a success probability `p` with `r` Grover rounds.
#[derive(Debug, Clone)]
pub struct AmplificationRun {
    pub initial_probability: f64,
    pub theta: f64,
    pub rounds: usize,
    /// Measured (explicit mode) or closed-form (analytic mode).
    pub amplified_probability: f64,
    /// `sin²((2r+1)θ)`.
    pub predicted_probability: f64,
    /// Uses of `W` or `W†`; the same count applies to the state preparation.
    pub repetitions: u64,
    pub repetition_constant: f64,
    /// `c / √p`, equal to `c γ / ‖f̃(A)ψ‖` for an LCU run.
    pub repetition_bound: f64,
    /// Normalized success-branch state after amplification (explicit mode).
    pub amplified_state: Option<DVector<Complex64>>,
    /// Normalized success-branch state without amplification (explicit mode).
    pub initial_state: Option<DVector<Complex64>>,
}

impl AmplificationRun {
    fn new(p: f64, rounds: Option<usize>) -> Result<Self> {
        let theta = grover_angle(p)?;
        let rounds = match rounds {
            Some(r) => r,
            None => default_rounds(p)?,
        };
        let predicted = ((2 * rounds + 1) as f64 * theta).sin().powi(2);
        Ok(Self {
            initial_probability: p,
            theta,
            rounds,
            amplified_probability: predicted,
            predicted_probability: predicted,
            repetitions: 2 * rounds as u64 + 1,
            repetition_constant: REPETITION_CONSTANT,
            repetition_bound: REPETITION_CONSTANT / p.sqrt(),
            amplified_state: None,
            initial_state: None,
        })
    }

    pub fn residual_failure(&self) -> f64 {
        1.0 - self.amplified_probability
    }

    pub fn within_repetition_bound(&self) -> bool {
        self.repetitions as f64 <= self.repetition_bound
    }

    /// Distance between the amplified and unamplified success-branch states
    /// after aligning their global phase. Rounds past the optimum flip the
    /// sign of the success amplitude.
    pub fn state_shift(&self) -> Option<f64> {
        match (&self.amplified_state, &self.initial_state) {
            (Some(a), Some(b)) => {
                let overlap = b.dotc(a);
                let phase = if overlap.norm() > 0.0 {
                    overlap / overlap.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                Some((a - b * phase).norm())
            }
            _ => None,
        }
    }
}

/// Amplification computed from the closed-form two-dimensional dynamics.
pub fn amplify_analytic(p: f64, rounds: Option<usize>) -> Result<AmplificationRun> {
    AmplificationRun::new(p, rounds)
}

/// The target and initial-state reflections on `flag ⊗ system`.
#[derive(Debug, Clone)]
pub struct Reflections {
    pub target: DMatrix<Complex64>,
    pub initial: DMatrix<Complex64>,
    /// `|Ψ_i⟩`.
    pub initial_state: DVector<Complex64>,
    pub system_dim: usize,
}

impl Reflections {
    /// `G = −R_i R_t`.
    pub fn grover_iterate(&self) -> DMatrix<Complex64> {
        -(&self.initial * &self.target)
    }

    /// `Π|v⟩` restricted to the system register.
    pub fn success_component(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        v.rows(0, self.system_dim).into_owned()
    }
}

/// `1_m ⊗ P` for a register laid out as `flag · N + system`.
fn lift_prep(state_prep: &DMatrix<Complex64>, flag_dim: usize) -> DMatrix<Complex64> {
    let n = state_prep.nrows();
    let mut full = DMatrix::zeros(flag_dim * n, flag_dim * n);
    for f in 0..flag_dim {
        full.view_mut((f * n, f * n), (n, n)).copy_from(state_prep);
    }
    full
}

/// Builds `R_t = 1 − 2Π`, `Π = |0^m⟩⟨0^m| ⊗ 1`, and
/// `R_i = W (1 ⊗ P) R_0 (1 ⊗ P)† W†` with `R_0` the reflection about the
/// all-zero state of the whole register, i.e. `R_i = 1 − 2|Ψ_i⟩⟨Ψ_i|`.
pub fn reflections(w_total: &DMatrix<Complex64>, state_prep: &DMatrix<Complex64>) -> Result<Reflections> {
    let dim = w_total.nrows();
    let n = state_prep.nrows();
    if w_total.ncols() != dim || state_prep.ncols() != n || n == 0 || !dim.is_multiple_of(n) {
        return domain(format!(
            "cannot combine a {}x{} circuit with a {}x{} state preparation",
            dim,
            w_total.ncols(),
            n,
            state_prep.ncols()
        ));
    }
    for (name, u) in [("circuit", w_total), ("state preparation", state_prep)] {
        let defect = unitarity_defect(u);
        if defect > UNITARY_TOL {
            return Err(Error::Numerical {
                message: format!("{name} is not unitary"),
                residual: defect,
            });
        }
    }
    let mut target = DMatrix::identity(dim, dim);
    for i in 0..n {
        target[(i, i)] = Complex64::new(-1.0, 0.0);
    }
    let prepared = w_total * lift_prep(state_prep, dim / n);
    let initial_state = prepared.column(0).into_owned();
    let initial = DMatrix::identity(dim, dim) - &initial_state * initial_state.adjoint() * Complex64::new(2.0, 0.0);
    Ok(Reflections {
        target,
        initial,
        initial_state,
        system_dim: n,
    })
}

/// Runs `r` Grover rounds from `|Ψ_i⟩` with the iterate given as a closure.
fn grover_rounds<G>(initial: &DVector<Complex64>, system_dim: usize, rounds: Option<usize>, g: G) -> Result<AmplificationRun>
where
    G: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let good = initial.rows(0, system_dim).into_owned();
    let p = good.norm_squared();
    if p < DEGENERATE_PROBABILITY {
        return Err(Error::Degenerate {
            context: "success branch before amplification".into(),
            norm: p.sqrt(),
        });
    }
    let mut run = AmplificationRun::new(p, rounds)?;
    let mut v = initial.clone();
    for _ in 0..run.rounds {
        v = g(&v);
    }
    let amplified = v.rows(0, system_dim).into_owned();
    run.amplified_probability = amplified.norm_squared();
    run.amplified_state = Some(normalized(&amplified, "amplified success branch")?);
    run.initial_state = Some(normalized(&good, "success branch")?);
    Ok(run)
}

/// Applies `G^r` as a dense matrix and measures the success flag.
pub fn amplify_explicit(
    w_total: &DMatrix<Complex64>,
    state_prep: &DMatrix<Complex64>,
    rounds: Option<usize>,
) -> Result<AmplificationRun> {
    let refl = reflections(w_total, state_prep)?;
    let g = refl.grover_iterate();
    grover_rounds(&refl.initial_state, refl.system_dim, rounds, |v| &g * v)
}

/// Unitary whose first column is `ψ`.
pub fn state_preparation(psi: &DVector<Complex64>) -> Result<DMatrix<Complex64>> {
    check_unit(psi, 1e-10)?;
    complete_unitary(&DMatrix::from_columns(std::slice::from_ref(psi)), Completion::Ascending)
}

/// Amplifies the success branch of an explicit LCU circuit on input `ψ`,
/// applying the reflections to vectors without forming any matrix.
pub fn amplify_lcu(circuit: &ExplicitLcu, psi: &DVector<Complex64>, rounds: Option<usize>) -> Result<AmplificationRun> {
    check_unit(psi, 1e-10)?;
    if psi.len() != circuit.system_dim() {
        return domain("state dimension does not match the circuit");
    }
    let n = circuit.system_dim();
    let initial = circuit.apply(&circuit.embed(psi));
    let two = Complex64::new(2.0, 0.0);
    grover_rounds(&initial, n, rounds, |v| {
        let mut w = v.clone();
        w.rows_mut(0, n).neg_mut();
        let overlap = initial.dotc(&w);
        &initial * (two * overlap) - w
    })
}

/// Orthonormal basis of the Grover plane: `|Ψ_i⟩` and the normalized part of
/// `Π|Ψ_i⟩` orthogonal to it.
pub fn grover_plane(refl: &Reflections) -> Result<DMatrix<Complex64>> {
    let psi = &refl.initial_state;
    let mut good = DVector::zeros(psi.len());
    good.rows_mut(0, refl.system_dim).copy_from(&refl.success_component(psi));
    let overlap = psi.dotc(&good);
    let orth = normalized(&(good - psi * overlap), "Grover plane")?;
    Ok(DMatrix::from_columns(&[psi.clone(), orth]))
}

/// `|0⟩` of a register, for building explicit test instances.
pub fn zero_state(dim: usize) -> DVector<Complex64> {
    basis_vector(dim, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::TaylorSpec;
    use crate::hermitian::SparseHermitian;
    use crate::lcu::LcuPlan;
    use crate::linalg::real_vector;
    use std::f64::consts::PI;

    fn identity_instance(p: f64) -> (SparseHermitian, LcuPlan) {
        let a = SparseHermitian::diagonal(&[p.sqrt(), 1.0]).unwrap();
        let plan = LcuPlan::from_taylor(&TaylorSpec::new(vec![0.0, 1.0], 1.0, 1.0).unwrap(), 1).unwrap();
        (a, plan)
    }

    #[test]
    fn round_examples() {
        assert_eq!(default_rounds(0.25).unwrap(), 1);
        let run = amplify_analytic(0.25, None).unwrap();
        assert!((run.theta - PI / 6.0).abs() < 1e-15);
        assert!((run.amplified_probability - 1.0).abs() < 1e-15);
        let run = amplify_analytic(1.0, None).unwrap();
        assert_eq!(run.rounds, 0);
        assert_eq!(run.amplified_probability, 1.0);
        assert!(amplify_analytic(0.0, None).is_err());
        assert!(amplify_analytic(1.5, None).is_err());
    }

    #[test]
    fn default_rounds_never_overshoot() {
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let theta = grover_angle(p).unwrap();
            let r = default_rounds(p).unwrap();
            assert!((2 * r + 1) as f64 * theta <= FRAC_PI_2 + 1e-9);
            assert!((2 * r + 3) as f64 * theta > FRAC_PI_2 - 1e-9);
            assert!(amplify_analytic(p, None).unwrap().within_repetition_bound());
        }
    }

    #[test]
    fn repetitions_scale_as_inverse_sqrt() {
        for p in [0.5, 0.05, 0.005] {
            let run = amplify_analytic(p, None).unwrap();
            let scaled = run.repetitions as f64 * p.sqrt();
            assert!(scaled > 0.5 && scaled <= FRAC_PI_2, "{p}: {scaled}");
        }
    }

    #[test]
    fn reflections_are_involutions() {
        let (a, plan) = identity_instance(0.25);
        let circuit = ExplicitLcu::new(&a, &plan, Completion::Ascending).unwrap();
        let refl = reflections(&circuit.dense().unwrap(), &state_preparation(&zero_state(2)).unwrap()).unwrap();
        let id = DMatrix::<Complex64>::identity(circuit.total_dim(), circuit.total_dim());
        for r in [&refl.target, &refl.initial] {
            assert!((r * r - &id).norm() < 1e-10);
            assert!(unitarity_defect(r) < 1e-10);
        }
        // R_t fixes the failure flags and negates the success flag
        let fail = basis_vector(circuit.total_dim(), 5);
        assert!((&refl.target * &fail - &fail).norm() < 1e-15);
        let ok = basis_vector(circuit.total_dim(), 1);
        assert!((&refl.target * &ok + &ok).norm() < 1e-15);
    }

    #[test]
    fn initial_reflection_matches_conjugated_zero_reflection() {
        let (a, plan) = identity_instance(0.05);
        let circuit = ExplicitLcu::new(&a, &plan, Completion::Ascending).unwrap();
        let w = circuit.dense().unwrap();
        let psi = real_vector(&[0.6, 0.8]);
        let prep = state_preparation(&psi).unwrap();
        let refl = reflections(&w, &prep).unwrap();
        let dim = w.nrows();
        let lifted = &w * lift_prep(&prep, dim / 2);
        let mut r0 = DMatrix::<Complex64>::identity(dim, dim);
        r0[(0, 0)] = Complex64::new(-1.0, 0.0);
        let conj = &lifted * r0 * lifted.adjoint();
        assert!((conj - &refl.initial).norm() < 1e-10);
    }

    #[test]
    fn grover_iterate_rotates_the_plane() {
        for p in [0.5, 0.25, 0.05] {
            let (a, plan) = identity_instance(p);
            let circuit = ExplicitLcu::new(&a, &plan, Completion::Ascending).unwrap();
            let refl = reflections(&circuit.dense().unwrap(), &state_preparation(&zero_state(2)).unwrap()).unwrap();
            let basis = grover_plane(&refl).unwrap();
            let g = refl.grover_iterate();
            let image = &g * &basis;
            let projected = &basis * (basis.adjoint() * &image);
            assert!((&image - projected).norm() < 1e-10);

            let restricted = basis.adjoint() * &g * &basis;
            let theta = grover_angle(p).unwrap();
            let angle = 2.0 * theta;
            let (s, cs) = angle.sin_cos();
            // the plane basis runs from |Ψ_i⟩ towards the success subspace
            let rot = DMatrix::from_row_slice(2, 2, &[cs, -s, s, cs]).map(|x| Complex64::new(x, 0.0));
            assert!((restricted - rot).norm() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn explicit_amplification_matches_closed_form() {
        for p in [0.5, 0.25, 0.05] {
            let (a, plan) = identity_instance(p);
            let circuit = ExplicitLcu::new(&a, &plan, Completion::Ascending).unwrap();
            for rounds in [None, Some(0), Some(1), Some(2)] {
                let run = amplify_lcu(&circuit, &zero_state(2), rounds).unwrap();
                assert!((run.initial_probability - p).abs() < 1e-12);
                assert!((run.amplified_probability - run.predicted_probability).abs() < 1e-10);
                assert!(run.state_shift().unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn literal_displayed_reflection_fails_for_non_unitary_targets() {
        // W (1⊗P) R_t (1⊗P)† W† collapses to W R_t W†; with a success amplitude
        // that depends on the input, the resulting iterate leaves the plane.
        let a = SparseHermitian::diagonal(&[0.2, 0.9]).unwrap();
        let plan = LcuPlan::from_taylor(&TaylorSpec::new(vec![0.0, 1.0], 1.0, 1.0).unwrap(), 1).unwrap();
        let circuit = ExplicitLcu::new(&a, &plan, Completion::Ascending).unwrap();
        let w = circuit.dense().unwrap();
        let psi = real_vector(&[0.6, 0.8]);
        let prep = state_preparation(&psi).unwrap();
        let refl = reflections(&w, &prep).unwrap();
        let dim = w.nrows();
        let lifted = &w * lift_prep(&prep, dim / 2);
        let literal = &lifted * &refl.target * lifted.adjoint();
        let g_literal = -(literal * &refl.target);
        let mut v = refl.initial_state.clone();
        v = &g_literal * v;
        let literal_p = refl.success_component(&v).norm_squared();
        let run = amplify_lcu(&circuit, &psi, Some(1)).unwrap();
        assert!((run.amplified_probability - run.predicted_probability).abs() < 1e-10);
        assert!((literal_p - run.predicted_probability).abs() > 1e-3);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let w = DMatrix::<Complex64>::identity(6, 6);
        let prep = DMatrix::<Complex64>::identity(4, 4);
        assert!(matches!(reflections(&w, &prep), Err(Error::Domain(_))));
    }
}
