//! Seeded property suites behind the `verify` command.
//!
//! Each suite draws its instances from a generator seeded by the user seed
//! mixed with a per-suite tag, so `all` reproduces the individual suites
//! exactly. Every invariant becomes one [`Check`] with its worst-case value.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::amplify::{amplify_lcu, default_rounds, grover_angle, grover_plane, reflections, state_preparation};
use crate::catalog::FunctionSpec;
use crate::cheb::{
    eval_t, monomial_cheb_coeffs, rescaled_cheb_coeffs, taylor_to_cheb, TaylorSpec,
};
use crate::error::{Error, Result};
use crate::hermitian::SparseHermitian;
use crate::lcu::{run_lcu_full, run_lcu_operator, two_unitary_lcu, ExplicitLcu, LcuPlan, ROUNDOFF_FLOOR};
use crate::linalg::{basis_vector, unitarity_defect, Completion};
use crate::random;
use crate::report::{Check, Report};
use crate::walk::{WalkBlock, WalkOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Cheb,
    Walk,
    Lcu,
    Amplify,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cheb" => Ok(Suite::Cheb),
            "walk" => Ok(Suite::Walk),
            "lcu" => Ok(Suite::Lcu),
            "amplify" => Ok(Suite::Amplify),
            "all" => Ok(Suite::All),
            _ => Err(Error::Parse(format!(
                "unknown suite '{s}' (expected cheb, walk, lcu, amplify or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Cheb => "cheb",
            Suite::Walk => "walk",
            Suite::Lcu => "lcu",
            Suite::Amplify => "amplify",
            Suite::All => "all",
        })
    }
}

fn suite_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    random::seeded(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag)
}

/// `(N, d)` pairs used for random instances; `d ≤ N` always.
const SHAPES: [(usize, usize); 8] = [(2, 1), (2, 2), (4, 1), (4, 2), (4, 3), (8, 1), (8, 2), (8, 3)];

fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
}

/// Runs `suite` and returns its report.
pub fn run(suite: Suite, seed: u64) -> Result<Report> {
    let mut report = Report::new("verify");
    report.section("input").field("suite", suite.to_string()).field("seed", seed);
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Cheb, Suite::Walk, Suite::Lcu, Suite::Amplify],
        Suite::Cheb => &[Suite::Cheb],
        Suite::Walk => &[Suite::Walk],
        Suite::Lcu => &[Suite::Lcu],
        Suite::Amplify => &[Suite::Amplify],
    };
    for s in suites {
        match s {
            Suite::Cheb => cheb_suite(&mut report, seed)?,
            Suite::Walk => walk_suite(&mut report, seed)?,
            Suite::Lcu => lcu_suite(&mut report, seed)?,
            Suite::Amplify => amplify_suite(&mut report)?,
            Suite::All => unreachable!(),
        }
    }
    report.validate()?;
    Ok(report)
}

fn cheb_suite(report: &mut Report, seed: u64) -> Result<()> {
    let mut rng = suite_rng(seed, 1);
    let mut sum_err: f64 = 0.0;
    let mut parity_violations = 0usize;
    for k in 0..=64 {
        let c = monomial_cheb_coeffs(k)?;
        sum_err = sum_err.max((c.iter().sum::<f64>() - 1.0).abs());
        parity_violations += c
            .iter()
            .enumerate()
            .filter(|&(j, &v)| (k - j) % 2 == 1 && v != 0.0 || (k - j) % 2 == 0 && v <= 0.0)
            .count();
    }
    report.check(Check::at_most("cheb.coefficient_sum", sum_err, 1e-12));
    report.check(Check::at_most("cheb.coefficient_parity", parity_violations as f64, 0.0));

    let mut rec_err: f64 = 0.0;
    for x in grid(-1.0, 1.0, 101) {
        let (mut prev, mut cur) = (1.0, x);
        for n in 0..=64 {
            let t = match n {
                0 => 1.0,
                1 => x,
                _ => {
                    let next = 2.0 * x * cur - prev;
                    prev = cur;
                    cur = next;
                    cur
                }
            };
            rec_err = rec_err.max((eval_t(n, x)? - t).abs());
        }
    }
    report.check(Check::at_most("cheb.recurrence", rec_err, 1e-12));

    for (label, eps) in [("1e-3", 1e-3), ("1e-6", 1e-6), ("1e-9", 1e-9)] {
        let spec = FunctionSpec::Exp.taylor_spec(Some(eps), 1.0)?;
        let worst = grid(-1.0, 1.0, 2001)
            .map(|x| (spec.eval(x) - x.exp()).abs())
            .fold(0.0, f64::max);
        report.check(Check::at_most(format!("cheb.exp_truncation_{label}"), worst, eps));
    }

    let mut conv_err: f64 = 0.0;
    let mut scaled_err: f64 = 0.0;
    for _ in 0..20 {
        let len = rng.random_range(1..=12);
        let alpha: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lambda = rng.random_range(0.25..=1.0);
        let d = rng.random_range(1..=4);
        let spec = TaylorSpec::new(alpha, 1.0, lambda)?;
        let scale = 1.0 + spec.weight();
        let beta = taylor_to_cheb(&spec)?;
        for x in grid(-1.0, 1.0, 201) {
            conv_err = conv_err.max((beta.eval(x)? - spec.eval(x)).abs() / scale);
        }
        let gamma = rescaled_cheb_coeffs(&spec, d)?;
        let scale = 1.0 + gamma.weight();
        for x in grid(-lambda, lambda, 201) {
            scaled_err = scaled_err.max((gamma.eval(x)? - spec.eval(x)).abs() / scale);
        }
    }
    report.check(Check::at_most("cheb.series_conversion", conv_err, 1e-13));
    report.check(Check::at_most("cheb.rescaled_series", scaled_err, 1e-13));
    Ok(())
}

/// `T_n(A/d)` from the eigendecomposition.
fn chebyshev_oracle(a: &SparseHermitian, n: usize) -> Result<DMatrix<Complex64>> {
    let d = a.sparsity() as f64;
    let spectral = a.spectral()?;
    Ok(spectral.apply(|l| eval_t(n, (l / d).clamp(-1.0, 1.0)).unwrap_or(f64::NAN)))
}

fn walk_suite(report: &mut Report, seed: u64) -> Result<()> {
    let mut rng = suite_rng(seed, 2);
    let (mut block_err, mut backend_err, mut unitary_err, mut encode_err, mut invariance): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut instances = 0usize;
    for &(n, d) in &SHAPES {
        for _ in 0..2 {
            let a = random::hermitian(&mut rng, n, d)?;
            instances += 1;
            let block = WalkBlock::new(&a)?;
            let walk = WalkOperator::new(&a)?;
            unitary_err = unitary_err.max(unitarity_defect(&walk.matrix()));
            let h = a.to_dense() / Complex64::new(d as f64, 0.0);
            encode_err = encode_err.max((walk.chebyshev_block(1) - &h).norm());
            invariance = invariance.max(walk.invariance_defect()?);
            for steps in 0..=12 {
                let top = block.power(steps).view((0, 0), (n, n)).into_owned();
                block_err = block_err.max((&top - chebyshev_oracle(&a, steps)?).norm());
                backend_err = backend_err.max((walk.chebyshev_block(steps) - &top).norm());
            }
        }
    }
    report.section("walk").field("instances", instances).field("max_steps", 12usize);
    report.check(Check::at_most("walk.block_chebyshev", block_err, 1e-9));
    report.check(Check::at_most("walk.backend_equivalence", backend_err, 1e-10));
    report.check(Check::at_most("walk.unitarity", unitary_err, 1e-10));
    report.check(Check::at_most("walk.encoding", encode_err, 1e-12));
    report.check(Check::at_most("walk.invariant_subspace", invariance, 1e-9));
    Ok(())
}

fn lcu_suite(report: &mut Report, seed: u64) -> Result<()> {
    let mut rng = suite_rng(seed, 3);
    let (mut formula, mut bound_slack, mut err_excess, mut op_err): (f64, f64, f64, f64) =
        (0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mut unsquared_violations = 0usize;
    let mut runs = 0usize;
    let eps = 1e-6;
    for &(n, d) in SHAPES.iter().filter(|(n, _)| *n >= 4) {
        let a = random::hermitian(&mut rng, n, d)?;
        let psi = random::state(&mut rng, n);
        let lambda = a.spectral()?.norm_bound();
        let plan = FunctionSpec::Exp.plan(Some(eps), lambda, d)?;
        let out = run_lcu_operator(&a, &plan, &psi, f64::exp)?;
        runs += 1;
        formula = formula.max((out.success_probability - out.spectral_probability).abs());
        bound_slack = bound_slack.min(out.success_probability - out.predicted_probability_bound);
        err_excess = err_excess.max(out.distance - out.error_bound.unwrap_or(f64::NAN));
        op_err = op_err.max(out.operator_error);
        if !out.unsquared_bound_holds() {
            unsquared_violations += 1;
        }
    }
    let mut mono_err: f64 = 0.0;
    for k in [1, 2, 3, 5] {
        let a = random::hermitian(&mut rng, 4, 2)?;
        let psi = random::state(&mut rng, 4);
        let spec = FunctionSpec::Monomial(k);
        let plan = spec.plan(None, a.spectral()?.norm_bound(), 2)?;
        match run_lcu_operator(&a, &plan, &psi, |x| spec.eval(x)) {
            Ok(out) => mono_err = mono_err.max(out.distance),
            Err(Error::Degenerate { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let (mut full_state, mut full_prob): (f64, f64) = (0.0, 0.0);
    for &(n, d) in SHAPES.iter().filter(|(n, _)| *n <= 4) {
        let a = random::hermitian(&mut rng, n, d)?;
        let psi = random::state(&mut rng, n);
        let plan = FunctionSpec::Exp.plan(Some(0.02), a.spectral()?.norm_bound(), d)?;
        let op = run_lcu_operator(&a, &plan, &psi, f64::exp)?;
        let full = run_lcu_full(&a, &plan, &psi, f64::exp)?;
        full_state = full_state.max((op.state - full.state).norm());
        full_prob = full_prob.max((op.success_probability - full.success_probability).abs());
    }
    let (mut fail_excess, mut fail_formula): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let u0 = random::unitary(&mut rng, n);
        let u1 = random::unitary(&mut rng, n);
        let psi = random::state(&mut rng, n);
        let a0 = rng.random_range(0.05..1.0);
        let a1 = rng.random_range(0.05..1.0);
        match two_unitary_lcu(a0, &u0, a1, &u1, &psi) {
            Ok(out) => {
                fail_excess = fail_excess.max(out.p_fail - out.p_fail_bound);
                fail_formula = fail_formula.max((out.p_fail - (1.0 - out.p_success)).abs());
            }
            Err(Error::Degenerate { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    report
        .section("lcu")
        .field("exp_runs", runs)
        .field("eps", eps)
        .field("unsquared_bound_violations", unsquared_violations);
    report.check(Check::at_most("lcu.probability_formula", formula, 1e-12));
    report.check(Check::at_least("lcu.probability_bound", bound_slack, -1e-12));
    report.check(Check::at_most("lcu.normalized_error_bound", err_excess, ROUNDOFF_FLOOR));
    report.check(Check::at_most("lcu.operator_error", op_err, eps));
    report.check(Check::at_most("lcu.monomial_exactness", mono_err, 1e-10));
    report.check(Check::at_most("lcu.full_path_state", full_state, 1e-9));
    report.check(Check::at_most("lcu.full_path_probability", full_prob, 1e-10));
    report.check(Check::at_most("lcu.two_unitary_fail_bound", fail_excess, 0.0));
    report.check(Check::at_most("lcu.two_unitary_fail_formula", fail_formula, 1e-12));
    Ok(())
}

fn amplify_suite(report: &mut Report) -> Result<()> {
    let (mut closed, mut shift, mut plane, mut reps): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let identity = LcuPlan::from_taylor(&TaylorSpec::new(vec![0.0, 1.0], 1.0, 1.0)?, 1)?;
    for p in [0.5f64, 0.25, 0.05] {
        let a = SparseHermitian::diagonal(&[p.sqrt(), 1.0])?;
        let circuit = ExplicitLcu::new(&a, &identity, Completion::Ascending)?;
        let e0 = basis_vector(2, 0);
        let r_default = default_rounds(p)?;
        for rounds in 0..=r_default + 1 {
            let run = amplify_lcu(&circuit, &e0, Some(rounds))?;
            closed = closed.max((run.amplified_probability - run.predicted_probability).abs());
            shift = shift.max(run.state_shift().unwrap_or(f64::INFINITY));
        }
        let run = amplify_lcu(&circuit, &e0, None)?;
        reps = reps.max(run.repetitions as f64 / run.repetition_bound);

        let refl = reflections(&circuit.dense()?, &state_preparation(&e0)?)?;
        let basis = grover_plane(&refl)?;
        let restricted = basis.adjoint() * refl.grover_iterate() * &basis;
        let (s, c) = (2.0 * grover_angle(p)?).sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).map(|x| Complex64::new(x, 0.0));
        plane = plane.max((restricted - rot).norm());
    }
    let mut scaling = Vec::new();
    for p in [0.5, 0.05, 0.005] {
        let r = default_rounds(p)?;
        scaling.push((2 * r + 1) as f64 * p.sqrt());
    }
    report
        .section("amplify")
        .field("scaled_repetitions_p0_5", scaling[0])
        .field("scaled_repetitions_p0_05", scaling[1])
        .field("scaled_repetitions_p0_005", scaling[2]);
    report.check(Check::at_most("amplify.closed_form", closed, 1e-10));
    report.check(Check::at_most("amplify.state_unchanged", shift, 1e-9));
    report.check(Check::at_most("amplify.plane_rotation", plane, 1e-10));
    report.check(Check::at_most("amplify.repetition_bound", reps, 1.0));
    Ok(())
}
