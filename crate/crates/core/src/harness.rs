//! The `analyze`, `apply` and `verify` commands, independent of argument
//! parsing so they can be driven from tests.

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Deserialize;

use crate::amplify::{amplify_analytic, amplify_lcu, default_rounds, AmplificationRun};
use crate::catalog::FunctionSpec;
use crate::cheb::taylor_to_cheb;
use crate::error::{domain, Error, Result};
use crate::hermitian::{MatrixFile, SparseHermitian, SpectralStats};
use crate::lcu::{run_lcu_full, run_lcu_operator, ExplicitLcu, LcuOutcome, LcuPlan, ROUNDOFF_FLOOR};
use crate::linalg::{normalized, uniform_state, Completion};
use crate::report::{matrix_hash, Check, Report};
use crate::verify::{self, Suite};

/// Accuracy used when a non-polynomial function is given without `--eps`.
pub const DEFAULT_EPS: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Parse(_) | Error::Io(_) => EXIT_INPUT,
        Error::Capability(_) => EXIT_CAPABILITY,
        Error::Numerical { .. } | Error::Degenerate { .. } => EXIT_BOUND_VIOLATION,
    }
}

/// Exit code for a finished report.
pub fn report_exit_code(report: &Report) -> i32 {
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_BOUND_VIOLATION
    }
}

pub fn load_matrix(path: &Path) -> Result<SparseHermitian> {
    MatrixFile::load(path)?.to_matrix()
}

/// Input state: the normalized all-ones vector or explicit amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum StateInput {
    Uniform,
    Amplitudes(Vec<(f64, f64)>),
}

#[derive(Deserialize)]
struct StateFile(Vec<(f64, f64)>);

impl StateInput {
    /// `uniform`, or a path to a JSON list of `[re, im]` pairs.
    pub fn from_arg(arg: &str) -> Result<Self> {
        if arg == "uniform" {
            return Ok(StateInput::Uniform);
        }
        let text = std::fs::read_to_string(arg)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let StateFile(pairs) = serde_json::from_str(text).map_err(|e| Error::Parse(format!("state file: {e}")))?;
        Ok(StateInput::Amplitudes(pairs))
    }

    /// The state as a unit vector; explicit amplitudes are normalized.
    pub fn resolve(&self, dim: usize) -> Result<DVector<Complex64>> {
        match self {
            StateInput::Uniform => Ok(uniform_state(dim)),
            StateInput::Amplitudes(pairs) => {
                if pairs.len() != dim {
                    return domain(format!("state has {} amplitudes, matrix has dimension {dim}", pairs.len()));
                }
                if pairs.iter().any(|(re, im)| !(re.is_finite() && im.is_finite())) {
                    return domain("state amplitudes must be finite");
                }
                let v = DVector::from_iterator(dim, pairs.iter().map(|&(re, im)| Complex64::new(re, im)));
                normalized(&v, "input state").map_err(|_| Error::Domain("input state is zero".into()))
            }
        }
    }
}

fn resolve_eps(spec: &FunctionSpec, eps: Option<f64>) -> Result<Option<f64>> {
    if spec.is_exact() {
        return Ok(None);
    }
    let eps = eps.unwrap_or(DEFAULT_EPS);
    if !(eps > 0.0 && eps <= 0.5) {
        return domain(format!("eps must lie in (0, 1/2], got {eps}"));
    }
    Ok(Some(eps))
}

/// Everything `analyze` derives without running the circuit.
struct Analysis {
    spec: FunctionSpec,
    eps: Option<f64>,
    plan: LcuPlan,
    stats: SpectralStats,
}

fn analyze(a: &SparseHermitian, spec: &FunctionSpec, eps: Option<f64>, report: &mut Report) -> Result<Analysis> {
    let eps = resolve_eps(spec, eps)?;
    let spectral = a.spectral()?;
    let raw_norm = spectral.norm_bound();
    let norm_bound = if raw_norm > 0.0 { raw_norm } else { 1.0 };
    let f = |x: f64| spec.eval(x);
    let stats = spectral.stats(f);
    let taylor = spec.taylor_spec(eps, norm_bound)?;
    let plan = LcuPlan::from_taylor(&taylor, a.sparsity())?;
    let beta = taylor_to_cheb(&taylor)?;

    report
        .section("input")
        .field("matrix_sha256", matrix_hash(a))
        .field("dim", a.dim())
        .field("sparsity", a.sparsity())
        .field("norm_bound", norm_bound)
        .field("function", spec.to_string())
        .field("exact", spec.is_exact());
    if let Some(eps) = eps {
        report.field("eps", eps);
    }

    let gamma = plan.weight();
    let approx = |x: f64| plan.eval(x).unwrap_or(f64::NAN);
    let mu_tilde = spectral
        .eigenvalues()
        .iter()
        .map(|&l| approx(l).abs())
        .fold(f64::INFINITY, f64::min);
    let bound = (stats.mu / gamma).powi(2);
    report
        .section("plan")
        .field("terms", plan.len())
        .field("highest_degree", plan.series().degree())
        .field("control_qubits", plan.control_qubits())
        .field("alpha_weight", taylor.weight())
        .field("beta_weight", beta.weight())
        .field("gamma_weight", gamma)
        .field("mu", stats.mu)
        .field("mu_tilde", mu_tilde)
        .field("f_min", stats.f_min)
        .field("probability_bound", bound)
        .field("approx_probability_bound", (mu_tilde / gamma).powi(2));
    if bound > 0.0 && bound <= 1.0 {
        report.field("predicted_rounds", default_rounds(bound)?);
    }
    if stats.mu > 0.0 {
        let estimate = match eps {
            // (α/μ) (C/ε)^{log2(Λd)} log2(C/ε)
            Some(eps) => {
                let ratio = taylor.derivative_bound() / eps;
                let log_ld = (norm_bound * a.sparsity() as f64).log2();
                taylor.weight() / stats.mu * ratio.powf(log_ld) * ratio.log2()
            }
            None => gamma / stats.mu * plan.series().degree().max(1) as f64,
        };
        if estimate.is_finite() {
            report.field("complexity_estimate", estimate);
        }
    }
    Ok(Analysis {
        spec: spec.clone(),
        eps,
        plan,
        stats,
    })
}

/// Plan-only report: truncation order, coefficient weights and bounds.
pub fn cmd_analyze(a: &SparseHermitian, spec: &FunctionSpec, eps: Option<f64>) -> Result<Report> {
    let mut report = Report::new("analyze");
    analyze(a, spec, eps, &mut report)?;
    report.validate()?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApplyOptions {
    pub amplify: bool,
    pub full: bool,
}

fn outcome_checks(report: &mut Report, analysis: &Analysis, out: &LcuOutcome) {
    report.check(Check::at_most(
        "probability_formula",
        (out.success_probability - out.spectral_probability).abs(),
        1e-12,
    ));
    report.check(Check::at_least(
        "probability_bound",
        out.success_probability,
        out.predicted_probability_bound - 1e-12,
    ));
    if let Some(bound) = out.error_bound {
        report.check(Check::at_most("normalized_error_bound", out.distance, bound + ROUNDOFF_FLOOR));
    }
    match analysis.eps {
        Some(eps) => {
            report.check(Check::at_most("operator_error", out.operator_error, eps));
        }
        None => {
            report.check(Check::at_most("exactness", out.distance, 1e-10));
        }
    }
}

fn amplification_fields(report: &mut Report, run: &AmplificationRun, explicit: bool) {
    report
        .section("amplification")
        .field("mode", if explicit { "explicit" } else { "analytic" })
        .field("initial_probability", run.initial_probability)
        .field("rounds", run.rounds)
        .field("amplified_probability", run.amplified_probability)
        .field("predicted_probability", run.predicted_probability)
        .field("residual_failure", run.residual_failure())
        .field("repetitions", run.repetitions)
        .field("repetition_constant", run.repetition_constant)
        .field("repetition_bound", run.repetition_bound);
    report.check(Check::at_most(
        "amplification_repetitions",
        run.repetitions as f64,
        run.repetition_bound,
    ));
    if explicit {
        report.check(Check::at_most(
            "amplification_closed_form",
            (run.amplified_probability - run.predicted_probability).abs(),
            1e-10,
        ));
        report.check(Check::at_most(
            "amplification_state_unchanged",
            run.state_shift().unwrap_or(f64::INFINITY),
            1e-9,
        ));
    }
}

/// Runs the LCU on `ψ` and checks it against the spectral oracle.
pub fn cmd_apply(
    a: &SparseHermitian,
    spec: &FunctionSpec,
    eps: Option<f64>,
    psi: &StateInput,
    options: ApplyOptions,
) -> Result<Report> {
    let mut report = Report::new("apply");
    let analysis = analyze(a, spec, eps, &mut report)?;
    let psi = psi.resolve(a.dim())?;
    let f = |x: f64| analysis.spec.eval(x);
    let out = run_lcu_operator(a, &analysis.plan, &psi, f)?;

    report
        .section("results")
        .field("success_probability", out.success_probability)
        .field("spectral_probability", out.spectral_probability)
        .field("fidelity", out.fidelity)
        .field("distance", out.distance)
        .field("truncation_error", out.truncation_error)
        .field("operator_error", out.operator_error)
        .field("mu", analysis.stats.mu)
        .field("mu_tilde", out.mu_tilde)
        .field("unsquared_bound_holds", out.unsquared_bound_holds())
        .field("deepest_term_steps", out.resources.deepest_term_steps)
        .field("total_walk_steps", out.resources.total_walk_steps);
    if let Some(bound) = out.error_bound {
        report.field("error_bound", bound);
    }
    outcome_checks(&mut report, &analysis, &out);

    if options.full {
        let full = run_lcu_full(a, &analysis.plan, &psi, f)?;
        let state_slack = (&out.state - &full.state).norm();
        let prob_slack = (out.success_probability - full.success_probability).abs();
        report
            .section("full")
            .field("state_slack", state_slack)
            .field("probability_slack", prob_slack)
            .field("entry_queries", full.resources.oracle_queries.entry)
            .field("col_queries", full.resources.oracle_queries.col);
        report.check(Check::at_most("full_path_state", state_slack, 1e-9));
        report.check(Check::at_most("full_path_probability", prob_slack, 1e-10));
    }

    if options.amplify {
        if options.full {
            let circuit = ExplicitLcu::new(a, &analysis.plan, Completion::default())?;
            let run = amplify_lcu(&circuit, &psi, None)?;
            amplification_fields(&mut report, &run, true);
        } else {
            let run = amplify_analytic(out.success_probability, None)?;
            amplification_fields(&mut report, &run, false);
        }
    }
    report.validate()?;
    Ok(report)
}

/// Runs a property suite with a fixed seed.
pub fn cmd_verify(suite: Suite, seed: u64) -> Result<Report> {
    verify::run(suite, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Value;

    fn sample4() -> SparseHermitian {
        SparseHermitian::from_triangle(
            4,
            [
                (0, 0, Complex64::new(0.3, 0.0)),
                (0, 1, Complex64::new(-0.25, 0.2)),
                (1, 2, Complex64::new(0.35, 0.0)),
                (2, 3, Complex64::new(0.1, -0.3)),
                (3, 3, Complex64::new(-0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    fn int(r: &Report, s: &str, k: &str) -> i64 {
        match r.get(s, k) {
            Some(Value::Int(v)) => *v,
            other => panic!("{s}.{k}: {other:?}"),
        }
    }

    fn float(r: &Report, s: &str, k: &str) -> f64 {
        match r.get(s, k) {
            Some(Value::Float(v)) => *v,
            other => panic!("{s}.{k}: {other:?}"),
        }
    }

    #[test]
    fn analyze_examples() {
        let id2 = SparseHermitian::diagonal(&[1.0, 1.0]).unwrap();
        let r = cmd_analyze(&id2, &FunctionSpec::Exp, Some(1e-6)).unwrap();
        assert_eq!(int(&r, "plan", "terms"), 22);
        let alpha: f64 = (0..22).map(|i| 1.0 / (1..=i).map(|k| k as f64).product::<f64>()).sum();
        assert!((float(&r, "plan", "gamma_weight") - alpha).abs() < 1e-14);
        assert!((float(&r, "plan", "alpha_weight") - alpha).abs() < 1e-14);

        let r = cmd_analyze(&sample4(), &FunctionSpec::Monomial(3), None).unwrap();
        assert_eq!(int(&r, "plan", "terms"), 4);
        assert_eq!(r.get("input", "exact"), Some(&Value::Bool(true)));
        assert!(r.get("input", "eps").is_none());
    }

    #[test]
    fn eps_range_is_enforced() {
        let a = sample4();
        for eps in [0.0, -1.0, 0.75] {
            let err = cmd_analyze(&a, &FunctionSpec::Exp, Some(eps)).unwrap_err();
            assert_eq!(exit_code(&err), EXIT_INPUT);
        }
        assert!(cmd_analyze(&a, &FunctionSpec::Exp, Some(0.5)).is_ok());
    }

    #[test]
    fn apply_exp_on_sample() {
        let r = cmd_apply(&sample4(), &FunctionSpec::Exp, Some(1e-6), &StateInput::Uniform, ApplyOptions::default())
            .unwrap();
        assert!(r.passed(), "{}", r.render());
        assert!(float(&r, "results", "fidelity") >= 1.0 - 1e-5);
    }

    #[test]
    fn apply_monomial_is_exact() {
        let r = cmd_apply(&sample4(), &FunctionSpec::Monomial(2), None, &StateInput::Uniform, ApplyOptions::default())
            .unwrap();
        assert!(r.passed(), "{}", r.render());
        assert!(float(&r, "results", "distance") <= 1e-10);
    }

    #[test]
    fn apply_full_and_amplify_quarter_probability() {
        let a = SparseHermitian::diagonal(&[0.5, 1.0]).unwrap();
        let psi = StateInput::Amplitudes(vec![(1.0, 0.0), (0.0, 0.0)]);
        for full in [false, true] {
            let r = cmd_apply(&a, &FunctionSpec::Identity, None, &psi, ApplyOptions { amplify: true, full }).unwrap();
            assert!(r.passed(), "{}", r.render());
            assert!((float(&r, "results", "success_probability") - 0.25).abs() < 1e-14);
            assert_eq!(int(&r, "amplification", "rounds"), 1);
        }
    }

    #[test]
    fn capability_and_degenerate_exit_codes() {
        let big = SparseHermitian::diagonal(&[0.5; 9]).unwrap();
        let err = cmd_apply(
            &big,
            &FunctionSpec::Identity,
            None,
            &StateInput::Uniform,
            ApplyOptions { amplify: false, full: true },
        )
        .unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CAPABILITY);

        let a = SparseHermitian::diagonal(&[0.0, 0.5]).unwrap();
        let psi = StateInput::Amplitudes(vec![(1.0, 0.0), (0.0, 0.0)]);
        let err = cmd_apply(&a, &FunctionSpec::Identity, None, &psi, ApplyOptions::default()).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_BOUND_VIOLATION);

        let err = cmd_analyze(&a, &FunctionSpec::Reciprocal, None).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CAPABILITY);
    }

    #[test]
    fn state_input_parsing() {
        let s = StateInput::parse("[[3, 0], [0, 4]]").unwrap();
        let v = s.resolve(2).unwrap();
        assert!((v[1] - Complex64::new(0.0, 0.8)).norm() < 1e-15);
        assert!(s.resolve(3).is_err());
        assert!(StateInput::parse("[[0, 0]]").unwrap().resolve(1).is_err());
        assert!(matches!(StateInput::parse("{}"), Err(Error::Parse(_))));
    }
}
