//! Built-in target functions and the special-case strategies for
//! polynomials, the exponential and homogeneous functions.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::cheb::{rescaled_cheb_coeffs, truncation_order, TaylorSpec};
use crate::error::{capability, domain, Error, Result};
use crate::hermitian::SparseHermitian;
use crate::lcu::{run_lcu_operator, LcuPlan, Resources};
use crate::linalg::normalized;

/// A target function `f`, given by its Maclaurin coefficients and a
/// pointwise evaluator used as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Exp,
    /// `e^{-x}`.
    ExpNeg,
    Identity,
    Monomial(usize),
    /// Coefficients in ascending powers.
    Polynomial(Vec<f64>),
    /// `1/x`; only its homogeneity is usable, it has no Maclaurin series.
    Reciprocal,
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let no_params = |spec: FunctionSpec| match params {
            None => Ok(spec),
            Some(_) => Err(Error::Parse(format!("function '{name}' takes no parameters"))),
        };
        match name {
            "exp" => no_params(FunctionSpec::Exp),
            "exp_neg" => no_params(FunctionSpec::ExpNeg),
            "identity" => no_params(FunctionSpec::Identity),
            "reciprocal" => no_params(FunctionSpec::Reciprocal),
            "monomial" => {
                let k = params
                    .ok_or_else(|| Error::Parse("monomial needs a degree, e.g. monomial:3".into()))?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad monomial degree: {e}")))?;
                Ok(FunctionSpec::Monomial(k))
            }
            "polynomial" => {
                let list = params
                    .ok_or_else(|| Error::Parse("polynomial needs coefficients, e.g. polynomial:1,0,2".into()))?;
                let coeffs = list
                    .split(',')
                    .map(|c| {
                        let v = c
                            .trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad polynomial coefficient '{c}': {e}")))?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::Parse(format!("non-finite polynomial coefficient '{c}'")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                if coeffs.iter().all(|&c| c == 0.0) {
                    return Err(Error::Parse("polynomial must have a nonzero coefficient".into()));
                }
                Ok(FunctionSpec::Polynomial(coeffs))
            }
            _ => Err(Error::Parse(format!("unknown function '{s}'"))),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Exp => write!(f, "exp"),
            FunctionSpec::ExpNeg => write!(f, "exp_neg"),
            FunctionSpec::Identity => write!(f, "identity"),
            FunctionSpec::Reciprocal => write!(f, "reciprocal"),
            FunctionSpec::Monomial(k) => write!(f, "monomial:{k}"),
            FunctionSpec::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|v| format!("{v:?}")).collect();
                write!(f, "polynomial:{}", parts.join(","))
            }
        }
    }
}

/// Looks up a built-in function by name, e.g. `exp` or `monomial:3`.
pub fn builtin(name: &str) -> Result<FunctionSpec> {
    name.parse()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `e^{a x}` Maclaurin coefficients.
fn exp_coefficients(len: usize, a: f64) -> Vec<f64> {
    let mut term = 1.0;
    (0..len)
        .map(|i| {
            if i > 0 {
                term *= a / i as f64;
            }
            term
        })
        .collect()
}

impl FunctionSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FunctionSpec::Exp => x.exp(),
            FunctionSpec::ExpNeg => (-x).exp(),
            FunctionSpec::Identity => x,
            FunctionSpec::Monomial(k) => x.powi(*k as i32),
            FunctionSpec::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            FunctionSpec::Reciprocal => 1.0 / x,
        }
    }

    /// Degree of a polynomial target, `None` for transcendental ones.
    pub fn exact_degree(&self) -> Option<usize> {
        match self {
            FunctionSpec::Identity => Some(1),
            FunctionSpec::Monomial(k) => Some(*k),
            FunctionSpec::Polynomial(c) => Some(c.iter().rposition(|&v| v != 0.0).unwrap_or(0)),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact_degree().is_some()
    }

    /// `k` with `f(cx) = c^k f(x)`, when `f` is homogeneous.
    pub fn homogeneity_degree(&self) -> Option<i32> {
        match self {
            FunctionSpec::Identity => Some(1),
            FunctionSpec::Monomial(k) => Some(*k as i32),
            FunctionSpec::Reciprocal => Some(-1),
            FunctionSpec::Polynomial(c) => {
                let mut nonzero = c.iter().enumerate().filter(|(_, &v)| v != 0.0);
                match (nonzero.next(), nonzero.next()) {
                    (Some((k, _)), None) => Some(k as i32),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// `α_0, …, α_{len-1}`.
    pub fn taylor_coefficients(&self, len: usize) -> Result<Vec<f64>> {
        let mut alpha = match self {
            FunctionSpec::Exp => exp_coefficients(len, 1.0),
            FunctionSpec::ExpNeg => exp_coefficients(len, -1.0),
            FunctionSpec::Identity => vec![0.0, 1.0],
            FunctionSpec::Monomial(k) => {
                let mut v = vec![0.0; k + 1];
                v[*k] = 1.0;
                v
            }
            FunctionSpec::Polynomial(c) => c.clone(),
            FunctionSpec::Reciprocal => {
                return capability("1/x has no Maclaurin series; use its homogeneity with a polynomial approximant")
            }
        };
        alpha.resize(len, 0.0);
        Ok(alpha)
    }

    /// `C ≥ max_i sup_{(−1,1)} |f^{(i)}|`.
    pub fn derivative_bound(&self) -> Result<f64> {
        Ok(match self {
            FunctionSpec::Exp | FunctionSpec::ExpNeg => std::f64::consts::E,
            FunctionSpec::Identity => 1.0,
            FunctionSpec::Monomial(k) => factorial(*k),
            FunctionSpec::Polynomial(c) => (0..c.len())
                .map(|i| {
                    c.iter()
                        .enumerate()
                        .skip(i)
                        .map(|(k, a)| a.abs() * factorial(k) / factorial(k - i))
                        .sum::<f64>()
                })
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE),
            FunctionSpec::Reciprocal => return capability("1/x is unbounded near 0"),
        })
    }

    /// Number of Maclaurin terms kept. Polynomials are kept whole and need no
    /// `ε`; for the exponential the count also covers the Lagrange remainder on
    /// `[−Λ, Λ]` when `Λ > 1`.
    pub fn truncation_len(&self, eps: Option<f64>, norm_bound: f64) -> Result<usize> {
        if let Some(deg) = self.exact_degree() {
            return Ok(deg + 1);
        }
        let eps = eps.ok_or_else(|| Error::Domain(format!("{self} needs an accuracy eps")))?;
        let mut len = truncation_order(self.derivative_bound()?, eps)?;
        if norm_bound > 1.0 {
            // e^Λ Λ^L / L! ≤ ε
            let mut remainder = norm_bound.exp() * norm_bound.powi(len as i32) / factorial(len);
            while remainder > eps {
                len += 1;
                remainder *= norm_bound / len as f64;
            }
        }
        Ok(len)
    }

    pub fn taylor_spec(&self, eps: Option<f64>, norm_bound: f64) -> Result<TaylorSpec> {
        let len = self.truncation_len(eps, norm_bound)?;
        TaylorSpec::new(self.taylor_coefficients(len)?, self.derivative_bound()?, norm_bound)
    }

    /// LCU plan for a matrix with norm bound `Λ` and sparsity `d`.
    pub fn plan(&self, eps: Option<f64>, norm_bound: f64, sparsity: usize) -> Result<LcuPlan> {
        LcuPlan::from_taylor(&self.taylor_spec(eps, norm_bound)?, sparsity)
    }
}

/// `d^k`, so that `f(A) = d^k f(A/d)` for `f` homogeneous of degree `k`.
pub fn homogeneous_rescale(spec: &FunctionSpec, d: f64) -> Result<f64> {
    let k = spec
        .homogeneity_degree()
        .ok_or_else(|| Error::Domain(format!("{spec} is not homogeneous")))?;
    if !(d > 0.0 && d.is_finite()) {
        return domain(format!("rescale factor must be positive, got {d}"));
    }
    Ok(d.powi(k))
}

/// Outcome of applying `e^A = (e^{A/d})^d` stage by stage.
#[derive(Debug, Clone)]
pub struct RepeatedExp {
    pub state: DVector<Complex64>,
    pub stage_probabilities: Vec<f64>,
    pub cumulative_probability: f64,
    pub stages: usize,
    /// `ε_total / d`.
    pub stage_eps: f64,
    /// Maclaurin terms per stage.
    pub stage_len: usize,
    /// `γ` of one `e^{x/d}` stage.
    pub stage_weight: f64,
    /// `γ` of the direct `e^x` plan at the same sparsity and `ε_total`.
    pub single_shot_weight: f64,
    pub fidelity: f64,
    pub distance: f64,
    /// Sum of the per-stage normalized-state bounds.
    pub error_bound: f64,
    pub resources: Resources,
}

impl RepeatedExp {
    pub fn weight_ratio(&self) -> f64 {
        self.single_shot_weight / self.stage_weight
    }
}

/// Applies `e^A` as `d` successive `e^{A/d}` stages at sparsity `d`, each
/// renormalized before the next. Requires `‖A‖ ≤ 1`.
pub fn exp_repeated(a: &SparseHermitian, d: usize, psi: &DVector<Complex64>, eps_total: f64) -> Result<RepeatedExp> {
    if d == 0 {
        return domain("stage count must be at least 1");
    }
    if !(eps_total > 0.0 && eps_total <= 0.5) {
        return domain(format!("eps must lie in (0, 1/2], got {eps_total}"));
    }
    let a = if a.sparsity() == d {
        a.clone()
    } else {
        a.clone().with_sparsity(d)?
    };
    let spectral = a.spectral()?;
    if spectral.norm_bound() > 1.0 + 1e-10 {
        return domain(format!("exp_repeated requires |A| <= 1, got {}", spectral.norm_bound()));
    }
    let scale = d as f64;
    let stage_eps = eps_total / scale;
    // e^{x/d} has all derivatives bounded by e^{1/d} on (−1, 1).
    let stage_c = (1.0 / scale).exp();
    let stage_len = truncation_order(stage_c, stage_eps)?;
    let stage_spec = TaylorSpec::new(exp_coefficients(stage_len, 1.0 / scale), stage_c, 1.0)?;
    let plan = LcuPlan::from_taylor(&stage_spec, d)?;

    let single = FunctionSpec::Exp.taylor_spec(Some(eps_total), 1.0)?;
    let single_shot_weight = rescaled_cheb_coeffs(&single, d)?.weight();

    let mut state = psi.clone();
    let mut stage_probabilities = Vec::with_capacity(d);
    let mut error_bound = 0.0;
    let mut resources = Resources::default();
    for stage in 0..d {
        let out = run_lcu_operator(&a, &plan, &state, |x| (x / scale).exp()).map_err(|e| match e {
            Error::Degenerate { context, norm } => Error::Degenerate {
                context: format!("exp_repeated stage {stage}: {context}"),
                norm,
            },
            other => other,
        })?;
        stage_probabilities.push(out.success_probability);
        error_bound += out.error_bound.unwrap_or(f64::INFINITY);
        resources.deepest_term_steps += out.resources.deepest_term_steps;
        resources.total_walk_steps += out.resources.total_walk_steps;
        state = out.state;
    }

    let exact = normalized(&spectral.apply_to(f64::exp, psi), "exact e^A ψ")?;
    let overlap = exact.dotc(&state);
    Ok(RepeatedExp {
        cumulative_probability: stage_probabilities.iter().product(),
        stage_probabilities,
        stages: d,
        stage_eps,
        stage_len,
        stage_weight: plan.weight(),
        single_shot_weight,
        fidelity: overlap.norm_sqr(),
        distance: (&state - &exact).norm(),
        error_bound,
        resources,
        state,
    })
}
