//! Scalar Chebyshev machinery.
//!
//! Evaluation of `T_n` and `U_n`, the exact expansion of monomials in the
//! Chebyshev basis, conversion of a truncated Maclaurin series into a
//! Chebyshev series (optionally rescaled so that it is expressed in
//! `T_j(x / (Λ d))`, the argument a sparse quantum walk produces), and the
//! truncation-order rule derived from a uniform derivative bound.

use crate::error::{capability, domain, Result};

/// Inputs within this distance outside `[-1, 1]` are clamped instead of rejected.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Largest monomial degree accepted by [`monomial_cheb_coeffs`].
///
/// Binomials are built by a multiplicative recurrence in `f64`; they are
/// exact while below 2^53 (k ≲ 56) and carry a few ulps of relative error
/// beyond that, which is harmless for the weights used here.
pub const MAX_MONOMIAL_DEGREE: usize = 128;

/// Smallest truncation order for which the derivative-bound argument holds (L > 2e).
pub const MIN_TRUNCATION_ORDER: usize = 6;

fn clamp_unit(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_SLACK {
        return domain(format!("argument {x} outside [-1, 1]"));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Chebyshev polynomial of the first kind, `T_n(x) = cos(n arccos x)`.
pub fn eval_t(n: usize, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    match n {
        0 => Ok(1.0),
        1 => Ok(x),
        _ if x == 1.0 => Ok(1.0),
        _ if x == -1.0 => Ok(if n.is_multiple_of(2) { 1.0 } else { -1.0 }),
        _ => Ok((n as f64 * x.acos()).cos()),
    }
}

/// Chebyshev polynomial of the second kind, `U_n(cos θ) = sin((n+1)θ) / sin θ`.
///
/// At `x = ±1` the analytic limit `(±1)^n (n + 1)` is returned.
pub fn eval_u(n: usize, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    let np1 = (n + 1) as f64;
    if x == 1.0 {
        return Ok(np1);
    }
    if x == -1.0 {
        return Ok(if n.is_multiple_of(2) { np1 } else { -np1 });
    }
    match n {
        0 => Ok(1.0),
        1 => Ok(2.0 * x),
        _ => {
            let theta = x.acos();
            Ok((np1 * theta).sin() / theta.sin())
        }
    }
}

/// Coefficients `C_{k,0..=k}` with `x^k = Σ_j C_{kj} T_j(x)`.
///
/// `C_{kj} = 2^{1-k} binom(k, (k-j)/2)` for `j > 0` with `k - j` even,
/// `C_{k0} = 2^{-k} binom(k, k/2)` for even `k`, zero otherwise. The
/// entries are nonnegative and sum to one.
pub fn monomial_cheb_coeffs(k: usize) -> Result<Vec<f64>> {
    if k > MAX_MONOMIAL_DEGREE {
        return capability(format!(
            "monomial degree {k} exceeds the supported maximum {MAX_MONOMIAL_DEGREE}"
        ));
    }
    // binom(k, m) for m = 0..=k/2, by multiplicative recurrence.
    let half = k / 2;
    let mut binom = Vec::with_capacity(half + 1);
    let mut b = 1.0_f64;
    binom.push(b);
    for m in 0..half {
        b = b * (k - m) as f64 / (m + 1) as f64;
        binom.push(b);
    }

    let mut out = vec![0.0; k + 1];
    let twice_scale = 2f64.powi(1 - k as i32);
    for j in (k % 2..=k).step_by(2) {
        let m = (k - j) / 2;
        out[j] = if j == 0 {
            binom[m] * 2f64.powi(-(k as i32))
        } else {
            binom[m] * twice_scale
        };
    }
    Ok(out)
}

/// Number of Taylor terms `L` so that the truncation error of a function
/// whose derivatives are bounded by `c` on `(-1, 1)` stays below `eps`.
///
/// `L` is the smallest integer strictly greater than `log2(c / eps)`, and
/// never less than [`MIN_TRUNCATION_ORDER`].
pub fn truncation_order(c: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 0.5) {
        return domain(format!("precision {eps} outside (0, 1/2]"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return domain(format!("derivative bound {c} must be positive and finite"));
    }
    let log = (c / eps).log2();
    let strict = if log < 0.0 { 0 } else { log.floor() as usize + 1 };
    Ok(strict.max(MIN_TRUNCATION_ORDER))
}

/// A truncated Maclaurin series together with the bounds used to size it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSpec {
    coefficients: Vec<f64>,
    derivative_bound: f64,
    norm_bound: f64,
}

impl TaylorSpec {
    pub fn new(coefficients: Vec<f64>, derivative_bound: f64, norm_bound: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return domain("Taylor series needs at least one coefficient");
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return domain(format!("non-finite Taylor coefficient {bad}"));
        }
        if !(derivative_bound > 0.0 && derivative_bound.is_finite()) {
            return domain(format!("derivative bound {derivative_bound} must be positive"));
        }
        if !(norm_bound > 0.0 && norm_bound.is_finite()) {
            return domain(format!("norm bound {norm_bound} must be positive"));
        }
        Ok(Self {
            coefficients,
            derivative_bound,
            norm_bound,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Number of retained terms `L`.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Keeps the first `len` coefficients (or pads with zeros).
    pub fn truncated(&self, len: usize) -> Result<Self> {
        let mut coefficients = self.coefficients.clone();
        coefficients.resize(len, 0.0);
        Self::new(coefficients, self.derivative_bound, self.norm_bound)
    }

    /// 1-norm of the Taylor coefficients.
    pub fn weight(&self) -> f64 {
        self.coefficients.iter().map(|a| a.abs()).sum()
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }
}

/// A finite Chebyshev expansion `Σ_j c_j T_j(x / scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    coefficients: Vec<f64>,
    scale: f64,
}

impl ChebyshevSeries {
    pub fn new(coefficients: Vec<f64>, scale: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return domain("Chebyshev series needs at least one coefficient");
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return domain(format!("non-finite Chebyshev coefficient {bad}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return domain(format!("argument scale {scale} must be positive"));
        }
        Ok(Self {
            coefficients,
            scale,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// 1-norm of the coefficients.
    pub fn weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }

    /// Highest degree carrying a nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    /// Clenshaw evaluation of `Σ_j c_j T_j(x / scale)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let t = clamp_unit(x / self.scale)?;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coefficients[1..].iter().rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        Ok(t * b1 - b2 + self.coefficients[0])
    }
}

/// Rewrites the truncated Taylor polynomial in the Chebyshev basis:
/// `β_j = Σ_{i ≥ j} α_i C_{ij}`.
pub fn taylor_to_cheb(spec: &TaylorSpec) -> Result<ChebyshevSeries> {
    convert(spec.coefficients(), 1.0)
}

/// Chebyshev coefficients of the same polynomial expressed in
/// `T_j(x / (Λ d))`: `γ_j = Σ_{i ≥ j} (Λ d)^i α_i C_{ij}`.
pub fn rescaled_cheb_coeffs(spec: &TaylorSpec, sparsity: usize) -> Result<ChebyshevSeries> {
    if sparsity == 0 {
        return domain("sparsity must be at least 1");
    }
    let scale = spec.norm_bound() * sparsity as f64;
    convert(spec.coefficients(), scale)
}

fn convert(alpha: &[f64], scale: f64) -> Result<ChebyshevSeries> {
    let len = alpha.len();
    if len - 1 > MAX_MONOMIAL_DEGREE {
        return capability(format!(
            "truncation order {len} exceeds the supported maximum {}",
            MAX_MONOMIAL_DEGREE + 1
        ));
    }
    let mut gamma = vec![0.0; len];
    let mut power = 1.0_f64;
    for (i, &a) in alpha.iter().enumerate() {
        if i > 0 {
            power *= scale;
        }
        if a == 0.0 {
            continue;
        }
        let weight = power * a;
        let cij = monomial_cheb_coeffs(i)?;
        for (g, c) in gamma.iter_mut().zip(&cij) {
            *g += weight * c;
        }
        if !weight.is_finite() || gamma.iter().any(|g| !g.is_finite()) {
            return capability(format!(
                "rescaled coefficients overflow at degree {i} with scale {scale}; \
                 maximum safe truncation order is {i}"
            ));
        }
    }
    ChebyshevSeries::new(gamma, scale)
}
