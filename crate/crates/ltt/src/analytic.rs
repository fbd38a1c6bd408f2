//! Conditional lineage-through-time densities and expectations for
//! constant-rate birth-death trees with `n` extant species.
//!
//! Four conditioning regimes are supported: known origin age, known MRCA
//! age, survival to the present, and a uniform prior on the (unknown)
//! origin age. Known-age cases are closed-form in the factor
//! `f(sigma, t)`; unknown-age cases integrate over the posterior origin-age
//! density `q_or(t | n)` with the adaptive quadrature in [`crate::quad`].
//!
//! All pmfs are evaluated in log space so they survive `n` in the
//! thousands.

use crate::bdmath::{
    check_sigma, f_factor, log_binomial, p_survival, u_of_t, BirthDeathParams, FValue,
};
use crate::error::{Error, Result};
use crate::quad::{integrate_semi_infinite, QuadratureSpec, Substitution};
use serde::{Deserialize, Serialize};

/// Conditioning regime of an LTT query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "age", rename_all = "kebab-case")]
pub enum Condition {
    /// Origin of the tree is known to be `t` time units ago.
    OriginAge(f64),
    /// The most recent common ancestor of the extant species is `t` ago.
    MrcaAge(f64),
    /// The process survives until `t`; the species count is free.
    Survival(f64),
    /// Uniform prior on the origin age, conditioned on `n` species today.
    UniformAgePrior,
}

impl Condition {
    pub fn age(&self) -> Option<f64> {
        match self {
            Condition::OriginAge(t) | Condition::MrcaAge(t) | Condition::Survival(t) => Some(*t),
            Condition::UniformAgePrior => None,
        }
    }

    pub fn validate(&self, n: u32, params: &BirthDeathParams) -> Result<()> {
        if let Some(t) = self.age() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Domain(format!("age must be > 0, got {t}")));
            }
        }
        match self {
            Condition::MrcaAge(_) if n < 2 => {
                Err(Error::Domain("MRCA conditioning requires n >= 2".into()))
            }
            Condition::UniformAgePrior if params.rho > 1.0 => Err(Error::Unsupported(
                "uniform age prior requires mu <= lambda (rho <= 1)".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Probability vector over the lineage count `m` at relative time `sigma`.
///
/// `probs[i]` is the probability of `m = support_start + i`. Support is
/// `1..=n` for origin-age conditioning and `2..=n` for MRCA conditioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineagePmf {
    pub n: u32,
    pub sigma: f64,
    pub condition: Condition,
    pub support_start: u32,
    pub probs: Vec<f64>,
}

impl LineagePmf {
    pub fn prob(&self, m: u32) -> f64 {
        if m < self.support_start {
            return 0.0;
        }
        self.probs
            .get((m - self.support_start) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (self.support_start as f64 + i as f64) * p)
            .sum()
    }
}

/// Where the numbers in an [`LttCurve`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub expected_lineages: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

/// A sigma-grid of expected lineage counts, analytic or Monte-Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LttCurve {
    pub condition: Condition,
    pub n: u32,
    pub params: BirthDeathParams,
    pub source: CurveSource,
    pub points: Vec<CurvePoint>,
}

fn check_n(n: u32, min: u32) -> Result<()> {
    if n < min {
        return Err(Error::Domain(format!("n must be >= {min}, got {n}")));
    }
    Ok(())
}

fn check_age(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be > 0, got {t}")));
    }
    Ok(())
}

/// Probability that a reconstructed-tree lineage at time `sigma t` has
/// exactly `m` extant descendants: geometric with parameter
/// `u((1 - sigma) t)`.
pub fn descendants_pmf(sigma: f64, t: f64, m: u32, params: &BirthDeathParams) -> Result<f64> {
    check_sigma(sigma)?;
    check_age(t)?;
    if sigma >= 1.0 {
        return Ok(if m == 1 { 1.0 } else { 0.0 });
    }
    if m == 0 {
        return Err(Error::Domain(
            "a reconstructed lineage has at least one descendant (m >= 1)".into(),
        ));
    }
    let u = u_of_t((1.0 - sigma) * t, params)?;
    Ok((1.0 - u) * u.powi(m as i32 - 1))
}

/// Unconditional (survival-conditioned) distribution of the reconstructed
/// lineage count at time `sigma t`: geometric with parameter
/// `u(sigma t) P(t) / P(sigma t)`. At `sigma = 1` this is the
/// conditioned-on-survival form `(1 - u(t)) u(t)^{m-1}`; multiply by
/// `P(t)` (see [`extant_pmf_with_survival`]) for the survival-inclusive
/// probability.
pub fn unconditional_pmf(sigma: f64, t: f64, m: u32, params: &BirthDeathParams) -> Result<f64> {
    check_sigma(sigma)?;
    check_age(t)?;
    if sigma == 0.0 {
        return Err(Error::Domain("unconditional pmf requires sigma > 0".into()));
    }
    if m == 0 {
        return Err(Error::Domain("m >= 1 required".into()));
    }
    let r = u_of_t(sigma * t, params)? * p_survival(t, params)? / p_survival(sigma * t, params)?;
    Ok((1.0 - r) * r.powi(m as i32 - 1))
}

/// Survival-inclusive probability of `n` extant species at age `t`:
/// `P(t) (1 - u(t)) u(t)^{n-1}`.
pub fn extant_pmf_with_survival(t: f64, n: u32, params: &BirthDeathParams) -> Result<f64> {
    check_age(t)?;
    check_n(n, 1)?;
    let u = u_of_t(t, params)?;
    Ok(p_survival(t, params)? * (1.0 - u) * u.powi(n as i32 - 1))
}

/// Log-space evaluation of `C(n-1, m-1) f^{m-1} / (1 + f)^{n-1}`.
fn origin_pmf_at(n: u32, m: u32, f: f64) -> Result<f64> {
    if f == 0.0 {
        return Ok(if m == 1 { 1.0 } else { 0.0 });
    }
    let log_c = log_binomial(n as u64 - 1, m as u64 - 1)?;
    Ok((log_c + (m as f64 - 1.0) * f.ln() - (n as f64 - 1.0) * f.ln_1p()).exp())
}

/// Conditional pmf of the lineage count at `sigma t` given `n` species
/// today and origin age `t`. Point mass at `m = 1` when `sigma = 0` and at
/// `m = n` when `sigma = 1`.
pub fn density_given_origin(
    n: u32,
    m: u32,
    sigma: f64,
    t: f64,
    params: &BirthDeathParams,
) -> Result<f64> {
    check_n(n, 1)?;
    check_sigma(sigma)?;
    check_age(t)?;
    if m < 1 || m > n {
        return Ok(0.0);
    }
    match f_factor(sigma, t, params)? {
        FValue::PoleAtPresent => Ok(if m == n { 1.0 } else { 0.0 }),
        FValue::Finite(f) => origin_pmf_at(n, m, f),
    }
}

/// Expectation of the lineage count at `sigma t` given `n` species today
/// and origin age `t`: `(1 + n f) / (1 + f)`.
pub fn expect_given_origin(n: u32, sigma: f64, t: f64, params: &BirthDeathParams) -> Result<f64> {
    check_n(n, 1)?;
    match f_factor(sigma, t, params)? {
        FValue::PoleAtPresent => Ok(n as f64),
        FValue::Finite(f) => Ok((1.0 + n as f64 * f) / (1.0 + f)),
    }
}

/// Conditional pmf of the lineage count at `sigma t` given `n` species
/// today and MRCA age `t`.
///
/// Evaluated as `C(n-2, m-2) f^{m-2} / (1 + f)^{n-2}` on support `2..=n`,
/// the closed form of the convolution of the two daughter-subtree pmfs
/// averaged over the uniform split of `n` leaves. Point mass at `m = 2`
/// when `sigma = 0`.
pub fn density_given_mrca(
    n: u32,
    m: u32,
    sigma: f64,
    t: f64,
    params: &BirthDeathParams,
) -> Result<f64> {
    check_n(n, 2)?;
    check_sigma(sigma)?;
    check_age(t)?;
    if m < 2 || m > n {
        return Ok(0.0);
    }
    match f_factor(sigma, t, params)? {
        FValue::PoleAtPresent => Ok(if m == n { 1.0 } else { 0.0 }),
        FValue::Finite(f) => {
            if f == 0.0 {
                return Ok(if m == 2 { 1.0 } else { 0.0 });
            }
            let log_c = log_binomial(n as u64 - 2, m as u64 - 2)?;
            Ok((log_c + (m as f64 - 2.0) * f.ln() - (n as f64 - 2.0) * f.ln_1p()).exp())
        }
    }
}

/// Expectation of the lineage count at `sigma t` given `n` species today
/// and MRCA age `t`: `(2 + n f) / (1 + f)`.
pub fn expect_given_mrca(n: u32, sigma: f64, t: f64, params: &BirthDeathParams) -> Result<f64> {
    check_n(n, 2)?;
    match f_factor(sigma, t, params)? {
        FValue::PoleAtPresent => Ok(n as f64),
        FValue::Finite(f) => Ok((2.0 + n as f64 * f) / (1.0 + f)),
    }
}

/// Expected lineage count at `sigma t` conditioned only on survival to `t`:
/// `e^{delta sigma t} (lambda - mu e^{-delta t}) / (lambda - mu e^{-delta (1-sigma) t})`,
/// with limit `(1 + lambda t) / (1 + lambda (1-sigma) t)` at `delta = 0`.
pub fn expect_given_survival(sigma: f64, t: f64, params: &BirthDeathParams) -> Result<f64> {
    check_sigma(sigma)?;
    check_age(t)?;
    if params.is_critical_at(t) {
        let lt = params.lambda * t;
        return Ok((1.0 + lt) / (1.0 + params.lambda * (1.0 - sigma) * t));
    }
    let em = |x: f64| -(-x).exp_m1();
    let d = params.delta;
    // lambda - mu e^{-x} = delta + mu (1 - e^{-x})
    let num = d + params.mu * em(d * t);
    let den = d + params.mu * em(d * (1.0 - sigma) * t);
    Ok((d * sigma * t).exp() * num / den)
}

/// Natural log of the posterior origin-age density `q_or(t | n)` under the
/// uniform age prior. `None` when the density is zero.
fn log_age_density(t: f64, n: u32, params: &BirthDeathParams) -> Option<f64> {
    let nf = n as f64;
    if params.is_critical_at(t) {
        // n lambda^n t^{n-1} / (1 + lambda t)^{n+1}
        let v = nf.ln() + nf * params.lambda.ln() + (nf - 1.0) * t.ln()
            - (nf + 1.0) * (params.lambda * t).ln_1p();
        return Some(v);
    }
    let em = |x: f64| -(-x).exp_m1();
    let d = params.delta;
    let e1 = em(d * t); // 1 - e^{-delta t}
    let den = d + params.mu * e1; // lambda - mu e^{-delta t}
    if e1 <= 0.0 || den <= 0.0 {
        return None;
    }
    Some(
        nf.ln() + nf * params.lambda.ln() + 2.0 * d.ln() + (nf - 1.0) * e1.ln()
            - d * t
            - (nf + 1.0) * den.ln(),
    )
}

/// Posterior density of the origin age under the uniform prior,
/// conditioned on `n` species today:
/// `q_or(t | n) = n lambda^n delta^2 (1-e^{-delta t})^{n-1} e^{-delta t} / (lambda - mu e^{-delta t})^{n+1}`.
pub fn age_density(t: f64, n: u32, params: &BirthDeathParams) -> Result<f64> {
    check_n(n, 1)?;
    check_age(t)?;
    if params.rho > 1.0 {
        return Err(Error::Unsupported(
            "age density requires mu <= lambda (rho <= 1)".into(),
        ));
    }
    Ok(log_age_density(t, n, params).map_or(0.0, f64::exp))
}

/// Pmf of the lineage count at relative time `sigma` when the origin age
/// is unknown (uniform prior): the known-age pmf integrated against
/// `q_or(t | n)`.
pub fn density_unknown_age(
    n: u32,
    m: u32,
    sigma: f64,
    params: &BirthDeathParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_n(n, 1)?;
    check_sigma(sigma)?;
    if params.rho > 1.0 {
        return Err(Error::Unsupported(
            "unknown-age queries require mu <= lambda (rho <= 1)".into(),
        ));
    }
    if m < 1 || m > n {
        return Ok(0.0);
    }
    if n == 1 || sigma == 0.0 {
        return Ok(if m == 1 { 1.0 } else { 0.0 });
    }
    if sigma == 1.0 {
        return Ok(if m == n { 1.0 } else { 0.0 });
    }
    let critical = params.rho == 1.0;
    let sub = if critical {
        Substitution::Rational
    } else {
        Substitution::ExpDecay
    };
    let integrand = |t: f64| {
        let Some(lq) = log_age_density(t, n, params) else {
            return 0.0;
        };
        let p = density_given_origin(n, m, sigma, t, params).unwrap_or(0.0);
        p * lq.exp()
    };
    integrate_semi_infinite(integrand, sub, quad)
        .require_converged(quad)
        .map(|r| r.value)
}

/// Yule closed form `1 + n(n-1) sum_k C(n-2,k) (-1)^k / (k+2) * sigma / (k+2-sigma)`.
///
/// The alternating sum cancels catastrophically already around n = 25
/// (terms grow like C(n-2, n/2) while the result stays O(n)), so it is
/// evaluated through the identity
/// `sum_k C(M,k) (-1)^k / (k+a) = Gamma(a) M! / Gamma(M+1+a)`
/// applied to the partial fractions `sigma/((k+2)(k+2-sigma)) =
/// 1/(k+2-sigma) - 1/(k+2)`, which collapses the whole expression to
/// `n(n-1) Gamma(2-sigma) Gamma(n-1) / Gamma(n+1-sigma)` -- stable for
/// every `n`. The raw alternating loop is kept in the tests as an
/// independent oracle for small `n`.
fn yule_expect_closed(n: u32, sigma: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let nf = n as f64;
    if n == 2 {
        // the gamma factors cancel: 2 Gamma(2-sigma) / Gamma(3-sigma)
        return 2.0 / (2.0 - sigma);
    }
    nf * (nf - 1.0)
        * (ln_gamma(2.0 - sigma) + ln_gamma(nf - 1.0) - ln_gamma(nf + 1.0 - sigma)).exp()
}

fn require_converged_value(
    f: impl Fn(f64) -> f64,
    sub: Substitution,
    quad: &QuadratureSpec,
) -> Result<f64> {
    integrate_semi_infinite(f, sub, quad)
        .require_converged(quad)
        .map(|r| r.value)
}

/// Expected lineage count at relative time `sigma` when the origin age is
/// unknown (uniform prior on `[0, inf)`), given `n` species today.
///
/// Depends on the parameters only through `rho`. Three regimes:
/// Yule (`rho = 0`) has a closed form (see [`yule_expect_closed`]), the
/// critical case (`rho = 1`) a rational integral, and the general
/// case the integral
/// `1 + n(n-1)(1-rho)^2 int (e^{-(2-sigma)t} - e^{-2t}) / (1 - rho e^{-(1-sigma)t})
///  * (1-e^{-t})^{n-2} / (1 - rho e^{-t})^{n+1} dt`.
pub fn expect_unknown_age(
    n: u32,
    sigma: f64,
    params: &BirthDeathParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_n(n, 1)?;
    check_sigma(sigma)?;
    let rho = params.rho;
    if rho > 1.0 {
        return Err(Error::Unsupported(
            "unknown-age queries require mu <= lambda (rho <= 1)".into(),
        ));
    }
    if n == 1 || sigma == 0.0 {
        return Ok(1.0);
    }
    if sigma == 1.0 {
        return Ok(n as f64);
    }
    let nf = n as f64;
    let em = |x: f64| -(-x).exp_m1();

    if rho == 0.0 {
        return Ok(yule_expect_closed(n, sigma));
    }

    if rho == 1.0 {
        // 1 + n(n-1) sigma int t^{n-1} / ((1 + (1-sigma) t)(1 + t)^{n+1}) dt
        let integral = require_converged_value(
            |t| ((nf - 1.0) * t.ln() - ((1.0 - sigma) * t).ln_1p() - (nf + 1.0) * t.ln_1p()).exp(),
            Substitution::Rational,
            quad,
        )?;
        return Ok(1.0 + nf * (nf - 1.0) * sigma * integral);
    }

    // General case: coefficient (1 - rho)^2.
    let integral = require_converged_value(
        |t| {
            let e = em(t); // 1 - e^{-t}
            let den_s = (1.0 - rho) + rho * em((1.0 - sigma) * t); // 1 - rho e^{-(1-sigma)t}
            let den_t = (1.0 - rho) + rho * e; // 1 - rho e^{-t}
            let log_kernel = -2.0 * t + (sigma * t).exp_m1().ln() + (nf - 2.0) * e.ln()
                - den_s.ln()
                - (nf + 1.0) * den_t.ln();
            log_kernel.exp()
        },
        Substitution::ExpDecay,
        quad,
    )?;
    Ok(1.0 + nf * (nf - 1.0) * (1.0 - rho) * (1.0 - rho) * integral)
}

/// Full probability vector over `m` for the given conditioning regime.
pub fn lineage_pmf(
    condition: Condition,
    n: u32,
    sigma: f64,
    params: &BirthDeathParams,
    quad: &QuadratureSpec,
) -> Result<LineagePmf> {
    condition.validate(n, params)?;
    let (support_start, probs) = match condition {
        Condition::OriginAge(t) => {
            let v: Result<Vec<f64>> = (1..=n)
                .map(|m| density_given_origin(n, m, sigma, t, params))
                .collect();
            (1, v?)
        }
        Condition::MrcaAge(t) => {
            let v: Result<Vec<f64>> = (2..=n)
                .map(|m| density_given_mrca(n, m, sigma, t, params))
                .collect();
            (2, v?)
        }
        Condition::UniformAgePrior => {
            let v: Result<Vec<f64>> = (1..=n)
                .map(|m| density_unknown_age(n, m, sigma, params, quad))
                .collect();
            (1, v?)
        }
        Condition::Survival(_) => {
            return Err(Error::Unsupported(
                "no finite-support pmf under survival conditioning; use expect_given_survival"
                    .into(),
            ))
        }
    };
    Ok(LineagePmf {
        n,
        sigma,
        condition,
        support_start,
        probs,
    })
}

/// Expected lineage count at `sigma` under the given conditioning regime.
pub fn expectation(
    condition: Condition,
    n: u32,
    sigma: f64,
    params: &BirthDeathParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    condition.validate(n, params)?;
    match condition {
        Condition::OriginAge(t) => expect_given_origin(n, sigma, t, params),
        Condition::MrcaAge(t) => expect_given_mrca(n, sigma, t, params),
        Condition::Survival(t) => expect_given_survival(sigma, t, params),
        Condition::UniformAgePrior => expect_unknown_age(n, sigma, params, quad),
    }
}

/// Batch evaluation of the expectation over a strictly increasing sigma
/// grid in [0, 1].
pub fn ltt_curve(
    condition: Condition,
    n: u32,
    params: &BirthDeathParams,
    sigma_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<LttCurve> {
    validate_grid(sigma_grid)?;
    let mut points = Vec::with_capacity(sigma_grid.len());
    for &sigma in sigma_grid {
        let expected =
            expectation(condition, n, sigma, params, quad).map_err(|e| e.at_sigma(sigma))?;
        points.push(CurvePoint {
            sigma,
            expected_lineages: expected,
            stderr: None,
        });
    }
    Ok(LttCurve {
        condition,
        n,
        params: *params,
        source: CurveSource::Analytic,
        points,
    })
}

pub(crate) fn validate_grid(sigma_grid: &[f64]) -> Result<()> {
    if sigma_grid.is_empty() {
        return Err(Error::Domain("sigma grid must be non-empty".into()));
    }
    for w in sigma_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(
                "sigma grid must be strictly increasing".into(),
            ));
        }
    }
    if sigma_grid[0] < 0.0 || *sigma_grid.last().unwrap() > 1.0 {
        return Err(Error::Domain("sigma grid must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Uniform sigma grid with `points` entries including both endpoints.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}
