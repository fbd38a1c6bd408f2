//! Scalar functions of the constant-rate birth-death model.
//!
//! The birth rate is `lambda`, the death rate `mu`. Everything downstream
//! is expressed through the survival probability `P(t)`, the function
//! `u(t)` and the factor `f(sigma, t)` of the conditional lineage-count
//! distribution. All three have removable singularities at `delta = 0`
//! (the critical branching process); we switch to the analytic limits
//! when `|delta * t|` drops below [`CRITICAL_SWITCH`], where the closed
//! forms lose more than half the mantissa to cancellation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Below this value of `|delta * t|` the critical-limit branch is used.
pub const CRITICAL_SWITCH: f64 = 1e-8;

/// Rates of the birth-death model together with the derived quantities
/// `delta = lambda - mu` and `rho = mu / lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathParams {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub rho: f64,
}

impl BirthDeathParams {
    /// Validates `lambda > 0`, `mu >= 0` and derives `delta`, `rho`.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self {
            lambda,
            mu,
            delta: lambda - mu,
            rho: mu / lambda,
        })
    }

    /// Pure-birth (Yule) model with the given rate.
    pub fn yule(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0)
    }

    /// True when the model is (numerically) the critical branching process
    /// at horizon `t`, i.e. the `delta = 0` limits apply.
    pub fn is_critical_at(&self, t: f64) -> bool {
        (self.delta * t).abs() < CRITICAL_SWITCH
    }
}

/// Evaluation point: absolute tree age `t` and relative time fraction
/// `sigma` in `[0, 1]`. `t` is absent for unknown-age queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub t: Option<f64>,
    pub sigma: f64,
}

impl EvalPoint {
    pub fn new(t: Option<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if let Some(t) = t {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Domain(format!("t must be > 0, got {t}")));
            }
        }
        Ok(Self { t, sigma })
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Domain(format!(
            "sigma must be in [0,1], got {sigma}"
        )));
    }
    Ok(())
}

/// `1 - e^{-x}`, stable near zero.
#[inline]
fn em(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Survival probability `P(t) = (lambda - mu) / (lambda - mu e^{-delta t})`.
///
/// Limit `1 / (1 + lambda t)` at `delta = 0`. Equals 1 at `t = 0`.
pub fn p_survival(t: f64, params: &BirthDeathParams) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    if params.is_critical_at(t) {
        return Ok(1.0 / (1.0 + params.lambda * t));
    }
    // lambda - mu e^{-delta t} = delta + mu (1 - e^{-delta t})
    Ok(params.delta / (params.delta + params.mu * em(params.delta * t)))
}

/// `u(t) = lambda (1 - e^{-delta t}) / (lambda - mu e^{-delta t})`.
///
/// Limit `lambda t / (1 + lambda t)` at `delta = 0`. Equals 0 at `t = 0`.
pub fn u_of_t(t: f64, params: &BirthDeathParams) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    if params.is_critical_at(t) {
        let lt = params.lambda * t;
        return Ok(lt / (1.0 + lt));
    }
    let e = em(params.delta * t);
    Ok(params.lambda * e / (params.delta + params.mu * e))
}

/// Value of the conditional-distribution factor `f(sigma, t)`, or the pole
/// at `sigma = 1` which callers must treat as the point mass `m = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FValue {
    Finite(f64),
    /// `sigma = 1`: f diverges; the conditional distribution degenerates
    /// to the point mass at `m = n`.
    PoleAtPresent,
}

impl FValue {
    /// Unwraps the finite value; callers use this after handling the
    /// `sigma = 1` case themselves.
    pub fn expect_finite(self) -> f64 {
        match self {
            FValue::Finite(v) => v,
            FValue::PoleAtPresent => panic!("f factor pole at sigma = 1 not handled by caller"),
        }
    }
}

/// The factor
/// `f(sigma, t) = (1-rho)(1-e^{-sigma delta t}) e^{-(1-sigma) delta t}
///  / ((1-e^{-(1-sigma) delta t})(1-rho e^{-delta t}))`
/// governing the lineage-count distribution conditioned on `n` species today.
///
/// Returns 0 at `sigma = 0`, [`FValue::PoleAtPresent`] at `sigma = 1`, and
/// the limit `sigma / ((1-sigma)(1+lambda t))` when `delta = 0`.
pub fn f_factor(sigma: f64, t: f64, params: &BirthDeathParams) -> Result<FValue> {
    check_sigma(sigma)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be > 0, got {t}")));
    }
    if sigma == 0.0 {
        return Ok(FValue::Finite(0.0));
    }
    if sigma == 1.0 {
        return Ok(FValue::PoleAtPresent);
    }
    if params.is_critical_at(t) {
        return Ok(FValue::Finite(
            sigma / ((1.0 - sigma) * (1.0 + params.lambda * t)),
        ));
    }
    let dt = params.delta * t;
    // 1 - rho e^{-delta t} = (1 - rho) + rho (1 - e^{-delta t})
    let one_minus_rho_e = (1.0 - params.rho) + params.rho * em(dt);
    let val = (1.0 - params.rho) * em(sigma * dt) * (-(1.0 - sigma) * dt).exp()
        / (em((1.0 - sigma) * dt) * one_minus_rho_e);
    Ok(FValue::Finite(val))
}

/// `ln C(n, k)`; accurate to better than 1e-12 relative for `n` up to 10^6.
///
/// For small `min(k, n-k)` the log-gamma difference cancels (three numbers
/// of order n ln n collapsing to order k ln n), so the logs of the `k`
/// factors are summed directly instead.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("log_binomial: k = {k} > n = {n}")));
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if k <= 1000 {
        let mut acc = 0.0;
        for i in 0..k {
            acc += ((n - i) as f64 / (i + 1) as f64).ln();
        }
        return Ok(acc);
    }
    use statrs::function::gamma::ln_gamma;
    Ok(ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
}
