//! Closed forms for the entropy-regularized mean-variance problem: the
//! Gaussian investment policy, its value and auxiliary value functions, and
//! the test functions used by the martingale training loss.
//!
//! Everything here is parameterized by the learned triple `Theta = (mu, sigma,
//! delta)` and the preferences `(gamma, lambda, r)`. Writing `S = sigma^2 +
//! delta^2` for the learned instantaneous return variance, the policy is the
//! state-independent Gaussian
//!
//! ```text
//! u ~ Normal( (mu - r) / (gamma S),  lambda / (gamma S) )
//! ```
//!
//! with value function `V(t, x) = x + C(t)` and auxiliary value `g(t, x) = x
//! + h(t)`, where
//!
//! ```text
//! C(t) = (T - t) [ (mu - r)^2 / (2 gamma S) + (lambda/2) log(2 pi lambda / (gamma S)) ]
//! h(t) = (T - t) (mu - r)^2 / (gamma S)
//! ```
//!
//! The jump side of the market enters only through `delta^2`, the jump
//! contribution to instantaneous return variance. For lognormal jump sizes it
//! has the closed form computed by [`delta_squared_merton`].

use crate::error::{Error, Result};
use crate::market::JumpParams;

/// Learned model parameters: drift, diffusion volatility, aggregated jump scale.
///
/// `delta` is carried as a first-class parameter rather than recomputed from
/// jump-level quantities; only the calibrator and the simulated environment
/// know about individual jump parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    pub mu: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl Theta {
    pub fn new(mu: f64, sigma: f64, delta: f64) -> Result<Self> {
        let theta = Theta { mu, sigma, delta };
        theta.validate()?;
        Ok(theta)
    }

    /// Instantaneous return variance `S = sigma^2 + delta^2`.
    pub fn s(&self) -> f64 {
        self.sigma * self.sigma + self.delta * self.delta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.delta.is_finite()) {
            return Err(Error::invalid(format!(
                "theta must be finite, got ({}, {}, {})",
                self.mu, self.sigma, self.delta
            )));
        }
        if self.s() <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma^2 + delta^2 must be positive, got sigma={}, delta={}",
                self.sigma, self.delta
            )));
        }
        Ok(())
    }
}

/// Investor preferences: risk aversion, exploration weight, risk-free rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferenceParams {
    pub gamma: f64,
    pub lambda: f64,
    pub r: f64,
}

impl PreferenceParams {
    pub fn new(gamma: f64, lambda: f64, r: f64) -> Result<Self> {
        let pref = PreferenceParams { gamma, lambda, r };
        pref.validate()?;
        Ok(pref)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !self.r.is_finite() {
            return Err(Error::invalid(format!("r must be finite, got {}", self.r)));
        }
        Ok(())
    }
}

/// The equilibrium investment distribution: a Gaussian over dollar positions,
/// independent of time and wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPolicy {
    /// Dollars held in the risky asset, on average.
    pub mean: f64,
    /// Exploration variance in dollars squared; zero recovers the
    /// deterministic mean-variance control.
    pub variance: f64,
}

/// Aggregated jump variance `delta^2 = integral of (e^z - 1)^2` against the
/// jump measure: `zeta * (e^{2 mu_j + 2 sigma_j^2} - 2 e^{mu_j + sigma_j^2/2} + 1)`.
pub fn delta_squared_merton(jp: &JumpParams) -> f64 {
    jp.zeta
        * ((2.0 * jp.mu_j + 2.0 * jp.sigma_j * jp.sigma_j).exp()
            - 2.0 * (jp.mu_j + 0.5 * jp.sigma_j * jp.sigma_j).exp()
            + 1.0)
}

/// The equilibrium policy for the given parameters and preferences.
pub fn equilibrium_policy(theta: &Theta, pref: &PreferenceParams) -> Result<GaussianPolicy> {
    theta.validate()?;
    pref.validate()?;
    let gs = pref.gamma * theta.s();
    Ok(GaussianPolicy {
        mean: (theta.mu - pref.r) / gs,
        variance: pref.lambda / gs,
    })
}

/// The exploration-weight log summand `(lambda/2) log(2 pi lambda / (gamma S))`.
///
/// Defined as 0 at `lambda = 0` (its limit), so the classical value function
/// is evaluable without a special case at the call sites.
pub(crate) fn lambda_log_term(theta: &Theta, pref: &PreferenceParams) -> f64 {
    if pref.lambda == 0.0 {
        return 0.0;
    }
    0.5 * pref.lambda * (2.0 * std::f64::consts::PI * pref.lambda / (pref.gamma * theta.s())).ln()
}

/// Time-dependent part of the value function, `V(t, x) = x + C(t)`.
pub fn value_c(t: f64, theta: &Theta, pref: &PreferenceParams, horizon: f64) -> f64 {
    let excess = theta.mu - pref.r;
    let per_year = excess * excess / (2.0 * pref.gamma * theta.s()) + lambda_log_term(theta, pref);
    (horizon - t) * per_year
}

/// Time-dependent part of the auxiliary value function, `g(t, x) = x + h(t)`.
/// `x0 + h(0)` is the expected terminal wealth under the policy.
pub fn aux_h(t: f64, theta: &Theta, pref: &PreferenceParams, horizon: f64) -> f64 {
    let excess = theta.mu - pref.r;
    (horizon - t) * excess * excess / (pref.gamma * theta.s())
}

/// Differential entropy of the policy, `0.5 * log(2 pi e * variance)`.
pub fn policy_entropy(pol: &GaussianPolicy) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * pol.variance).ln()
}

/// Which drift test function the training loss pairs with the value increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftTestFn {
    /// `(T - t) [ (mu - r)/(gamma S) + (lambda/2) log(2 pi lambda/(gamma S)) ]`.
    ///
    /// Note the log summand: it is not the mu-derivative of `C(t)` (that
    /// derivative is the `Gradient` variant below), but any adapted
    /// square-integrable process is a valid test function, so the
    /// entropy-adjusted form is kept selectable and is the default.
    #[default]
    EntropyAdjusted,
    /// The mu-gradient of the value function: `(T - t)(mu - r)/(gamma S)`.
    Gradient,
}

/// The three test functions weighting the martingale increments, evaluated at
/// time `t`: sensitivities of `V` in `mu`, `sigma`, and `delta`.
pub fn test_functions(
    t: f64,
    theta: &Theta,
    pref: &PreferenceParams,
    horizon: f64,
) -> Result<(f64, f64, f64)> {
    test_functions_with(DriftTestFn::EntropyAdjusted, t, theta, pref, horizon)
}

/// [`test_functions`] with an explicit choice of the drift test function.
pub fn test_functions_with(
    form: DriftTestFn,
    t: f64,
    theta: &Theta,
    pref: &PreferenceParams,
    horizon: f64,
) -> Result<(f64, f64, f64)> {
    theta.validate()?;
    pref.validate()?;
    let s = theta.s();
    let gs = pref.gamma * s;
    let excess = theta.mu - pref.r;
    let ttg = horizon - t;

    let dv_dmu = match form {
        DriftTestFn::EntropyAdjusted => ttg * (excess / gs + lambda_log_term(theta, pref)),
        DriftTestFn::Gradient => ttg * excess / gs,
    };
    // The sigma and delta sensitivities share the bracket (mu-r)^2 p/(gamma S^2) + lambda p/S
    // evaluated at p = sigma and p = delta respectively.
    let shared = |p: f64| ttg * (excess * excess * p / (gs * s) + pref.lambda * p / s);
    Ok((dv_dmu, -shared(theta.sigma), -shared(theta.delta)))
}
