//! Market model and path simulation.
//!
//! The stock follows a jump-diffusion under the physical measure:
//!
//! ```text
//! dS_t / S_{t-} = mu dt + sigma dW_t + d( sum_{i<=N_t} (e^{Z_i} - 1) )
//! ```
//!
//! with `N` a Poisson process of intensity `zeta` and i.i.d. Gaussian jump
//! sizes `Z_i ~ N(mu_j, sigma_j^2)`. Stock paths use the exact log-scheme, so
//! discretization touches only the jump timing, never the diffusion law.
//!
//! Wealth paths come in two flavours: [`simulate_wealth_theta`] integrates the
//! closed-form wealth dynamics induced by a candidate parameter triple
//! ([`crate::policy::Theta`]), and [`simulate_wealth_sampled`] executes a
//! Gaussian policy draw-by-draw against the market. Both measure wealth in
//! excess of the cash account, so no `r x dt` term appears.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::policy::{equilibrium_policy, GaussianPolicy, PreferenceParams, Theta};

/// Drift and volatility of the diffusive part of the stock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Total expected growth rate of the stock (jumps included).
    pub mu: f64,
    /// Diffusive volatility, `>= 0`.
    pub sigma: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::invalid("market drift must be finite"));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid("market volatility must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Compound-Poisson jump component with Gaussian log jump sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpParams {
    /// Jump arrival intensity per year, `>= 0`.
    pub zeta: f64,
    /// Mean of the log jump size.
    pub mu_j: f64,
    /// Standard deviation of the log jump size, `>= 0`.
    pub sigma_j: f64,
}

impl JumpParams {
    /// Expected relative jump size `kappa = E[e^Z - 1]`.
    pub fn kappa(&self) -> f64 {
        (self.mu_j + 0.5 * self.sigma_j * self.sigma_j).exp() - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.zeta.is_finite() || self.zeta < 0.0 {
            return Err(Error::invalid("jump intensity must be finite and >= 0"));
        }
        if !self.mu_j.is_finite() {
            return Err(Error::invalid("jump size mean must be finite"));
        }
        if !self.sigma_j.is_finite() || self.sigma_j < 0.0 {
            return Err(Error::invalid("jump size std dev must be finite and >= 0"));
        }
        // Second exponential moment must not overflow: it enters the
        // aggregated jump scale.
        let second = 2.0 * self.mu_j + 2.0 * self.sigma_j * self.sigma_j;
        if !second.exp().is_finite() {
            return Err(Error::invalid("jump size parameters overflow E[e^{2Z}]"));
        }
        Ok(())
    }
}

/// Complete description of the simulated market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketEnv {
    pub market: MarketParams,
    pub jumps: JumpParams,
}

impl MarketEnv {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.jumps.validate()
    }
}

/// Uniform time grid on `[t0, t0 + horizon]` with `n_steps` steps.
///
/// The mesh is derived, `dt = horizon / n_steps`, so `n_steps * dt` recovers
/// the horizon exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, horizon: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::invalid("grid start must be finite"));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid("grid horizon must be finite and > 0"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        Ok(Self {
            t0,
            horizon,
            n_steps,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Grid times `t0, t0 + dt, ..., t0 + horizon`, length `n_steps + 1`.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps)
            .map(|n| self.t0 + n as f64 * dt)
            .collect()
    }
}

/// A simulated path sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    /// Grid times, strictly increasing, same length as `values`.
    pub times: Vec<f64>,
    /// Path values at the grid times.
    pub values: Vec<f64>,
}

impl PathGrid {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(
                "path times and values must have equal length",
            ));
        }
        if times.is_empty() {
            return Err(Error::invalid("path must contain at least one point"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("path times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path is non-empty")
    }
}

/// When jump arrivals are drawn during a path.
///
/// `PerStep` draws a Poisson count every step with intensity `zeta * dt`.
/// `PerPath` draws a single Poisson batch for the whole path, applied (and
/// compensated) on the first step; the total arrival intensity matches a
/// single-period view of the same jump risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpTiming {
    #[default]
    PerStep,
    PerPath,
}

/// How the wealth response to a jump is weighted under the candidate-theta
/// dynamics.
///
/// `PolicySampled` draws a fresh policy variate for every jump, which keeps
/// the driving martingale mean-zero jump by jump. `PolicyMean` weights every
/// jump by the policy mean instead, matching a first-moment reading of the
/// same dynamics; its quadratic variation omits the policy-variance times
/// jump-variance cross term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpCoupling {
    #[default]
    PolicySampled,
    PolicyMean,
}

/// Simulation switches shared by the path generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Subtract the jump compensator so the jump term is a martingale.
    pub compensate_jumps: bool,
    pub jump_timing: JumpTiming,
    pub jump_coupling: JumpCoupling,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            compensate_jumps: true,
            jump_timing: JumpTiming::default(),
            jump_coupling: JumpCoupling::default(),
        }
    }
}

/// One Poisson batch of jumps over an interval of length `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpIncrement {
    /// Number of jumps in the interval.
    pub count: u32,
    /// Multiplicative stock impact `prod_j e^{Z_j}`; `1` when no jump fires.
    pub total_mult: f64,
    /// `sum_j (e^{Z_j} - 1) - zeta dt kappa`: the compensated relative jump
    /// sum, mean zero under the model.
    pub compensated_sum: f64,
}

/// Draws the jump activity of one interval.
///
/// With `zeta == 0` this returns `(0, 1, 0)` without consuming randomness, so
/// jump-free configurations share their random stream with pure diffusions.
pub fn sample_jump_increment(jp: &JumpParams, dt: f64, rng: &mut ChaCha8Rng) -> JumpIncrement {
    if jp.zeta == 0.0 {
        return JumpIncrement {
            count: 0,
            total_mult: 1.0,
            compensated_sum: 0.0,
        };
    }
    let poisson = Poisson::new(jp.zeta * dt).expect("positive Poisson intensity");
    let count = poisson.sample(rng) as u32;
    let mut total_mult = 1.0;
    let mut raw_sum = 0.0;
    for _ in 0..count {
        let z: f64 = jp.mu_j + jp.sigma_j * rng.sample::<f64, _>(StandardNormal);
        let mult = z.exp();
        total_mult *= mult;
        raw_sum += mult - 1.0;
    }
    JumpIncrement {
        count,
        total_mult,
        compensated_sum: raw_sum - jp.zeta * dt * jp.kappa(),
    }
}

/// Simulates one stock path with the exact log-scheme and default options
/// (per-step jumps, compensated).
pub fn simulate_stock_path(
    mp: &MarketParams,
    jp: &JumpParams,
    grid: &TimeGrid,
    s0: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathGrid> {
    simulate_stock_path_with(&SimOptions::default(), mp, jp, grid, s0, rng)
}

/// Simulates one stock path with explicit simulation switches.
///
/// Per step the log increment is
///
/// ```text
/// (mu - sigma^2/2) dt - [compensator] + sigma sqrt(dt) xi + sum_j Z_j
/// ```
///
/// with `xi` standard normal. The compensator `zeta kappa dt` is subtracted
/// every step under per-step timing and once under per-path timing, matching
/// where the jump batch lands. Draw order per step is the diffusion increment
/// first, then (only when `zeta > 0` and jumps are due) the jump batch.
pub fn simulate_stock_path_with(
    opts: &SimOptions,
    mp: &MarketParams,
    jp: &JumpParams,
    grid: &TimeGrid,
    s0: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathGrid> {
    mp.validate()?;
    jp.validate()?;
    if !s0.is_finite() || s0 <= 0.0 {
        return Err(Error::invalid("initial stock price must be finite and > 0"));
    }
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let drift = (mp.mu - 0.5 * mp.sigma * mp.sigma) * dt;
    let comp = if opts.compensate_jumps {
        jp.zeta * jp.kappa() * dt
    } else {
        0.0
    };

    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(s0);
    let mut s = s0;
    for n in 0..grid.n_steps() {
        let xi: f64 = rng.sample(StandardNormal);
        let mut log_inc = drift + mp.sigma * sqrt_dt * xi;
        let jumps_due = match opts.jump_timing {
            JumpTiming::PerStep => true,
            JumpTiming::PerPath => n == 0,
        };
        if jumps_due && jp.zeta > 0.0 {
            let jump = sample_jump_increment(jp, dt, rng);
            log_inc += jump.total_mult.ln() - comp;
        } else if jumps_due {
            log_inc -= comp;
        }
        s *= log_inc.exp();
        values.push(s);
    }
    PathGrid::new(grid.times(), values)
}

/// Euler coefficients of the wealth dynamics induced by a candidate theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthCoeffs {
    /// Deterministic drift `(mu_true - r) * c` per unit time.
    pub a: f64,
    /// Diffusion scale `sqrt(sigma_true^2 * (policy_variance + c^2))`.
    pub b: f64,
    /// Policy mean `(mu - r) / (gamma S)` under the candidate theta.
    pub c: f64,
    /// Policy variance `lambda / (gamma S)` under the candidate theta.
    pub policy_variance: f64,
}

/// Computes the wealth Euler coefficients for a candidate theta against a
/// market environment.
pub fn wealth_coefficients(
    theta: &Theta,
    env: &MarketEnv,
    pref: &PreferenceParams,
) -> Result<WealthCoeffs> {
    env.validate()?;
    let pol = equilibrium_policy(theta, pref)?;
    let c = pol.mean;
    let a = (env.market.mu - pref.r) * c;
    let b = (env.market.sigma * env.market.sigma * (pol.variance + c * c)).sqrt();
    Ok(WealthCoeffs {
        a,
        b,
        c,
        policy_variance: pol.variance,
    })
}

/// Simulates one wealth path under the closed-form dynamics induced by a
/// candidate theta.
///
/// Per step:
///
/// ```text
/// X_{n+1} = X_n + a dt + b sqrt(dt) xi + sum_j u_j (e^{Z_j} - 1) - c zeta kappa dt
/// ```
///
/// where the jump weight `u_j` is the policy mean `c` under
/// [`JumpCoupling::PolicyMean`] and a fresh policy draw
/// `u_j ~ N(c, policy_variance)` under [`JumpCoupling::PolicySampled`]. The
/// compensator uses `E[u_j] = c` in both cases and follows the jump timing.
/// Draw order per step: diffusion increment, Poisson count (only when
/// `zeta > 0` and jumps are due), then per jump the size `Z_j` followed by the
/// weight draw when sampling.
pub fn simulate_wealth_theta(
    theta: &Theta,
    env: &MarketEnv,
    pref: &PreferenceParams,
    opts: &SimOptions,
    grid: &TimeGrid,
    x0: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathGrid> {
    if !x0.is_finite() {
        return Err(Error::invalid("initial wealth must be finite"));
    }
    let coeffs = wealth_coefficients(theta, env, pref)?;
    let jp = &env.jumps;
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let comp = if opts.compensate_jumps {
        coeffs.c * jp.zeta * jp.kappa() * dt
    } else {
        0.0
    };
    let weight_sd = coeffs.policy_variance.sqrt();

    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(x0);
    let mut x = x0;
    for n in 0..grid.n_steps() {
        let xi: f64 = rng.sample(StandardNormal);
        let mut inc = coeffs.a * dt + coeffs.b * sqrt_dt * xi;
        let jumps_due = match opts.jump_timing {
            JumpTiming::PerStep => true,
            JumpTiming::PerPath => n == 0,
        };
        if jumps_due {
            if jp.zeta > 0.0 {
                let poisson = Poisson::new(jp.zeta * dt).expect("positive Poisson intensity");
                let count = poisson.sample(rng) as u32;
                for _ in 0..count {
                    let z: f64 = jp.mu_j + jp.sigma_j * rng.sample::<f64, _>(StandardNormal);
                    let weight = match opts.jump_coupling {
                        JumpCoupling::PolicyMean => coeffs.c,
                        JumpCoupling::PolicySampled => {
                            coeffs.c + weight_sd * rng.sample::<f64, _>(StandardNormal)
                        }
                    };
                    inc += weight * (z.exp() - 1.0);
                }
            }
            inc -= comp;
        }
        x += inc;
        values.push(x);
    }
    PathGrid::new(grid.times(), values)
}

/// Simulates one wealth path by executing a Gaussian policy draw-by-draw.
///
/// Per step a dollar position `u ~ policy` is drawn (a zero-variance policy
/// consumes no randomness), then
///
/// ```text
/// X_{n+1} = X_n + u (mu_true - r) dt + u sigma_true sqrt(dt) xi
///               + u [ sum_j (e^{Z_j} - 1) - zeta kappa dt ]
/// ```
///
/// Draw order per step: the position `u`, the diffusion increment, then the
/// jump batch when due.
pub fn simulate_wealth_sampled(
    policy: &GaussianPolicy,
    env: &MarketEnv,
    r: f64,
    opts: &SimOptions,
    grid: &TimeGrid,
    x0: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathGrid> {
    env.validate()?;
    if !x0.is_finite() {
        return Err(Error::invalid("initial wealth must be finite"));
    }
    if !r.is_finite() {
        return Err(Error::invalid("interest rate must be finite"));
    }
    if !(policy.mean.is_finite() && policy.variance.is_finite() && policy.variance >= 0.0) {
        return Err(Error::invalid(
            "policy must have finite mean and variance >= 0",
        ));
    }
    let mp = &env.market;
    let jp = &env.jumps;
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let comp_rate = if opts.compensate_jumps {
        jp.zeta * jp.kappa() * dt
    } else {
        0.0
    };
    let policy_sd = policy.variance.sqrt();

    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(x0);
    let mut x = x0;
    for n in 0..grid.n_steps() {
        let u = if policy.variance > 0.0 {
            policy.mean + policy_sd * rng.sample::<f64, _>(StandardNormal)
        } else {
            policy.mean
        };
        let xi: f64 = rng.sample(StandardNormal);
        let mut inc = u * (mp.mu - r) * dt + u * mp.sigma * sqrt_dt * xi;
        let jumps_due = match opts.jump_timing {
            JumpTiming::PerStep => true,
            JumpTiming::PerPath => n == 0,
        };
        if jumps_due {
            if jp.zeta > 0.0 {
                let poisson = Poisson::new(jp.zeta * dt).expect("positive Poisson intensity");
                let count = poisson.sample(rng) as u32;
                for _ in 0..count {
                    let z: f64 = jp.mu_j + jp.sigma_j * rng.sample::<f64, _>(StandardNormal);
                    inc += u * (z.exp() - 1.0);
                }
            }
            inc -= u * comp_rate;
        }
        x += inc;
        values.push(x);
    }
    PathGrid::new(grid.times(), values)
}
