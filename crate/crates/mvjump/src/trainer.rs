//! Stochastic-approximation training of the parameter triple.
//!
//! One epoch simulates a fresh wealth path under the current candidate theta,
//! scores it with three orthogonality losses, and nudges each coordinate by
//! its own learning rate:
//!
//! ```text
//! L_j = sum_n  w_j(t_n) [ V(t_{n+1}, X_{n+1}) - V(t_n, X_n)
//!                         - (gamma/2) (g(t_{n+1}, X_{n+1})^2 - g(t_n, X_n)^2)
//!                         + lambda H(policy) dt ]
//! theta_j <- theta_j + eta_j L_j
//! ```
//!
//! where `w_j` are the drift, volatility, and jump-scale test functions of
//! [`crate::policy::test_functions`] and `H` is the policy entropy. At the
//! true market triple the bracketed increment has mean zero, so every `L_j`
//! does too and the iteration is stationary in expectation.
//!
//! All three coordinates update simultaneously from the same path and the
//! same pre-update theta. After the update `sigma` is floored at `1e-4` and
//! `delta` at `0`, which keeps `sigma^2 + delta^2` positive, so a valid theta
//! can never leave the valid set.

use std::io::Write as IoWrite;
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{simulate_wealth_theta, MarketEnv, PathGrid, SimOptions, TimeGrid};
use crate::policy::{
    aux_h, equilibrium_policy, policy_entropy, test_functions_with, value_c, DriftTestFn,
    PreferenceParams, Theta,
};
use crate::rng::derive_stream;

/// Lower bound kept on `sigma` after every update.
pub const SIGMA_FLOOR: f64 = 1e-4;

/// Linear learning-rate schedule, expressed as multiplicative factors applied
/// to the per-coordinate base rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    /// Factor at the first epoch.
    pub start_factor: f64,
    /// Factor at the last epoch.
    pub end_factor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            start_factor: 1.0,
            end_factor: 0.0,
        }
    }
}

/// Everything a training run needs besides the initial theta and the market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub n_epochs: usize,
    pub grid: TimeGrid,
    pub pref: PreferenceParams,
    /// Initial wealth of every simulated path.
    pub x0: f64,
    /// Per-coordinate base learning rates `(eta_mu, eta_sigma, eta_delta)`.
    pub base_rates: [f64; 3],
    pub schedule: LrSchedule,
    /// Paths simulated (and averaged over) per epoch.
    pub batch_size: usize,
    pub master_seed: u64,
    pub sim: SimOptions,
    pub drift_test_fn: DriftTestFn,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_epochs == 0 {
            return Err(Error::invalid("training needs at least one epoch"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("initial wealth must be finite"));
        }
        if self
            .base_rates
            .iter()
            .any(|r| !(r.is_finite() && *r >= 0.0))
        {
            return Err(Error::invalid("learning rates must be finite and >= 0"));
        }
        for f in [self.schedule.start_factor, self.schedule.end_factor] {
            if !(f.is_finite() && f >= 0.0) {
                return Err(Error::invalid("schedule factors must be finite and >= 0"));
            }
        }
        self.pref.validate()
    }

    fn terminal_time(&self) -> f64 {
        self.grid.t0() + self.grid.horizon()
    }
}

/// State of one epoch after its update: the resulting theta, the losses that
/// produced it, and the rates applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub theta: Theta,
    pub losses: [f64; 3],
    pub rates: [f64; 3],
}

/// Full per-epoch history of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    /// Theta after the last epoch.
    pub fn final_theta(&self) -> Theta {
        self.records.last().expect("trace is non-empty").theta
    }

    /// Writes the trace as CSV, one row per epoch.
    pub fn to_writer(&self, w: &mut impl IoWrite) -> std::io::Result<()> {
        writeln!(
            w,
            "epoch,mu,sigma,delta,loss_mu,loss_sigma,loss_delta,eta_mu,eta_sigma,eta_delta"
        )?;
        for rec in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                rec.epoch,
                rec.theta.mu,
                rec.theta.sigma,
                rec.theta.delta,
                rec.losses[0],
                rec.losses[1],
                rec.losses[2],
                rec.rates[0],
                rec.rates[1],
                rec.rates[2],
            )?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.to_writer(&mut file)?;
        Ok(())
    }
}

/// Per-coordinate learning rates for one epoch: base rates scaled by the
/// linearly interpolated schedule factor. A single-epoch run uses the start
/// factor.
pub fn lr_schedule(epoch: usize, cfg: &RunConfig) -> [f64; 3] {
    assert!(epoch < cfg.n_epochs, "epoch {} out of range", epoch);
    let factor = if cfg.n_epochs == 1 {
        cfg.schedule.start_factor
    } else {
        let frac = epoch as f64 / (cfg.n_epochs - 1) as f64;
        cfg.schedule.start_factor + (cfg.schedule.end_factor - cfg.schedule.start_factor) * frac
    };
    [
        cfg.base_rates[0] * factor,
        cfg.base_rates[1] * factor,
        cfg.base_rates[2] * factor,
    ]
}

/// All three orthogonality losses of one path under one candidate theta.
///
/// The path must live on the grid in `cfg` (same point count); times are taken
/// from the path itself. With `lambda = 0` the entropy term is defined as 0,
/// recovering the classical unregularized increment.
pub fn oc_losses(path: &PathGrid, theta: &Theta, cfg: &RunConfig) -> Result<[f64; 3]> {
    theta.validate()?;
    cfg.validate()?;
    if path.len() != cfg.grid.n_steps() + 1 {
        return Err(Error::invalid(format!(
            "path has {} points but the grid has {}",
            path.len(),
            cfg.grid.n_steps() + 1
        )));
    }
    let pref = &cfg.pref;
    let terminal = cfg.terminal_time();
    let dt = cfg.grid.dt();
    let entropy_term = if pref.lambda == 0.0 {
        0.0
    } else {
        let pol = equilibrium_policy(theta, pref)?;
        pref.lambda * policy_entropy(&pol) * dt
    };

    let mut losses = [0.0; 3];
    for n in 0..path.len() - 1 {
        let (t0, t1) = (path.times[n], path.times[n + 1]);
        let (x0, x1) = (path.values[n], path.values[n + 1]);
        let v0 = x0 + value_c(t0, theta, pref, terminal);
        let v1 = x1 + value_c(t1, theta, pref, terminal);
        let g0 = x0 + aux_h(t0, theta, pref, terminal);
        let g1 = x1 + aux_h(t1, theta, pref, terminal);
        let bracket = (v1 - v0) - 0.5 * pref.gamma * (g1 * g1 - g0 * g0) + entropy_term;
        let (w1, w2, w3) = test_functions_with(cfg.drift_test_fn, t0, theta, pref, terminal)?;
        losses[0] += w1 * bracket;
        losses[1] += w2 * bracket;
        losses[2] += w3 * bracket;
    }
    Ok(losses)
}

/// One orthogonality loss by coordinate index (`1` drift, `2` volatility,
/// `3` jump scale).
pub fn oc_loss(j: usize, path: &PathGrid, theta: &Theta, cfg: &RunConfig) -> Result<f64> {
    if !(1..=3).contains(&j) {
        return Err(Error::invalid(format!(
            "loss index must be 1, 2, or 3, got {j}"
        )));
    }
    Ok(oc_losses(path, theta, cfg)?[j - 1])
}

/// Runs one epoch: simulates `batch_size` fresh paths under `theta`, averages
/// their losses, and applies the simultaneous update at this epoch's rates.
///
/// Fails if any loss or updated coordinate is non-finite, naming the epoch.
pub fn train_epoch(
    theta: &Theta,
    env: &MarketEnv,
    cfg: &RunConfig,
    epoch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Theta, [f64; 3])> {
    let mut losses = [0.0; 3];
    for _ in 0..cfg.batch_size {
        let path = simulate_wealth_theta(theta, env, &cfg.pref, &cfg.sim, &cfg.grid, cfg.x0, rng)?;
        let one = oc_losses(&path, theta, cfg)?;
        for (acc, l) in losses.iter_mut().zip(one) {
            *acc += l;
        }
    }
    for l in &mut losses {
        *l /= cfg.batch_size as f64;
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite loss at epoch {epoch}: ({}, {}, {})",
            losses[0], losses[1], losses[2]
        )));
    }

    let rates = lr_schedule(epoch, cfg);
    let next = Theta {
        mu: theta.mu + rates[0] * losses[0],
        sigma: (theta.sigma + rates[1] * losses[1]).max(SIGMA_FLOOR),
        delta: (theta.delta + rates[2] * losses[2]).max(0.0),
    };
    if !(next.mu.is_finite() && next.sigma.is_finite() && next.delta.is_finite()) {
        return Err(Error::Numeric(format!(
            "theta left the finite range at epoch {epoch}: ({}, {}, {})",
            next.mu, next.sigma, next.delta
        )));
    }
    Ok((next, losses))
}

/// Full training run: `n_epochs` epochs from `theta0`, each on fresh paths
/// drawn from a per-epoch random stream derived from the master seed.
pub fn train(theta0: &Theta, env: &MarketEnv, cfg: &RunConfig) -> Result<TrainTrace> {
    theta0.validate()?;
    env.validate()?;
    cfg.validate()?;
    let mut theta = *theta0;
    let mut records = Vec::with_capacity(cfg.n_epochs);
    for epoch in 0..cfg.n_epochs {
        let mut rng = derive_stream(cfg.master_seed, epoch as u64 + 1);
        let (next, losses) = train_epoch(&theta, env, cfg, epoch, &mut rng)?;
        records.push(EpochRecord {
            epoch,
            theta: next,
            losses,
            rates: lr_schedule(epoch, cfg),
        });
        theta = next;
    }
    Ok(TrainTrace { records })
}
