//! Monte-Carlo performance evaluation of a learned parameter triple.
//!
//! Terminal wealth is collected over many independent paths and summarized
//! with standard errors:
//!
//! * `se_mean = sd / sqrt(n)`
//! * `se_vol  = sd / sqrt(2 (n - 1))`
//! * `sharpe  = (mean - riskfree) / sd`, reported as 0 with a flag when the
//!   paths are degenerate
//! * `j_emp   = mean - (gamma/2) var`, the empirical mean-variance objective,
//!   with `se_j` the standard error of the per-path contributions
//!   `j_i = x_i - (gamma/2)(x_i - mean)^2`.
//!
//! Three evaluation modes share this summary. `ThetaProcess` integrates the
//! closed-form wealth dynamics, `SampledPolicy` executes the Gaussian policy
//! draw by draw, and `PolicyMean` holds the deterministic mean position
//! against a simulated stock path while the residual account accrues simple
//! interest. The first two measure wealth in excess of cash, so their
//! risk-free benchmark is the initial wealth itself.

use std::io::Write as IoWrite;

use crate::error::{Error, Result};
use crate::market::{
    simulate_stock_path_with, simulate_wealth_sampled, simulate_wealth_theta, MarketEnv,
    SimOptions, TimeGrid,
};
use crate::policy::{aux_h, equilibrium_policy, value_c, GaussianPolicy, PreferenceParams, Theta};
use crate::rng::derive_stream;
use rand::Rng;
use rand_distr::StandardNormal;

/// Which wealth process the evaluation integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Closed-form wealth dynamics induced by the candidate theta.
    #[default]
    ThetaProcess,
    /// Execute the Gaussian policy draw by draw against the market.
    SampledPolicy,
    /// Hold the constant mean position against a simulated stock path.
    PolicyMean,
}

/// Summary statistics of one batch of terminal wealths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceReport {
    pub n_paths: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub vol: f64,
    pub se_vol: f64,
    pub sharpe: f64,
    /// Set when the terminal wealths have zero spread and the Sharpe ratio is
    /// reported as 0.
    pub sharpe_degenerate: bool,
    pub j_empirical: f64,
    pub se_j: f64,
    pub riskfree_terminal: f64,
    pub theoretical_mean: f64,
    pub theoretical_v: f64,
}

/// Column header matching [`PerformanceReport::write_row`].
pub const REPORT_HEADER: &str =
    "n_paths,mean,se_mean,vol,se_vol,sharpe,j_emp,se_j,riskfree,theo_mean,theo_V";

impl PerformanceReport {
    /// Writes the report as one CSV row under [`REPORT_HEADER`].
    pub fn write_row(&self, w: &mut impl IoWrite) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n_paths,
            self.mean,
            self.se_mean,
            self.vol,
            self.se_vol,
            self.sharpe,
            self.j_empirical,
            self.se_j,
            self.riskfree_terminal,
            self.theoretical_mean,
            self.theoretical_v,
        )
    }
}

/// Expected terminal wealth and value-function benchmark `(x0 + h(0), x0 +
/// C(0))` for the given preferences over the full horizon.
pub fn theoretical_benchmarks(
    theta: &Theta,
    pref: &PreferenceParams,
    horizon: f64,
    x0: f64,
) -> Result<(f64, f64)> {
    theta.validate()?;
    pref.validate()?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid("horizon must be finite and >= 0"));
    }
    Ok((
        x0 + aux_h(0.0, theta, pref, horizon),
        x0 + value_c(0.0, theta, pref, horizon),
    ))
}

/// Terminal value of the cash account compounding simple interest per step.
pub fn riskfree_terminal(x0: f64, r: f64, grid: &TimeGrid) -> f64 {
    x0 * (1.0 + r * grid.dt()).powi(grid.n_steps() as i32)
}

/// Simulates `n_paths` terminal wealths in the given mode. Path `i` draws
/// from the stream derived from `(master_seed, i)`, so any prefix of the
/// returned vector is independent of `n_paths`.
#[allow(clippy::too_many_arguments)]
pub fn run_evaluation(
    mode: EvalMode,
    theta: &Theta,
    pref: &PreferenceParams,
    env: &MarketEnv,
    opts: &SimOptions,
    grid: &TimeGrid,
    x0: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if n_paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let mut terminals = Vec::with_capacity(n_paths);
    match mode {
        EvalMode::ThetaProcess => {
            for i in 0..n_paths {
                let mut rng = derive_stream(master_seed, i as u64);
                let path = simulate_wealth_theta(theta, env, pref, opts, grid, x0, &mut rng)?;
                terminals.push(path.terminal());
            }
        }
        EvalMode::SampledPolicy => {
            let policy = equilibrium_policy(theta, pref)?;
            for i in 0..n_paths {
                let mut rng = derive_stream(master_seed, i as u64);
                let path = simulate_wealth_sampled(&policy, env, pref.r, opts, grid, x0, &mut rng)?;
                terminals.push(path.terminal());
            }
        }
        EvalMode::PolicyMean => {
            let policy = equilibrium_policy(theta, pref)?;
            let dt = grid.dt();
            for i in 0..n_paths {
                let mut rng = derive_stream(master_seed, i as u64);
                let stock =
                    simulate_stock_path_with(opts, &env.market, &env.jumps, grid, 1.0, &mut rng)?;
                let mut x = x0;
                for w in stock.values.windows(2) {
                    let ret = w[1] / w[0] - 1.0;
                    x += policy.mean * ret + (x - policy.mean) * pref.r * dt;
                }
                terminals.push(x);
            }
        }
    }
    Ok(terminals)
}

/// Replays one realized price path for `n_portfolios` independent portfolios.
///
/// Each period the portfolio holds a fresh policy draw in the risky asset and
/// the remainder in cash at that period's simple rate:
///
/// ```text
/// x_{t+1} = x_t + u_t (p_{t+1}/p_t - 1) + (x_t - u_t) rate_t
/// ```
///
/// The single historical path is shared by all portfolios, so the spread
/// across portfolios comes entirely from policy sampling; a zero-variance
/// policy consumes no randomness and every portfolio coincides with the
/// deterministic mean-position replay. Portfolio `i` draws from the stream
/// derived from `(master_seed, i)`.
pub fn replay_portfolios(
    policy: &GaussianPolicy,
    prices: &[f64],
    period_rates: &[f64],
    x0: f64,
    n_portfolios: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::data("need at least two prices to replay a period"));
    }
    if period_rates.len() != prices.len() - 1 {
        return Err(Error::data(format!(
            "got {} period rates for {} price steps",
            period_rates.len(),
            prices.len() - 1
        )));
    }
    if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::data("prices must be positive and finite"));
    }
    if period_rates.iter().any(|r| !r.is_finite()) {
        return Err(Error::data("period rates must be finite"));
    }
    if !x0.is_finite() {
        return Err(Error::invalid("initial wealth must be finite"));
    }
    if n_portfolios == 0 {
        return Err(Error::invalid("need at least one portfolio"));
    }
    if !(policy.mean.is_finite() && policy.variance.is_finite() && policy.variance >= 0.0) {
        return Err(Error::invalid(
            "policy must have finite mean and variance >= 0",
        ));
    }
    let policy_sd = policy.variance.sqrt();
    let mut terminals = Vec::with_capacity(n_portfolios);
    for i in 0..n_portfolios {
        let mut rng = derive_stream(master_seed, i as u64);
        let mut x = x0;
        for (w, rate) in prices.windows(2).zip(period_rates) {
            let u = if policy.variance > 0.0 {
                policy.mean + policy_sd * rng.sample::<f64, _>(StandardNormal)
            } else {
                policy.mean
            };
            x += u * (w[1] / w[0] - 1.0) + (x - u) * rate;
        }
        terminals.push(x);
    }
    Ok(terminals)
}

/// Summarizes a batch of terminal wealths against a risk-free benchmark and
/// the closed-form targets.
pub fn performance_stats(
    terminals: &[f64],
    pref: &PreferenceParams,
    riskfree_terminal: f64,
    theoretical: (f64, f64),
) -> Result<PerformanceReport> {
    pref.validate()?;
    if terminals.len() < 2 {
        return Err(Error::invalid(
            "need at least two terminal wealths for spreads",
        ));
    }
    if terminals.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(
            "terminal wealths contain a non-finite value".into(),
        ));
    }
    let n = terminals.len() as f64;
    let mean = terminals.iter().sum::<f64>() / n;
    let var = terminals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let vol = var.sqrt();
    let se_mean = vol / n.sqrt();
    let se_vol = vol / (2.0 * (n - 1.0)).sqrt();
    let sharpe_degenerate = vol == 0.0;
    let sharpe = if sharpe_degenerate {
        0.0
    } else {
        (mean - riskfree_terminal) / vol
    };
    let j_empirical = mean - 0.5 * pref.gamma * var;
    let contributions: Vec<f64> = terminals
        .iter()
        .map(|x| x - 0.5 * pref.gamma * (x - mean).powi(2))
        .collect();
    let j_mean = contributions.iter().sum::<f64>() / n;
    let j_var = contributions
        .iter()
        .map(|j| (j - j_mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let se_j = (j_var / n).sqrt();
    Ok(PerformanceReport {
        n_paths: terminals.len(),
        mean,
        se_mean,
        vol,
        se_vol,
        sharpe,
        sharpe_degenerate,
        j_empirical,
        se_j,
        riskfree_terminal,
        theoretical_mean: theoretical.0,
        theoretical_v: theoretical.1,
    })
}
