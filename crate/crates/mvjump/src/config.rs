//! INI-style configuration: a flat `[section]` / `key = value` file plus
//! typed accessors and the assembly of domain structs from it.
//!
//! The format is deliberately small: `#` and `;` start comments, sections
//! group keys, and every value is one token parsed on demand. Command-line
//! flags override file values by writing into the same key space, so a key's
//! final value has exactly one owner. All lookup and parse errors name the
//! full `section.key` they refer to.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::market::{
    JumpCoupling, JumpParams, JumpTiming, MarketEnv, MarketParams, SimOptions, TimeGrid,
};
use crate::mle::{FitOptions, MertonParams, NmOptions};
use crate::policy::{DriftTestFn, PreferenceParams, Theta};
use crate::trainer::{LrSchedule, RunConfig};

/// Parsed key-value store with `section.key` addressing.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: BTreeMap<String, String>,
}

impl Settings {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses configuration text. Keys must live inside a section; a key may
    /// appear only once per file.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::config(format!("{source}:{line_no}: unterminated section header"))
                    })?
                    .trim();
                if name.is_empty() {
                    return Err(Error::config(format!(
                        "{source}:{line_no}: empty section name"
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "{source}:{line_no}: expected `key = value`, got {line:?}"
                ))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("{source}:{line_no}: empty key")));
            }
            let section = section.as_ref().ok_or_else(|| {
                Error::config(format!(
                    "{source}:{line_no}: key {key:?} outside any [section]"
                ))
            })?;
            let full = format!("{section}.{key}");
            if entries.contains_key(&full) {
                return Err(Error::config(format!(
                    "{source}:{line_no}: duplicate key {full}"
                )));
            }
            entries.insert(full, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Sets (or overrides) one `section.key`.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::config(format!("missing required key {key}")))
    }

    fn parse_with<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.parse()
            .map_err(|e| Error::config(format!("key {key}: cannot parse {raw:?}: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parse_with(key, self.require(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(raw) => self.parse_with(key, raw),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(raw) => self.parse_with(key, raw),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(raw) => self.parse_with(key, raw),
            None => Ok(default),
        }
    }

    pub fn i32(&self, key: &str) -> Result<i32> {
        self.parse_with(key, self.require(key)?)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        let Some(raw) = self.get(key) else {
            return Ok(default);
        };
        match raw.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(Error::config(format!(
                "key {key}: expected a boolean, got {raw:?}"
            ))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated floats.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let Some(raw) = self.get(key) else {
            return Ok(default.to_vec());
        };
        raw.split(',')
            .map(|tok| self.parse_with(key, tok.trim()))
            .collect()
    }
}

/// `[market]` and `[jumps]`: the simulated environment.
pub fn market_env(s: &Settings) -> Result<MarketEnv> {
    let env = MarketEnv {
        market: MarketParams {
            mu: s.f64("market.mu")?,
            sigma: s.f64("market.sigma")?,
        },
        jumps: JumpParams {
            zeta: s.f64("jumps.zeta")?,
            mu_j: s.f64("jumps.mu_j")?,
            sigma_j: s.f64("jumps.sigma_j")?,
        },
    };
    env.validate()?;
    Ok(env)
}

/// `[pref]`: risk aversion, exploration weight, interest rate.
pub fn pref(s: &Settings) -> Result<PreferenceParams> {
    let pref = PreferenceParams {
        gamma: s.f64("pref.gamma")?,
        lambda: s.f64("pref.lambda")?,
        r: s.f64_or("pref.r", 0.0)?,
    };
    pref.validate()?;
    Ok(pref)
}

/// `[grid]`: simulation grid, defaulting to one year of daily steps.
pub fn time_grid(s: &Settings) -> Result<TimeGrid> {
    TimeGrid::new(
        s.f64_or("grid.t0", 0.0)?,
        s.f64_or("grid.horizon", 1.0)?,
        s.usize_or("grid.n_steps", 252)?,
    )
}

/// `[theta]`: a parameter triple (initial point for training, subject of an
/// evaluation).
pub fn theta(s: &Settings) -> Result<Theta> {
    Theta::new(
        s.f64("theta.mu")?,
        s.f64("theta.sigma")?,
        s.f64("theta.delta")?,
    )
}

/// `[sim]`: simulation switches.
pub fn sim_options(s: &Settings) -> Result<SimOptions> {
    let timing = match s.str_or("sim.jump_timing", "per-step") {
        "per-step" => JumpTiming::PerStep,
        "per-path" => JumpTiming::PerPath,
        other => {
            return Err(Error::config(format!(
                "key sim.jump_timing: expected per-step or per-path, got {other:?}"
            )))
        }
    };
    let coupling = match s.str_or("sim.jump_coupling", "policy-sampled") {
        "policy-sampled" => JumpCoupling::PolicySampled,
        "policy-mean" => JumpCoupling::PolicyMean,
        other => {
            return Err(Error::config(format!(
                "key sim.jump_coupling: expected policy-sampled or policy-mean, got {other:?}"
            )))
        }
    };
    Ok(SimOptions {
        compensate_jumps: s.bool_or("sim.compensate_jumps", true)?,
        jump_timing: timing,
        jump_coupling: coupling,
    })
}

/// `[sim] drift_test_fn`: which drift test function training uses.
pub fn drift_test_fn(s: &Settings) -> Result<DriftTestFn> {
    match s.str_or("sim.drift_test_fn", "entropy-adjusted") {
        "entropy-adjusted" => Ok(DriftTestFn::EntropyAdjusted),
        "gradient" => Ok(DriftTestFn::Gradient),
        other => Err(Error::config(format!(
            "key sim.drift_test_fn: expected entropy-adjusted or gradient, got {other:?}"
        ))),
    }
}

/// Learning rates tuned for the reference calibration at daily resolution.
pub const DEFAULT_BASE_RATES: [f64; 3] = [2.15e-5, 5e-5, 1.95e-4];

/// `[run]` plus the grid, preference, and simulation sections: a full
/// training configuration.
pub fn run_config(s: &Settings) -> Result<RunConfig> {
    run_config_with(s, pref(s)?)
}

/// Same as [`run_config`] with the preferences supplied by the caller
/// (backtesting injects the per-window rate and exploration weight).
pub fn run_config_with(s: &Settings, pref: PreferenceParams) -> Result<RunConfig> {
    let cfg = RunConfig {
        n_epochs: s.usize_or("run.n_epochs", 2000)?,
        grid: time_grid(s)?,
        pref,
        x0: s.f64_or("run.x0", 1.0)?,
        base_rates: [
            s.f64_or("run.eta_mu", DEFAULT_BASE_RATES[0])?,
            s.f64_or("run.eta_sigma", DEFAULT_BASE_RATES[1])?,
            s.f64_or("run.eta_delta", DEFAULT_BASE_RATES[2])?,
        ],
        schedule: LrSchedule {
            start_factor: s.f64_or("run.lr_start", 1.0)?,
            end_factor: s.f64_or("run.lr_end", 0.0)?,
        },
        batch_size: s.usize_or("run.batch_size", 1)?,
        master_seed: s.u64_or("run.seed", 0)?,
        sim: sim_options(s)?,
        drift_test_fn: drift_test_fn(s)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `[fit]`: calibration start point and search controls, plus the return
/// interval.
pub fn fit_config(s: &Settings) -> Result<(MertonParams, FitOptions, f64)> {
    let init = MertonParams {
        mu: s.f64_or("fit.init_mu", 0.05)?,
        sigma: s.f64_or("fit.init_sigma", 0.1)?,
        zeta: s.f64_or("fit.init_zeta", 10.0)?,
        mu_j: s.f64_or("fit.init_mu_j", 0.0)?,
        sigma_j: s.f64_or("fit.init_sigma_j", 0.02)?,
    };
    let opts = FitOptions {
        m_max: s.usize_or("fit.m_max", 2)?,
        restarts: s.usize_or("fit.restarts", 1)?,
        restart_seed: s.u64_or("fit.restart_seed", 0)?,
        nm: NmOptions {
            max_iters: s.usize_or("fit.max_iters", 4000)?,
            ..NmOptions::default()
        },
    };
    let dt = s.f64_or("fit.dt", 1.0 / 252.0)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("key fit.dt: must be positive"));
    }
    Ok((init, opts, dt))
}
