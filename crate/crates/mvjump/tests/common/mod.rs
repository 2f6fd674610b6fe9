//! Shared fixtures for the integration suites: the reference market
//! calibration, synthetic dated price histories, and small file helpers.

#![allow(dead_code)]

use chrono::{Datelike, NaiveDate, Weekday};
use mvjump::config::Settings;
use mvjump::data::{write_csv, DatedSeries};
use mvjump::market::{simulate_stock_path, JumpParams, MarketEnv, MarketParams, TimeGrid};
use mvjump::policy::{delta_squared_merton, PreferenceParams, Theta};
use mvjump::rng::master_stream;
use std::path::Path;

/// Reference market environment used across the suites.
pub fn reference_env() -> MarketEnv {
    MarketEnv {
        market: MarketParams {
            mu: 0.0878,
            sigma: 0.1321,
        },
        jumps: JumpParams {
            zeta: 27.6813,
            mu_j: -0.0040,
            sigma_j: 0.0274,
        },
    }
}

/// Parameter triple matching [`reference_env`], with the jump scale folded in
/// through its closed form.
pub fn reference_theta() -> Theta {
    let env = reference_env();
    let delta = delta_squared_merton(&env.jumps).sqrt();
    Theta::new(env.market.mu, env.market.sigma, delta).unwrap()
}

/// Reference preferences: unit risk aversion and exploration weight, zero
/// rate.
pub fn reference_pref() -> PreferenceParams {
    PreferenceParams {
        gamma: 1.0,
        lambda: 1.0,
        r: 0.0,
    }
}

/// One-year daily grid.
pub fn daily_grid_one_year() -> TimeGrid {
    TimeGrid::new(0.0, 1.0, 252).unwrap()
}

/// All weekdays in `[from, to]`, in order.
pub fn weekdays_between(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let mut dates = Vec::new();
    let mut d = from;
    while d <= to {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d.succ_opt().unwrap();
    }
    dates
}

/// Simulates a weekday price history over whole calendar years at daily
/// resolution (each weekday advances the clock by 1/252 of a year).
pub fn synthetic_price_history(
    env: &MarketEnv,
    first_year: i32,
    last_year: i32,
    s0: f64,
    seed: u64,
) -> DatedSeries {
    let from = NaiveDate::from_ymd_opt(first_year, 1, 1).unwrap();
    let to = NaiveDate::from_ymd_opt(last_year, 12, 31).unwrap();
    let dates = weekdays_between(from, to);
    let n_steps = dates.len() - 1;
    let grid = TimeGrid::new(0.0, n_steps as f64 / 252.0, n_steps).unwrap();
    let mut rng = master_stream(seed);
    let path = simulate_stock_path(&env.market, &env.jumps, &grid, s0, &mut rng).unwrap();
    DatedSeries::new(dates, path.values).unwrap()
}

/// Writes a dated series as a two-column CSV.
pub fn write_series(path: &Path, series: &DatedSeries, date_col: &str, value_col: &str) {
    write_csv(series, path, date_col, value_col).unwrap();
}

/// Writes a constant-quote rate series sampled every `every`-th weekday.
pub fn write_constant_rates(path: &Path, dates: &[NaiveDate], quote: f64, every: usize) {
    let sampled: Vec<NaiveDate> = dates.iter().copied().step_by(every.max(1)).collect();
    let values = vec![quote; sampled.len()];
    let series = DatedSeries::new(sampled, values).unwrap();
    write_csv(&series, path, "date", "rate").unwrap();
}

/// Settings preloaded with the reference environment and preferences.
pub fn reference_settings() -> Settings {
    let mut s = Settings::empty();
    s.set("market.mu", "0.0878");
    s.set("market.sigma", "0.1321");
    s.set("jumps.zeta", "27.6813");
    s.set("jumps.mu_j", "-0.0040");
    s.set("jumps.sigma_j", "0.0274");
    s.set("pref.gamma", "1.0");
    s.set("pref.lambda", "1.0");
    s.set("pref.r", "0.0");
    s
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Reads a file and asserts it equals another byte for byte.
pub fn assert_same_bytes(a: &Path, b: &Path) {
    let ba = std::fs::read(a).unwrap();
    let bb = std::fs::read(b).unwrap();
    assert!(ba == bb, "{} and {} differ", a.display(), b.display());
}
