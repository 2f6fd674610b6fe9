//! Command implementations behind the binary's subcommands.
//!
//! Each command reads everything it needs from a [`Settings`] store (config
//! file plus flag overrides), writes its artifacts into an output directory,
//! and returns the paths it wrote. Commands are plain functions so
//! integration tests can drive them without spawning the binary.
//!
//! Seed discipline: every command derives the streams for each internal
//! stage from `run.seed` through [`subseed`] with a fixed per-stage tag, so
//! one seed reproduces every artifact byte for byte no matter how the stages
//! are reordered internally.

use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};

use chrono::Datelike;

use crate::config::{self, Settings};
use crate::data::{self, DatedSeries, WindowSpec};
use crate::error::{Error, Result};
use crate::eval::{
    performance_stats, replay_portfolios, run_evaluation, theoretical_benchmarks, EvalMode,
    REPORT_HEADER,
};
use crate::market::PathGrid;
use crate::mle::{self, log_returns, write_fit_kv};
use crate::policy::{equilibrium_policy, PreferenceParams, Theta};
use crate::rng::{derive_stream, subseed};
use crate::trainer;

/// Stage tags for [`subseed`]. Backtest windows use a block of four tags per
/// window starting at `TAG_BACKTEST`.
const TAG_FIT_RESTARTS: u64 = 0x10;
const TAG_SIMULATE: u64 = 0x20;
const TAG_EVALUATE: u64 = 0x30;
const TAG_BACKTEST: u64 = 0x1000;

/// Five-parameter calibrations need enough observations to pin down the
/// mixture; below this the likelihood surface is unusable.
const MIN_FIT_RETURNS: usize = 30;

fn master_seed(s: &Settings) -> Result<u64> {
    s.u64_or("run.seed", 0)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes a parameter triple as `key = value` lines.
pub fn write_theta_kv(theta: &Theta, w: &mut impl IoWrite) -> std::io::Result<()> {
    writeln!(w, "mu = {}", theta.mu)?;
    writeln!(w, "sigma = {}", theta.sigma)?;
    writeln!(w, "delta = {}", theta.delta)
}

/// Reads a parameter triple from a `key = value` file (comments and blank
/// lines allowed; unknown keys ignored so calibration output files load too).
pub fn read_theta_kv(path: &Path) -> Result<Theta> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let mut mu = None;
    let mut sigma = None;
    let mut delta = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::data(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                i + 1
            ))
        })?;
        let value = value.trim();
        let parsed = || {
            value.parse::<f64>().map_err(|_| {
                Error::data(format!(
                    "{}:{}: cannot parse {value:?}",
                    path.display(),
                    i + 1
                ))
            })
        };
        match key.trim() {
            "mu" => mu = Some(parsed()?),
            "sigma" => sigma = Some(parsed()?),
            "delta" => delta = Some(parsed()?),
            _ => {}
        }
    }
    match (mu, sigma, delta) {
        (Some(mu), Some(sigma), Some(delta)) => Theta::new(mu, sigma, delta),
        _ => Err(Error::data(format!(
            "{}: needs mu, sigma, and delta entries",
            path.display()
        ))),
    }
}

fn load_prices(s: &Settings) -> Result<DatedSeries> {
    let path = s.require("data.prices")?;
    data::load_csv(
        Path::new(path),
        s.str_or("data.date_column", "date"),
        s.str_or("data.value_column", "close"),
    )
}

/// Calibrates the jump-diffusion parameters from a price CSV and writes them
/// as a `key = value` block. A fit that stops on the iteration cap still
/// writes its best point (with `converged = false`) and then errors, so the
/// exit code reflects the failure while the diagnostics survive.
pub fn cmd_fit(s: &Settings, out: &Path) -> Result<Vec<PathBuf>> {
    let prices = load_prices(s)?;
    let (init, mut opts, dt) = config::fit_config(s)?;
    if s.get("fit.restart_seed").is_none() {
        opts.restart_seed = subseed(master_seed(s)?, TAG_FIT_RESTARTS);
    }
    let returns = log_returns(prices.values(), dt)?;
    if returns.len() < MIN_FIT_RETURNS {
        return Err(Error::data(format!(
            "too few returns: need at least {MIN_FIT_RETURNS}, got {}",
            returns.len()
        )));
    }
    let fit = mle::fit(&returns, &init, &opts)?;
    let path = out.join("fit.txt");
    let mut w = create(&path)?;
    write_fit_kv(&fit, &mut w)?;
    w.flush()?;
    if !fit.converged {
        return Err(Error::Numeric(format!(
            "calibration stopped after {} iterations without meeting the tolerances \
             (best point written to {})",
            fit.iterations,
            path.display()
        )));
    }
    Ok(vec![path])
}

/// Runs the training loop and writes the per-epoch trace plus the final
/// parameter triple.
pub fn cmd_train(s: &Settings, out: &Path) -> Result<Vec<PathBuf>> {
    let env = config::market_env(s)?;
    let theta0 = config::theta(s)?;
    let cfg = config::run_config(s)?;
    let trace = trainer::train(&theta0, &env, &cfg)?;
    let trace_path = out.join("trace.csv");
    trace.write_csv(&trace_path)?;
    let theta_path = out.join("theta.txt");
    let mut w = create(&theta_path)?;
    write_theta_kv(&trace.final_theta(), &mut w)?;
    w.flush()?;
    Ok(vec![trace_path, theta_path])
}

/// Writes simulated paths, one time column plus one column per path.
/// `simulate.kind` picks the process: `stock` (default) or `wealth` (the
/// closed-form wealth dynamics at the configured parameter triple).
pub fn cmd_simulate(s: &Settings, out: &Path) -> Result<Vec<PathBuf>> {
    let env = config::market_env(s)?;
    let grid = config::time_grid(s)?;
    let opts = config::sim_options(s)?;
    let n_paths = s.usize_or("simulate.n_paths", 1)?;
    if n_paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let family = subseed(master_seed(s)?, TAG_SIMULATE);
    let kind = s.str_or("simulate.kind", "stock");
    let mut paths: Vec<PathGrid> = Vec::with_capacity(n_paths);
    match kind {
        "stock" => {
            let s0 = s.f64_or("simulate.s0", 1.0)?;
            for i in 0..n_paths {
                let mut rng = derive_stream(family, i as u64);
                paths.push(crate::market::simulate_stock_path_with(
                    &opts,
                    &env.market,
                    &env.jumps,
                    &grid,
                    s0,
                    &mut rng,
                )?);
            }
        }
        "wealth" => {
            let theta = config::theta(s)?;
            let pref = config::pref(s)?;
            let x0 = s.f64_or("simulate.x0", 1.0)?;
            for i in 0..n_paths {
                let mut rng = derive_stream(family, i as u64);
                paths.push(crate::market::simulate_wealth_theta(
                    &theta, &env, &pref, &opts, &grid, x0, &mut rng,
                )?);
            }
        }
        other => {
            return Err(Error::config(format!(
                "key simulate.kind: expected stock or wealth, got {other:?}"
            )))
        }
    }
    let path = out.join("paths.csv");
    let mut w = create(&path)?;
    write!(w, "t")?;
    for i in 1..=n_paths {
        write!(w, ",path_{i}")?;
    }
    writeln!(w)?;
    for row in 0..=grid.n_steps() {
        write!(w, "{}", paths[0].times[row])?;
        for path in &paths {
            write!(w, ",{}", path.values[row])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(vec![path])
}

fn eval_mode(s: &Settings) -> Result<EvalMode> {
    match s.str_or("eval.mode", "theta-process") {
        "theta-process" => Ok(EvalMode::ThetaProcess),
        "sampled-policy" => Ok(EvalMode::SampledPolicy),
        "policy-mean" => Ok(EvalMode::PolicyMean),
        other => Err(Error::config(format!(
            "key eval.mode: expected theta-process, sampled-policy, or policy-mean, got {other:?}"
        ))),
    }
}

/// Monte-Carlo performance of one parameter triple across a list of risk
/// aversions, one report row per `gamma`. The triple comes from
/// `eval.theta_file` when set, otherwise from the `[theta]` section.
pub fn cmd_evaluate(s: &Settings, out: &Path) -> Result<Vec<PathBuf>> {
    let theta = match s.get("eval.theta_file") {
        Some(p) => read_theta_kv(Path::new(p))?,
        None => config::theta(s)?,
    };
    let env = config::market_env(s)?;
    let grid = config::time_grid(s)?;
    let opts = config::sim_options(s)?;
    let mode = eval_mode(s)?;
    let gammas = s.f64_list_or("eval.gammas", &[0.1, 0.5, 1.0, 2.0, 5.0])?;
    if gammas.is_empty() {
        return Err(Error::config("key eval.gammas: need at least one value"));
    }
    let n_paths = s.usize_or("eval.n_paths", 100)?;
    let x0 = s.f64_or("eval.x0", 1.0)?;
    let lambda = s.f64("pref.lambda")?;
    let r = s.f64_or("pref.r", 0.0)?;
    let master = master_seed(s)?;

    let path = out.join("evaluation.csv");
    let mut w = create(&path)?;
    writeln!(w, "gamma,{REPORT_HEADER}")?;
    for (k, &gamma) in gammas.iter().enumerate() {
        let pref = PreferenceParams { gamma, lambda, r };
        pref.validate()?;
        let terminals = run_evaluation(
            mode,
            &theta,
            &pref,
            &env,
            &opts,
            &grid,
            x0,
            n_paths,
            subseed(master, TAG_EVALUATE + k as u64),
        )?;
        let riskfree = crate::eval::riskfree_terminal(x0, r, &grid);
        let theoretical = theoretical_benchmarks(&theta, &pref, grid.horizon(), x0)?;
        let report = performance_stats(&terminals, &pref, riskfree, theoretical)?;
        write!(w, "{gamma},")?;
        report.write_row(&mut w)?;
    }
    w.flush()?;
    Ok(vec![path])
}

/// Per-window row schema of `backtest.csv`.
pub const BACKTEST_HEADER: &str = "window,period,n_paths,mean,se_mean,vol,se_vol,sharpe,riskfree";

/// Per-window calibration and training summary schema of `backtest_fits.csv`.
pub const BACKTEST_FITS_HEADER: &str =
    "window,mu,sigma,zeta,mu_j,sigma_j,delta,loglik,converged,theta_mu,theta_sigma,theta_delta";

/// Rolling-window protocol over historical prices and cash rates:
///
/// 1. slice the training span and calibrate the jump-diffusion model to its
///    log returns,
/// 2. train the parameter triple on paths simulated from the calibrated
///    model, starting from the calibrated point, with the training-period
///    exploration weight and the training span's average cash rate,
/// 3. replay the realized price path over the training span and over the
///    evaluation span with `backtest.n_portfolios` independently sampled
///    portfolios (the exploration weight per span sets the sampling spread;
///    zero falls back to the deterministic mean position).
///
/// Emits one summary row per window and span into `backtest.csv`, the
/// calibration per window into `backtest_fits.csv`, and the raw terminal
/// wealths per window and span into `terminals_{window}_{span}.csv` so the
/// summary statistics can be recomputed exactly from artifacts.
pub fn cmd_backtest(s: &Settings, out: &Path) -> Result<Vec<PathBuf>> {
    let prices = load_prices(s)?;
    let rates_path = s.require("data.rates")?;
    let rates_raw = data::load_csv(
        Path::new(rates_path),
        s.str_or("data.rate_date_column", "date"),
        s.str_or("data.rate_value_column", "rate"),
    )?;
    let divisor = s.f64_or("data.rate_divisor", 252.0)?;
    let daily: Vec<f64> = data::fill_forward_on(prices.dates(), &rates_raw)?
        .into_iter()
        .map(|q| data::quote_to_daily_rate_with(q, divisor))
        .collect();
    let rates = DatedSeries::new(prices.dates().to_vec(), daily)?;

    let spec = WindowSpec {
        train_years: s.usize_or("backtest.train_years", 10)?,
        eval_years: s.usize_or("backtest.eval_years", 1)?,
    };
    let first_year = match s.get("backtest.first_year") {
        Some(_) => s.i32("backtest.first_year")?,
        None => prices.first_date().year(),
    };
    let last_year = match s.get("backtest.last_year") {
        Some(_) => s.i32("backtest.last_year")?,
        None => prices.last_date().year(),
    };
    let windows = data::rolling_windows(first_year, last_year, &spec)?;

    let gamma = s.f64_or("backtest.gamma", 1.0)?;
    let lambda_train = s.f64_or("backtest.lambda_train", 0.01)?;
    let lambda_eval = s.f64_or("backtest.lambda_eval", 0.1)?;
    let n_portfolios = s.usize_or("backtest.n_portfolios", 100)?;
    let x0 = s.f64_or("backtest.x0", 1.0)?;
    let (init, fit_opts, dt) = config::fit_config(s)?;
    let master = master_seed(s)?;

    let report_path = out.join("backtest.csv");
    let fits_path = out.join("backtest_fits.csv");
    let mut report = create(&report_path)?;
    let mut fits = create(&fits_path)?;
    writeln!(report, "{BACKTEST_HEADER}")?;
    writeln!(fits, "{BACKTEST_FITS_HEADER}")?;
    let mut written = vec![report_path.clone(), fits_path.clone()];

    for (w_idx, win) in windows.iter().enumerate() {
        let in_window = |e: Error| Error::data(format!("window {}: {e}", win.label));
        let tag = TAG_BACKTEST + 4 * w_idx as u64;

        let train_prices = prices
            .slice(win.train_start, win.train_end)
            .map_err(in_window)?;
        let returns = log_returns(train_prices.values(), dt).map_err(in_window)?;
        if returns.len() < MIN_FIT_RETURNS {
            return Err(Error::data(format!(
                "window {}: too few training returns ({}, need {MIN_FIT_RETURNS})",
                win.label,
                returns.len()
            )));
        }
        let mut opts = fit_opts.clone();
        opts.restart_seed = subseed(master, tag);
        let fit = mle::fit(&returns, &init, &opts).map_err(in_window)?;

        let train_rates = rates
            .slice(win.train_start, win.train_end)
            .map_err(in_window)?;
        let r_train = train_rates.values().iter().sum::<f64>() / train_rates.len() as f64 / dt;

        let theta_init =
            Theta::new(fit.params.mu, fit.params.sigma, fit.params.delta()).map_err(in_window)?;
        let train_pref = PreferenceParams {
            gamma,
            lambda: lambda_train,
            r: r_train,
        };
        let mut cfg = config::run_config_with(s, train_pref)?;
        cfg.master_seed = subseed(master, tag + 1);
        let trace = trainer::train(&theta_init, &fit.params.env(), &cfg).map_err(in_window)?;
        let theta_hat = trace.final_theta();

        writeln!(
            fits,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            win.label,
            fit.params.mu,
            fit.params.sigma,
            fit.params.zeta,
            fit.params.mu_j,
            fit.params.sigma_j,
            fit.params.delta(),
            fit.loglik,
            fit.converged,
            theta_hat.mu,
            theta_hat.sigma,
            theta_hat.delta
        )?;

        let spans = [
            (
                "train",
                win.train_start,
                win.train_end,
                lambda_train,
                tag + 2,
            ),
            ("eval", win.eval_start, win.eval_end, lambda_eval, tag + 3),
        ];
        for (span, from, to, lambda_invest, span_tag) in spans {
            let in_span = |e: Error| Error::data(format!("window {} {span} span: {e}", win.label));
            let px = prices.slice(from, to).map_err(in_span)?;
            if px.len() < 2 {
                return Err(Error::data(format!(
                    "window {} {span} span: need at least two prices, got {}",
                    win.label,
                    px.len()
                )));
            }
            let rt = rates.slice(from, to).map_err(in_span)?;
            let period_rates = &rt.values()[..px.len() - 1];
            let r_bar = period_rates.iter().sum::<f64>() / period_rates.len() as f64 / dt;
            let pref = PreferenceParams {
                gamma,
                lambda: lambda_invest,
                r: r_bar,
            };
            let policy = equilibrium_policy(&theta_hat, &pref).map_err(in_span)?;
            let terminals = replay_portfolios(
                &policy,
                px.values(),
                period_rates,
                x0,
                n_portfolios,
                subseed(master, span_tag),
            )
            .map_err(in_span)?;
            let riskfree = period_rates.iter().fold(x0, |acc, r| acc * (1.0 + r));
            let stats = performance_stats(&terminals, &pref, riskfree, (f64::NAN, f64::NAN))
                .map_err(in_span)?;

            writeln!(
                report,
                "{},{span},{},{},{},{},{},{},{}",
                win.label,
                stats.n_paths,
                stats.mean,
                stats.se_mean,
                stats.vol,
                stats.se_vol,
                stats.sharpe,
                riskfree
            )?;

            let term_path = out.join(format!("terminals_{}_{span}.csv", win.label));
            let mut tw = create(&term_path)?;
            writeln!(tw, "terminal")?;
            for t in &terminals {
                writeln!(tw, "{t}")?;
            }
            tw.flush()?;
            written.push(term_path);
        }
    }
    report.flush()?;
    fits.flush()?;
    Ok(written)
}
