//! End-to-end coverage of the command layer: each command run against small
//! synthetic inputs in a temporary directory, checking artifacts, schemas,
//! and failure modes.

mod common;

use common::*;
use mvjump::cli::{
    cmd_backtest, cmd_evaluate, cmd_fit, cmd_simulate, cmd_train, read_theta_kv, BACKTEST_HEADER,
};
use mvjump::config::Settings;
use mvjump::market::{JumpParams, MarketEnv, MarketParams};
use std::path::Path;
use tempfile::TempDir;

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

fn kv_pairs(path: &Path) -> Vec<(String, String)> {
    read_lines(path)
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key = value line");
            (k.trim().to_string(), v.trim().to_string())
        })
        .collect()
}

#[test]
fn fit_writes_the_documented_keys_and_attributes_diffusion_data_to_the_diffusion() {
    let tmp = TempDir::new().unwrap();
    // Pure-diffusion history: the fitted jump component should carry almost
    // none of the return variance.
    let env = MarketEnv {
        market: MarketParams {
            mu: 0.08,
            sigma: 0.15,
        },
        jumps: JumpParams {
            zeta: 0.0,
            mu_j: 0.0,
            sigma_j: 0.01,
        },
    };
    let prices = synthetic_price_history(&env, 2000, 2009, 100.0, 23);
    let prices_path = tmp.path().join("prices.csv");
    write_series(&prices_path, &prices, "date", "close");

    let mut s = Settings::empty();
    s.set("data.prices", prices_path.display().to_string());
    let written = cmd_fit(&s, tmp.path()).unwrap();
    assert_eq!(written.len(), 1);

    let pairs = kv_pairs(&written[0]);
    let keys: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(
        keys,
        [
            "mu",
            "sigma",
            "zeta",
            "mu_j",
            "sigma_j",
            "loglik",
            "converged"
        ]
    );
    assert_eq!(pairs[6].1, "true");

    let get = |key: &str| -> f64 {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .unwrap()
            .1
            .parse()
            .unwrap()
    };
    let sigma = get("sigma");
    let fitted = mvjump::mle::MertonParams {
        mu: get("mu"),
        sigma,
        zeta: get("zeta").max(1e-12),
        mu_j: get("mu_j"),
        sigma_j: get("sigma_j").max(1e-12),
    };
    let jump_var = fitted.delta().powi(2);
    let share = jump_var / (sigma * sigma + jump_var);
    assert!(
        share < 0.05,
        "jump variance share {share} on diffusion-only data"
    );
    assert!((sigma - 0.15).abs() / 0.15 < 0.15, "sigma {sigma}");
}

#[test]
fn fit_rejects_a_two_row_history() {
    let tmp = TempDir::new().unwrap();
    let prices_path = tmp.path().join("prices.csv");
    std::fs::write(
        &prices_path,
        "date,close\n2020-01-01,100.0\n2020-01-02,101.0\n",
    )
    .unwrap();
    let mut s = Settings::empty();
    s.set("data.prices", prices_path.display().to_string());
    let err = cmd_fit(&s, tmp.path()).unwrap_err().to_string();
    assert!(err.contains("too few returns"), "{err}");
}

#[test]
fn train_with_zero_rates_writes_a_constant_trace() {
    let tmp = TempDir::new().unwrap();
    let mut s = reference_settings();
    s.set("theta.mu", "0.1");
    s.set("theta.sigma", "0.1");
    s.set("theta.delta", "0.05");
    s.set("run.n_epochs", "5");
    s.set("run.eta_mu", "0.0");
    s.set("run.eta_sigma", "0.0");
    s.set("run.eta_delta", "0.0");
    let written = cmd_train(&s, tmp.path()).unwrap();

    let lines = read_lines(&written[0]);
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(&fields[1..4], &["0.1", "0.1", "0.05"]);
    }
    let theta = read_theta_kv(&written[1]).unwrap();
    assert_eq!((theta.mu, theta.sigma, theta.delta), (0.1, 0.1, 0.05));
}

#[test]
fn train_is_reproducible_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let mut s = reference_settings();
    s.set("theta.mu", "0.1");
    s.set("theta.sigma", "0.1");
    s.set("theta.delta", "0.05");
    s.set("run.n_epochs", "10");
    s.set("run.seed", "11");
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    std::fs::create_dir_all(&dir_a).unwrap();
    std::fs::create_dir_all(&dir_b).unwrap();
    let a = cmd_train(&s, &dir_a).unwrap();
    let b = cmd_train(&s, &dir_b).unwrap();
    assert_same_bytes(&a[0], &b[0]);
    assert_same_bytes(&a[1], &b[1]);
}

#[test]
fn simulate_pure_drift_gives_the_exponential_column() {
    let tmp = TempDir::new().unwrap();
    let mut s = Settings::empty();
    s.set("market.mu", "0.05");
    s.set("market.sigma", "0.0");
    s.set("jumps.zeta", "0.0");
    s.set("jumps.mu_j", "0.0");
    s.set("jumps.sigma_j", "0.0");
    s.set("grid.n_steps", "10");
    let written = cmd_simulate(&s, tmp.path()).unwrap();
    let lines = read_lines(&written[0]);
    assert_eq!(lines[0], "t,path_1");
    assert_eq!(lines.len(), 12);
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 2);
        let expected = (0.05 * fields[0]).exp();
        assert!((fields[1] - expected).abs() < 1e-12, "{line}");
    }
}

#[test]
fn simulate_is_reproducible_and_has_one_column_per_path() {
    let tmp = TempDir::new().unwrap();
    let mut s = reference_settings();
    s.set("grid.n_steps", "20");
    s.set("simulate.n_paths", "3");
    s.set("run.seed", "5");
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    std::fs::create_dir_all(&dir_a).unwrap();
    std::fs::create_dir_all(&dir_b).unwrap();
    let a = cmd_simulate(&s, &dir_a).unwrap();
    let b = cmd_simulate(&s, &dir_b).unwrap();
    assert_same_bytes(&a[0], &b[0]);
    let lines = read_lines(&a[0]);
    assert_eq!(lines[0], "t,path_1,path_2,path_3");
    assert_eq!(lines[1].split(',').count(), 4);

    // The wealth variant runs off the same switches.
    let mut s = s.clone();
    s.set("simulate.kind", "wealth");
    s.set("theta.mu", "0.0878");
    s.set("theta.sigma", "0.1321");
    s.set("theta.delta", "0.1449");
    let dir_w = tmp.path().join("w");
    std::fs::create_dir_all(&dir_w).unwrap();
    let w = cmd_simulate(&s, &dir_w).unwrap();
    assert_eq!(read_lines(&w[0]).len(), 22);
}

#[test]
fn evaluate_handles_tiny_batches_and_missing_parameter_files() {
    let tmp = TempDir::new().unwrap();
    let mut s = reference_settings();
    s.set("theta.mu", "0.0878");
    s.set("theta.sigma", "0.1321");
    s.set("theta.delta", "0.1449");
    s.set("eval.n_paths", "2");
    s.set("eval.gammas", "1");
    let written = cmd_evaluate(&s, tmp.path()).unwrap();
    let lines = read_lines(&written[0]);
    assert_eq!(lines.len(), 2);
    let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    // gamma, n_paths, then the report: every spread estimate must be finite.
    assert_eq!(fields[0], 1.0);
    assert_eq!(fields[1], 2.0);
    assert!(fields.iter().all(|x| x.is_finite()), "{}", lines[1]);

    s.set(
        "eval.theta_file",
        tmp.path().join("nope.txt").display().to_string(),
    );
    let err = cmd_evaluate(&s, tmp.path()).unwrap_err().to_string();
    assert!(err.contains("nope.txt"), "{err}");
}

#[test]
fn evaluate_sweeps_one_row_per_risk_aversion() {
    let tmp = TempDir::new().unwrap();
    let mut s = reference_settings();
    s.set("theta.mu", "0.0878");
    s.set("theta.sigma", "0.1321");
    s.set("theta.delta", "0.1449");
    s.set("eval.n_paths", "8");
    let written = cmd_evaluate(&s, tmp.path()).unwrap();
    let lines = read_lines(&written[0]);
    assert_eq!(lines.len(), 6);
    let gammas: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(gammas, [0.1, 0.5, 1.0, 2.0, 5.0]);
}

#[test]
fn evaluate_reads_the_triple_from_a_training_artifact() {
    let tmp = TempDir::new().unwrap();
    let mut s = reference_settings();
    s.set("theta.mu", "0.09");
    s.set("theta.sigma", "0.13");
    s.set("theta.delta", "0.14");
    s.set("run.n_epochs", "3");
    let trained = cmd_train(&s, tmp.path()).unwrap();

    let mut s2 = reference_settings();
    s2.set("eval.theta_file", trained[1].display().to_string());
    s2.set("eval.n_paths", "4");
    s2.set("eval.gammas", "1");
    let written = cmd_evaluate(&s2, tmp.path()).unwrap();
    assert_eq!(read_lines(&written[0]).len(), 2);
}

fn backtest_settings(tmp: &TempDir, env: &MarketEnv, last_year: i32) -> Settings {
    let prices = synthetic_price_history(env, 2000, last_year, 100.0, 31);
    let prices_path = tmp.path().join("prices.csv");
    write_series(&prices_path, &prices, "date", "close");
    let rates_path = tmp.path().join("rates.csv");
    write_constant_rates(&rates_path, prices.dates(), 2.0, 21);

    let mut s = Settings::empty();
    s.set("data.prices", prices_path.display().to_string());
    s.set("data.rates", rates_path.display().to_string());
    s.set("run.n_epochs", "40");
    s.set("run.seed", "3");
    s
}

#[test]
fn backtest_single_window_produces_positive_sharpe_under_strong_drift() {
    let tmp = TempDir::new().unwrap();
    let env = MarketEnv {
        market: MarketParams {
            mu: 0.4,
            sigma: 0.15,
        },
        jumps: JumpParams {
            zeta: 27.6813,
            mu_j: -0.0040,
            sigma_j: 0.0274,
        },
    };
    // Eleven years of data hold exactly one ten-plus-one year window.
    let s = backtest_settings(&tmp, &env, 2010);
    let written = cmd_backtest(&s, tmp.path()).unwrap();

    let lines = read_lines(&written[0]);
    assert_eq!(lines[0], BACKTEST_HEADER);
    assert_eq!(lines.len(), 3, "one window, train and eval rows");
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "2000-2010");
        let sharpe: f64 = fields[7].parse().unwrap();
        assert!(sharpe.is_finite() && sharpe > 0.0, "{line}");
    }

    // Terminal files exist and hold one wealth per portfolio.
    let terminals = read_lines(&written[3]);
    assert_eq!(terminals[0], "terminal");
    assert_eq!(terminals.len(), 101);
}

#[test]
fn backtest_without_exploration_degenerates_to_the_mean_position() {
    let tmp = TempDir::new().unwrap();
    let env = reference_env();
    let mut s = backtest_settings(&tmp, &env, 2010);
    s.set("backtest.lambda_eval", "0.0");
    s.set("backtest.n_portfolios", "5");
    let written = cmd_backtest(&s, tmp.path()).unwrap();
    let lines = read_lines(&written[0]);
    let eval_row: Vec<&str> = lines
        .iter()
        .find(|l| l.contains(",eval,"))
        .unwrap()
        .split(',')
        .collect();
    // All portfolios coincide, so the spread and the flagged Sharpe are zero.
    assert_eq!(eval_row[5].parse::<f64>().unwrap(), 0.0);
    assert_eq!(eval_row[7].parse::<f64>().unwrap(), 0.0);
    let terminals = read_lines(
        written
            .iter()
            .find(|p| p.file_name().unwrap().to_str().unwrap().contains("eval"))
            .unwrap(),
    );
    assert_eq!(terminals.len(), 6);
    assert!(terminals[1..].iter().all(|t| t == &terminals[1]));
}

#[test]
fn backtest_names_the_window_it_cannot_fill() {
    let tmp = TempDir::new().unwrap();
    let env = reference_env();
    // Data ends in 2008 but the requested window range runs to 2010, so the
    // 2000-2010 window has an empty evaluation span.
    let mut s = backtest_settings(&tmp, &env, 2008);
    s.set("backtest.first_year", "2000");
    s.set("backtest.last_year", "2010");
    let err = cmd_backtest(&s, tmp.path()).unwrap_err().to_string();
    assert!(err.contains("2000-2010"), "{err}");
}

#[test]
fn backtest_rejects_a_range_too_short_for_one_window() {
    let tmp = TempDir::new().unwrap();
    let env = reference_env();
    let s = backtest_settings(&tmp, &env, 2005);
    let err = cmd_backtest(&s, tmp.path()).unwrap_err().to_string();
    assert!(err.contains("2000..2005"), "{err}");
}
