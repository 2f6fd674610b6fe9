//! Maximum-likelihood calibration of the jump-diffusion from log returns.
//!
//! Over one observation interval `dt` the log return is a Poisson mixture of
//! Gaussians: conditional on `m` jumps,
//!
//! ```text
//! ret | m  ~  Normal( (mu - sigma^2/2 - zeta kappa) dt + m mu_j,
//!                     sigma^2 dt + m sigma_j^2 )
//! ```
//!
//! with mixture weights `e^{-zeta dt} (zeta dt)^m / m!`. Daily data keeps
//! `zeta dt` well below one, so the density truncates the mixture at a small
//! `m_max` (default 2) with a computable Poisson tail bound.
//!
//! The likelihood is maximized with a self-contained Nelder-Mead search over
//! `(mu, log sigma, log zeta, mu_j, log sigma_j)`; the log transforms keep
//! every probed parameter vector in the valid region, and the returned
//! likelihood never falls below the starting point's because the initial
//! simplex contains it.

use std::io::Write as IoWrite;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::market::{JumpParams, MarketEnv, MarketParams};
use crate::policy::delta_squared_merton;
use crate::rng::derive_stream;

/// The five jump-diffusion parameters under the physical measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertonParams {
    pub mu: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub mu_j: f64,
    pub sigma_j: f64,
}

impl MertonParams {
    pub fn validate(&self) -> Result<()> {
        self.env().validate()?;
        if self.sigma <= 0.0 {
            return Err(Error::invalid("sigma must be positive"));
        }
        Ok(())
    }

    /// Expected relative jump size `E[e^Z - 1]`.
    pub fn kappa(&self) -> f64 {
        self.jumps().kappa()
    }

    pub fn market(&self) -> MarketParams {
        MarketParams {
            mu: self.mu,
            sigma: self.sigma,
        }
    }

    pub fn jumps(&self) -> JumpParams {
        JumpParams {
            zeta: self.zeta,
            mu_j: self.mu_j,
            sigma_j: self.sigma_j,
        }
    }

    pub fn env(&self) -> MarketEnv {
        MarketEnv {
            market: self.market(),
            jumps: self.jumps(),
        }
    }

    /// Aggregated jump scale `delta` implied by the jump parameters.
    pub fn delta(&self) -> f64 {
        delta_squared_merton(&self.jumps()).sqrt()
    }
}

/// Equally spaced log returns with their observation interval in years.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub returns: Vec<f64>,
    pub dt: f64,
}

impl ReturnSeries {
    pub fn new(returns: Vec<f64>, dt: f64) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::data("return series is empty"));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::data("return series contains a non-finite value"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(
                "observation interval must be finite and > 0",
            ));
        }
        Ok(Self { returns, dt })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Log returns `ln(p_{n+1} / p_n)` of a positive price series.
pub fn log_returns(prices: &[f64], dt: f64) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::data("need at least two prices to form returns"));
    }
    if let Some(bad) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::data(format!(
            "prices must be finite and positive, got {bad}"
        )));
    }
    let returns = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ReturnSeries::new(returns, dt)
}

/// Default mixture truncation order.
pub const DEFAULT_M_MAX: usize = 2;

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let t = x - mean;
    (-0.5 * t * t / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Transition density of one log return under the truncated Poisson mixture.
///
/// Total mixture weight kept is `sum_{m <= m_max} e^{-zeta dt}(zeta dt)^m/m!`;
/// the discarded tail is the corresponding upper Poisson tail.
pub fn merton_density(ret: f64, p: &MertonParams, dt: f64, m_max: usize) -> f64 {
    let l = p.zeta * dt;
    let drift = (p.mu - 0.5 * p.sigma * p.sigma - p.zeta * p.kappa()) * dt;
    let base_var = p.sigma * p.sigma * dt;
    let mut weight = (-l).exp();
    let mut dens = 0.0;
    for m in 0..=m_max {
        let mean = drift + m as f64 * p.mu_j;
        let var = base_var + m as f64 * p.sigma_j * p.sigma_j;
        dens += weight * normal_pdf(ret, mean, var);
        if l == 0.0 {
            break;
        }
        weight *= l / (m + 1) as f64;
    }
    dens
}

/// Log likelihood of a return series; `-inf` when any observation's density
/// underflows to zero or is otherwise unusable.
pub fn log_likelihood(p: &MertonParams, rs: &ReturnSeries, m_max: usize) -> f64 {
    let mut total = 0.0;
    for &ret in &rs.returns {
        let dens = merton_density(ret, p, rs.dt, m_max);
        if !(dens.is_finite() && dens > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += dens.ln();
    }
    total
}

/// Termination and shape controls for the simplex search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    pub max_iters: usize,
    /// Converged when the simplex diameter (max coordinate spread) drops
    /// below this.
    pub x_tol: f64,
    /// Converged when the best-to-worst objective spread drops below
    /// `f_tol * (1 + |best|)`.
    pub f_tol: f64,
    /// Relative size of the initial simplex around the start point.
    pub init_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            x_tol: 1e-8,
            f_tol: 1e-14,
            init_step: 0.1,
        }
    }
}

/// Result of one simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` with the Nelder-Mead simplex method (reflection 1, expansion
/// 2, contraction 1/2, shrink 1/2).
///
/// The initial simplex is `x0` plus one vertex per coordinate, offset by
/// `init_step` relative to the coordinate's magnitude. Non-finite objective
/// values are handled by ordering, so the search escapes invalid regions as
/// long as some vertex is finite.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NmOptions) -> NmOutcome {
    let n = x0.len();
    assert!(n > 0, "need at least one dimension");
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = if v[i] != 0.0 {
            opts.init_step * v[i].abs()
        } else {
            opts.init_step
        };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| sanitize(f(v))).collect();

    let mut iterations = 0;
    let converged = loop {
        // Order best to worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let diameter = (0..n)
            .map(|j| {
                simplex
                    .iter()
                    .map(|v| (v[j] - simplex[0][j]).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max);
        // Both tests must pass: near a symmetric minimum the objective spread
        // collapses while the simplex is still wide, and in a flat valley the
        // simplex can be narrow in some directions while values still move.
        let spread = values[n] - values[0];
        let f_scale = 1.0 + values[0].abs();
        if diameter < opts.x_tol && spread.abs() < opts.f_tol * f_scale {
            break true;
        }
        if iterations >= opts.max_iters {
            break false;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|j| centroid[j] + (centroid[j] - worst[j]))
            .collect();
        let f_reflect = sanitize(f(&reflect));

        if f_reflect < values[0] {
            let expand: Vec<f64> = (0..n)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - worst[j]))
                .collect();
            let f_expand = sanitize(f(&expand));
            if f_expand < f_reflect {
                simplex[n] = expand;
                values[n] = f_expand;
            } else {
                simplex[n] = reflect;
                values[n] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[n - 1] {
            simplex[n] = reflect;
            values[n] = f_reflect;
            continue;
        }
        let contract: Vec<f64> = if f_reflect < values[n] {
            (0..n)
                .map(|j| centroid[j] + 0.5 * (reflect[j] - centroid[j]))
                .collect()
        } else {
            (0..n)
                .map(|j| centroid[j] + 0.5 * (worst[j] - centroid[j]))
                .collect()
        };
        let f_contract = sanitize(f(&contract));
        if f_contract < values[n].min(f_reflect) {
            simplex[n] = contract;
            values[n] = f_contract;
            continue;
        }
        // Shrink toward the best vertex.
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
            }
            values[i] = sanitize(f(&simplex[i]));
        }
    };

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("simplex is non-empty");
    NmOutcome {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Controls for the likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub m_max: usize,
    /// Number of simplex starts; starts beyond the first jitter the initial
    /// point deterministically from `restart_seed`.
    pub restarts: usize,
    pub restart_seed: u64,
    pub nm: NmOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            m_max: DEFAULT_M_MAX,
            restarts: 1,
            restart_seed: 0,
            nm: NmOptions::default(),
        }
    }
}

/// A fitted parameter set with its achieved likelihood and search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: MertonParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn encode(p: &MertonParams) -> [f64; 5] {
    [p.mu, p.sigma.ln(), p.zeta.ln(), p.mu_j, p.sigma_j.ln()]
}

fn decode(x: &[f64]) -> MertonParams {
    MertonParams {
        mu: x[0],
        sigma: x[1].exp(),
        zeta: x[2].exp(),
        mu_j: x[3],
        sigma_j: x[4].exp(),
    }
}

/// Maximum-likelihood fit of the five parameters from a return series.
///
/// The search runs in `(mu, log sigma, log zeta, mu_j, log sigma_j)`, so
/// positivity of `sigma`, `zeta`, and `sigma_j` holds by construction; the
/// starting point must therefore have all three positive. The returned
/// likelihood is at least the starting point's.
pub fn fit(rs: &ReturnSeries, init: &MertonParams, opts: &FitOptions) -> Result<FitResult> {
    init.validate()?;
    if !(init.zeta > 0.0 && init.sigma_j > 0.0) {
        return Err(Error::invalid(
            "fit start needs positive zeta and sigma_j for the log transform",
        ));
    }
    let objective = |x: &[f64]| {
        let p = decode(x);
        if !(p.sigma.is_finite() && p.zeta.is_finite() && p.sigma_j.is_finite()) {
            return f64::INFINITY;
        }
        -log_likelihood(&p, rs, opts.m_max)
    };
    let x0 = encode(init);
    let mut best: Option<NmOutcome> = None;
    for k in 0..opts.restarts.max(1) {
        let start: Vec<f64> = if k == 0 {
            x0.to_vec()
        } else {
            let mut rng = derive_stream(opts.restart_seed, k as u64);
            x0.iter()
                .map(|v| v + 0.25 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let outcome = nelder_mead(objective, &start, &opts.nm);
        let better = match &best {
            None => true,
            Some(b) => outcome.value < b.value,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    let params = decode(&best.x);
    let loglik = -best.value;
    if !loglik.is_finite() {
        return Err(Error::Numeric(
            "likelihood is degenerate everywhere the search looked".into(),
        ));
    }
    Ok(FitResult {
        params,
        loglik,
        iterations: best.iterations,
        converged: best.converged,
    })
}

/// Writes a fit as `key = value` lines.
pub fn write_fit_kv(fit: &FitResult, w: &mut impl IoWrite) -> std::io::Result<()> {
    writeln!(w, "mu = {}", fit.params.mu)?;
    writeln!(w, "sigma = {}", fit.params.sigma)?;
    writeln!(w, "zeta = {}", fit.params.zeta)?;
    writeln!(w, "mu_j = {}", fit.params.mu_j)?;
    writeln!(w, "sigma_j = {}", fit.params.sigma_j)?;
    writeln!(w, "loglik = {}", fit.loglik)?;
    writeln!(w, "converged = {}", fit.converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TRUE: MertonParams = MertonParams {
        mu: 0.0878,
        sigma: 0.1321,
        zeta: 27.6813,
        mu_j: -0.0040,
        sigma_j: 0.0274,
    };
    const DT: f64 = 1.0 / 252.0;

    /// Draws `n` one-interval log returns directly from the return model.
    fn sample_returns(p: &MertonParams, dt: f64, n: usize, seed: u64) -> ReturnSeries {
        use crate::market::sample_jump_increment;
        let mut rng = derive_stream(seed, 0);
        let drift = (p.mu - 0.5 * p.sigma * p.sigma - p.zeta * p.kappa()) * dt;
        let vol = p.sigma * dt.sqrt();
        let returns = (0..n)
            .map(|_| {
                let xi: f64 = rng.sample(StandardNormal);
                let jump = sample_jump_increment(&p.jumps(), dt, &mut rng);
                drift + vol * xi + jump.total_mult.ln()
            })
            .collect();
        ReturnSeries::new(returns, dt).unwrap()
    }

    #[test]
    fn log_returns_basic_and_errors() {
        let rs = log_returns(&[1.0, std::f64::consts::E], 1.0).unwrap();
        assert_eq!(rs.len(), 1);
        assert_relative_eq!(rs.returns[0], 1.0, max_relative = 1e-15);
        let flat = log_returns(&[2.0, 2.0, 2.0], DT).unwrap();
        assert!(flat.returns.iter().all(|&r| r == 0.0));
        assert!(log_returns(&[1.0], DT).is_err());
        assert!(log_returns(&[1.0, -1.0], DT).is_err());
        assert!(log_returns(&[1.0, 0.0], DT).is_err());
    }

    #[test]
    fn density_reduces_to_gaussian_without_jumps() {
        let p = MertonParams { zeta: 0.0, ..TRUE };
        for ret in [-0.05, 0.0, 0.01, 0.04] {
            let got = merton_density(ret, &p, DT, 2);
            let want = normal_pdf(
                ret,
                (p.mu - 0.5 * p.sigma * p.sigma) * DT,
                p.sigma * p.sigma * DT,
            );
            assert_relative_eq!(got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn density_integrates_to_the_kept_mixture_mass() {
        // Simpson quadrature over a range wide enough that the kept
        // components have no mass outside it.
        let (lo, hi, n) = (-1.0, 1.0, 20_000);
        let h = (hi - lo) / n as f64;
        let mut acc = merton_density(lo, &TRUE, DT, 2) + merton_density(hi, &TRUE, DT, 2);
        for i in 1..n {
            let w = if i % 2 == 0 { 2.0 } else { 4.0 };
            acc += w * merton_density(lo + i as f64 * h, &TRUE, DT, 2);
        }
        let integral = acc * h / 3.0;
        let l = TRUE.zeta * DT;
        let kept = (-l).exp() * (1.0 + l + l * l / 2.0);
        assert!(kept > 0.9995, "kept mass {kept}");
        assert_relative_eq!(integral, kept, epsilon = 1e-6);
    }

    #[test]
    fn density_peaks_near_the_no_jump_mean() {
        let drift = (TRUE.mu - 0.5 * TRUE.sigma * TRUE.sigma - TRUE.zeta * TRUE.kappa()) * DT;
        let width = 6.0 * TRUE.sigma * DT.sqrt();
        let n = 2000;
        let argmax = (0..=n)
            .map(|i| drift - width + 2.0 * width * i as f64 / n as f64)
            .max_by(|a, b| {
                merton_density(*a, &TRUE, DT, 2).total_cmp(&merton_density(*b, &TRUE, DT, 2))
            })
            .unwrap();
        assert!((argmax - drift).abs() < 3.0 * (2.0 * width / n as f64) + 1e-4);
    }

    #[test]
    fn loglik_of_single_observation_is_log_density() {
        let rs = ReturnSeries::new(vec![0.01], DT).unwrap();
        let got = log_likelihood(&TRUE, &rs, 2);
        assert_relative_eq!(
            got,
            merton_density(0.01, &TRUE, DT, 2).ln(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn loglik_is_order_invariant() {
        let rs = sample_returns(&TRUE, DT, 500, 31);
        let mut rev = rs.returns.clone();
        rev.reverse();
        let rs_rev = ReturnSeries::new(rev, DT).unwrap();
        assert_relative_eq!(
            log_likelihood(&TRUE, &rs, 2),
            log_likelihood(&TRUE, &rs_rev, 2),
            max_relative = 1e-10
        );
    }

    #[test]
    fn loglik_per_observation_is_stable_across_samples() {
        let a = sample_returns(&TRUE, DT, 100_000, 5);
        let b = sample_returns(&TRUE, DT, 100_000, 6);
        let la = log_likelihood(&TRUE, &a, 2) / a.len() as f64;
        let lb = log_likelihood(&TRUE, &b, 2) / b.len() as f64;
        assert!((la - lb).abs() < 0.02, "per-obs loglik {la} vs {lb}");
    }

    #[test]
    fn truth_beats_gross_perturbations() {
        let rs = sample_returns(&TRUE, DT, 10_000, 9);
        let base = log_likelihood(&TRUE, &rs, 2);
        for p in [
            MertonParams {
                mu: TRUE.mu + 0.5,
                ..TRUE
            },
            MertonParams {
                mu: TRUE.mu - 0.5,
                ..TRUE
            },
            MertonParams {
                sigma: TRUE.sigma * 2.0,
                ..TRUE
            },
            MertonParams {
                sigma: TRUE.sigma * 0.5,
                ..TRUE
            },
        ] {
            assert!(log_likelihood(&p, &rs, 2) < base);
        }
    }

    #[test]
    fn truncation_order_is_saturated_for_daily_data() {
        // The per-observation gap between orders is governed by the Poisson
        // tail mass beyond the lower order, here P(N > 2) at intensity
        // zeta * dt: about 2.0e-4.
        let rs = sample_returns(&TRUE, DT, 20_000, 13);
        let l2 = log_likelihood(&TRUE, &rs, 2) / rs.len() as f64;
        let l5 = log_likelihood(&TRUE, &rs, 5) / rs.len() as f64;
        let l = TRUE.zeta * DT;
        let tail = 1.0 - (-l).exp() * (1.0 + l + l * l / 2.0);
        assert!(
            (l2 - l5).abs() < 2.0 * tail,
            "m_max sensitivity {l2} vs {l5} (tail {tail})"
        );
        assert!(l5 >= l2, "higher order keeps strictly more mass");
    }

    #[test]
    fn simplex_minimizes_a_quadratic() {
        let out = nelder_mead(
            |x| (x[0] - 3.0) * (x[0] - 3.0),
            &[0.0],
            &NmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-6, "got {}", out.x[0]);
    }

    #[test]
    fn simplex_minimizes_rosenbrock() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            100.0 * (b - a * a) * (b - a * a) + (1.0 - a) * (1.0 - a)
        };
        let out = nelder_mead(rosen, &[-1.2, 1.0], &NmOptions::default());
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-3 && (out.x[1] - 1.0).abs() < 1e-3,
            "got {:?}",
            out.x
        );
    }

    #[test]
    fn simplex_handles_constant_objective() {
        let out = nelder_mead(|_| 7.5, &[1.0, 2.0], &NmOptions::default());
        assert!(out.converged);
        assert_eq!(out.value, 7.5);
        assert_eq!(out.x, vec![1.0, 2.0]);
    }

    #[test]
    fn simplex_reports_iteration_cap() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            100.0 * (b - a * a) * (b - a * a) + (1.0 - a) * (1.0 - a)
        };
        let out = nelder_mead(
            rosen,
            &[-1.2, 1.0],
            &NmOptions {
                max_iters: 3,
                ..NmOptions::default()
            },
        );
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    fn default_init() -> MertonParams {
        MertonParams {
            mu: 0.05,
            sigma: 0.1,
            zeta: 10.0,
            mu_j: 0.0,
            sigma_j: 0.02,
        }
    }

    #[test]
    fn fit_attributes_no_jumps_to_the_diffusion() {
        let quiet = MertonParams {
            mu: 0.05,
            sigma: 0.2,
            zeta: 0.0,
            mu_j: 0.0,
            sigma_j: 0.01,
        };
        let rs = sample_returns(&quiet, DT, 1260, 23);
        let result = fit(&rs, &default_init(), &FitOptions::default()).unwrap();
        let p = result.params;
        assert_relative_eq!(p.sigma, quiet.sigma, max_relative = 0.05);
        let d2 = delta_squared_merton(&p.jumps());
        let share = d2 / (p.sigma * p.sigma + d2);
        assert!(share < 0.05, "jump variance share {share}");
    }

    #[test]
    fn fit_recovers_the_generating_parameters() {
        // The volatility scales are recovered tightly on ten years of daily
        // data; the drift's likelihood is much flatter (its information grows
        // only with the time span), hence the wide band on mu.
        let rs = sample_returns(&TRUE, DT, 2520, 1);
        let result = fit(&rs, &default_init(), &FitOptions::default()).unwrap();
        let p = result.params;
        assert!(result.loglik >= log_likelihood(&default_init(), &rs, 2));
        assert_relative_eq!(p.sigma, TRUE.sigma, max_relative = 0.25);
        assert_relative_eq!(p.delta(), TRUE.delta(), max_relative = 0.25);
        assert_relative_eq!(p.mu, TRUE.mu, max_relative = 0.5);
    }

    #[test]
    fn fit_rejects_start_without_positive_scales() {
        let rs = sample_returns(&TRUE, DT, 100, 1);
        let bad = MertonParams {
            zeta: 0.0,
            ..default_init()
        };
        assert!(fit(&rs, &bad, &FitOptions::default()).is_err());
    }

    #[test]
    fn fit_serialization_schema() {
        let result = FitResult {
            params: TRUE,
            loglik: -123.5,
            iterations: 42,
            converged: true,
        };
        let mut buf = Vec::new();
        write_fit_kv(&result, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let keys: Vec<&str> = text
            .lines()
            .map(|l| l.split(" = ").next().unwrap())
            .collect();
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
        assert!(text.lines().any(|l| l == "converged = true"));
        for line in text.lines().take(6) {
            line.split(" = ").nth(1).unwrap().parse::<f64>().unwrap();
        }
    }

    #[test]
    fn restarts_never_worsen_the_fit() {
        let rs = sample_returns(&TRUE, DT, 800, 15);
        let one = fit(&rs, &default_init(), &FitOptions::default()).unwrap();
        let multi = fit(
            &rs,
            &default_init(),
            &FitOptions {
                restarts: 3,
                restart_seed: 4,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!(multi.loglik >= one.loglik - 1e-9);
    }
}
