//! Realized and pre-averaged variation measures.
//!
//! All functions work on log prices `Y_0, ..., Y_N` (or their returns).
//! Pre-averaging uses the triangular weight `g(x) = min(x, 1 - x)`, for
//! which the pre-averaged return is a difference of two block means and
//! `psi_K = (1 + 2 / K^2) / 12`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use thiserror::Error;

use crate::marketdata::TickSeries;
use crate::stats::normal_quantile;

#[derive(Debug, Error, PartialEq)]
pub enum PreAvgError {
    #[error("need at least {need} observations, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("pre-averaging window K = {0} must be even and at least 2")]
    BadWindow(usize),
    #[error("invalid pre-averaging config: {0}")]
    Config(String),
    #[error(
        "truncation did not converge after {iterations} iterations ({breaches} breaches remain)"
    )]
    TruncationDiverged { iterations: usize, breaches: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

pub type Result<T> = std::result::Result<T, PreAvgError>;

/// Pre-averaging window length: even and at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct WindowK(usize);

impl WindowK {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 || k % 2 == 1 {
            return Err(PreAvgError::BadWindow(k));
        }
        Ok(Self(k))
    }

    /// `K = max(2, 2 * round(theta * sqrt(n) / 2))` for `n` returns.
    pub fn for_horizon(theta: f64, n: usize) -> Self {
        let half = (theta * (n as f64).sqrt() / 2.0).round() as usize;
        Self((2 * half).max(2))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// `psi_K = (1 + 2 K^-2) / 12`.
    pub fn psi(self) -> f64 {
        let k = self.0 as f64;
        (1.0 + 2.0 / (k * k)) / 12.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreAvgConfig {
    /// Pre-averaging horizon; `K ~ theta * sqrt(N)`.
    pub theta: f64,
    /// Quantile level of the truncation threshold.
    pub alpha: f64,
    /// Exponent of the truncation threshold, in `(0, 1/4)`.
    pub varpi: f64,
    /// Iteration cap of the truncation loop.
    pub max_iterations: usize,
}

impl Default for PreAvgConfig {
    fn default() -> Self {
        Self {
            theta: 1.0,
            alpha: 0.999,
            varpi: 0.20,
            max_iterations: 50,
        }
    }
}

impl PreAvgConfig {
    pub fn with_theta(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(PreAvgError::Config(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PreAvgError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.varpi > 0.0 && self.varpi < 0.25) {
            return Err(PreAvgError::Config(format!(
                "varpi must lie in (0, 0.25), got {}",
                self.varpi
            )));
        }
        if self.max_iterations == 0 {
            return Err(PreAvgError::Config(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Window for a series with `n` returns.
    pub fn window(&self, n: usize) -> WindowK {
        WindowK::for_horizon(self.theta, n)
    }
}

/// Returns `r_i = Y_i - Y_{i-1}`.
pub fn returns(log_prices: &[f64]) -> Result<Vec<f64>> {
    if log_prices.len() < 2 {
        return Err(PreAvgError::TooShort {
            need: 2,
            got: log_prices.len(),
        });
    }
    Ok(log_prices.windows(2).map(|w| w[1] - w[0]).collect())
}

pub fn log_returns(series: &TickSeries) -> Result<Vec<f64>> {
    returns(series.log_prices())
}

/// `RV = sum r_i^2`.
pub fn realized_variance(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// `BV = N/(N-1) * pi/2 * sum |r_{i-1}| |r_i|`.
pub fn bipower_variation(r: &[f64]) -> Result<f64> {
    let n = r.len();
    if n < 2 {
        return Err(PreAvgError::TooShort { need: 2, got: n });
    }
    let s: f64 = r.windows(2).map(|w| (w[0] * w[1]).abs()).sum();
    Ok(n as f64 / (n - 1) as f64 * FRAC_PI_2 * s)
}

/// First-order autocovariance noise estimator `-1/(N-1) sum r_i r_{i-1}`.
/// May be negative; see [`clamp_noise`].
pub fn noise_variance_ac(r: &[f64]) -> Result<f64> {
    let n = r.len();
    if n < 2 {
        return Err(PreAvgError::TooShort { need: 2, got: n });
    }
    Ok(-r.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64)
}

/// Floor of a noise-variance estimate used inside corrections and thresholds.
pub fn clamp_noise(omega2: f64) -> f64 {
    omega2.max(0.0)
}

/// Pre-averaged returns `r*_i = (1/K)(sum_{j=K/2}^{K-1} Y_{i+j} - sum_{j=0}^{K/2-1} Y_{i+j})`
/// for `i = 0, ..., N - K + 1`.
pub fn preavg_returns(log_prices: &[f64], k: WindowK) -> Result<Vec<f64>> {
    let k = k.get();
    let m = log_prices.len();
    if k > m {
        return Err(PreAvgError::TooShort { need: k, got: m });
    }
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for y in log_prices {
        acc += y;
        prefix.push(acc);
    }
    let h = k / 2;
    let kf = k as f64;
    Ok((0..=m - k)
        .map(|i| ((prefix[i + k] - prefix[i + h]) - (prefix[i + h] - prefix[i])) / kf)
        .collect())
}

fn bias_correction(omega2: f64, theta: f64, k: WindowK) -> f64 {
    clamp_noise(omega2) / (theta * theta * k.psi())
}

/// Pieces shared by the starred estimators of one series.
struct Starred {
    n: usize,
    k: WindowK,
    rstar: Vec<f64>,
    omega2: f64,
}

impl Starred {
    fn new(
        log_prices: &[f64],
        cfg: &PreAvgConfig,
        min_obs: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let got = log_prices.len();
        if got < 3 {
            return Err(PreAvgError::TooShort { need: 3, got });
        }
        let n = got - 1;
        let k = cfg.window(n);
        if got < min_obs(k.get()) {
            return Err(PreAvgError::TooShort {
                need: min_obs(k.get()),
                got,
            });
        }
        let r = returns(log_prices)?;
        let omega2 = noise_variance_ac(&r)?;
        Ok(Self {
            n,
            k,
            rstar: preavg_returns(log_prices, k)?,
            omega2,
        })
    }

    fn rv(&self, theta: f64) -> f64 {
        let (n, k) = (self.n as f64, self.k.get() as f64);
        let s: f64 = self.rstar.iter().map(|x| x * x).sum();
        n / (n - k + 2.0) / (k * self.k.psi()) * s - bias_correction(self.omega2, theta, self.k)
    }

    fn bv(&self, theta: f64) -> f64 {
        let (n, kk) = (self.n as f64, self.k.get());
        let k = kk as f64;
        let s: f64 = self
            .rstar
            .iter()
            .zip(&self.rstar[kk..])
            .map(|(a, b)| (a * b).abs())
            .sum();
        n / (n - 2.0 * k + 2.0) / (k * self.k.psi()) * FRAC_PI_2 * s
            - bias_correction(self.omega2, theta, self.k)
    }
}

/// Noise-corrected pre-averaged realized variance `RV*`. Needs `K + 2` observations.
pub fn preavg_rv(log_prices: &[f64], cfg: &PreAvgConfig) -> Result<f64> {
    Ok(Starred::new(log_prices, cfg, |k| k + 2)?.rv(cfg.theta))
}

/// Noise-corrected pre-averaged bipower variation `BV*`. Needs `2K + 2` observations.
pub fn preavg_bv(log_prices: &[f64], cfg: &PreAvgConfig) -> Result<f64> {
    Ok(Starred::new(log_prices, cfg, |k| 2 * k + 2)?.bv(cfg.theta))
}

/// Truncation threshold `tau = q_alpha / N^varpi * sqrt(psi_K theta sigma2 + omega2 / theta)`.
pub fn threshold_tau(omega2: f64, sigma2: f64, cfg: &PreAvgConfig, n: usize) -> Result<f64> {
    cfg.validate()?;
    let k = cfg.window(n);
    let q = normal_quantile(cfg.alpha);
    let var = k.psi() * cfg.theta * sigma2.max(0.0) + clamp_noise(omega2) / cfg.theta;
    Ok(q / (n as f64).powf(cfg.varpi) * var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub bv_star_tau: f64,
    pub iterations: usize,
    /// Tick-return positions deleted, as indices into the original returns
    /// (`r_j = Y_j - Y_{j-1}` has index `j`).
    pub removed: Vec<usize>,
    /// The reconnected log-price path the final estimate was computed on.
    pub log_prices: Vec<f64>,
}

/// Maximal runs of consecutive indices with `|r*_i| > tau`.
fn breach_runs(rstar: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < rstar.len() {
        if rstar[i].abs() > tau {
            let lo = i;
            while i + 1 < rstar.len() && rstar[i + 1].abs() > tau {
                i += 1;
            }
            runs.push((lo, i));
        }
        i += 1;
    }
    runs
}

/// Truncated `BV*_tau`. Each round computes `r*` and `tau` on the current
/// path (plug-ins: clamped AC noise variance and `BV*` of the current path).
/// For every maximal run of breaching windows `lo..=hi`, the largest tick
/// return among prices `Y_lo, ..., Y_{hi+K-1}` (earliest on ties) is deleted
/// and the path reconnected; `N` shrinks by one per deletion.
pub fn truncated_preavg_bv(log_prices: &[f64], cfg: &PreAvgConfig) -> Result<Truncation> {
    let mut y = log_prices.to_vec();
    // Original index of each current observation, to report deletions.
    let mut origin: Vec<usize> = (0..y.len()).collect();
    let mut removed = Vec::new();
    for iteration in 0..=cfg.max_iterations {
        let st = Starred::new(&y, cfg, |k| 2 * k + 2)?;
        let bv = st.bv(cfg.theta);
        let tau = threshold_tau(st.omega2, bv, cfg, st.n)?;
        let runs = breach_runs(&st.rstar, tau);
        if runs.is_empty() {
            return Ok(Truncation {
                bv_star_tau: bv,
                iterations: iteration,
                removed,
                log_prices: y,
            });
        }
        if iteration == cfg.max_iterations {
            return Err(PreAvgError::TruncationDiverged {
                iterations: iteration,
                breaches: runs.len(),
            });
        }
        let k = st.k.get();
        let mut targets: Vec<usize> = runs
            .iter()
            .map(|&(lo, hi)| {
                let last = (hi + k - 1).min(y.len() - 1);
                let mut best = lo + 1;
                for j in lo + 1..=last {
                    if (y[j] - y[j - 1]).abs() > (y[best] - y[best - 1]).abs() {
                        best = j;
                    }
                }
                best
            })
            .collect();
        targets.sort_unstable();
        targets.dedup();
        for &j in targets.iter().rev() {
            let d = y[j] - y[j - 1];
            for v in &mut y[j + 1..] {
                *v -= d;
            }
            y.remove(j);
            removed.push(origin.remove(j));
        }
    }
    unreachable!("loop returns on its final iteration")
}

/// `JV = (rv - iv) / rv`.
pub fn jump_variation(rv_hat: f64, iv_hat: f64) -> Result<f64> {
    if !(rv_hat > 0.0) {
        return Err(PreAvgError::NonPositive("rv_hat"));
    }
    Ok((rv_hat - iv_hat) / rv_hat)
}

/// Noise ratio `gamma = sqrt(N omega2 / iv)`.
pub fn noise_ratio(omega2: f64, iv_hat: f64, n: usize) -> Result<f64> {
    if !(iv_hat > 0.0) {
        return Err(PreAvgError::NonPositive("iv_hat"));
    }
    Ok((n as f64 * clamp_noise(omega2) / iv_hat).sqrt())
}

/// Annualized volatility from a per-day variance, `sqrt(252 * var)`.
pub fn annualized_vol(daily_variance: f64) -> f64 {
    (252.0 * daily_variance).sqrt()
}

/// All measures for one interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub n_obs: usize,
    pub k: usize,
    pub rv: f64,
    pub bv: f64,
    pub rv_star: f64,
    pub bv_star: f64,
    pub bv_star_tau: f64,
    /// Raw (unclamped) autocovariance noise estimate.
    pub omega2_hat: f64,
    pub gamma_hat: f64,
    /// `(rv_star - bv_star_tau) / rv_star`; NaN when `rv_star <= 0`.
    pub jv: f64,
    pub truncation_iterations: usize,
}

impl VariationReport {
    pub const COLUMNS: [&'static str; 11] = [
        "n_obs",
        "k",
        "rv",
        "bv",
        "rv_star",
        "bv_star",
        "bv_star_tau",
        "omega2_hat",
        "gamma_hat",
        "jv",
        "truncation_iterations",
    ];

    pub fn compute(log_prices: &[f64], cfg: &PreAvgConfig) -> Result<Self> {
        let st = Starred::new(log_prices, cfg, |k| 2 * k + 2)?;
        let r = returns(log_prices)?;
        let trunc = truncated_preavg_bv(log_prices, cfg)?;
        let rv_star = st.rv(cfg.theta);
        Ok(Self {
            n_obs: log_prices.len(),
            k: st.k.get(),
            rv: realized_variance(&r),
            bv: bipower_variation(&r)?,
            rv_star,
            bv_star: st.bv(cfg.theta),
            bv_star_tau: trunc.bv_star_tau,
            omega2_hat: st.omega2,
            gamma_hat: noise_ratio(st.omega2, trunc.bv_star_tau, st.n).unwrap_or(f64::NAN),
            jv: jump_variation(rv_star, trunc.bv_star_tau).unwrap_or(f64::NAN),
            truncation_iterations: trunc.iterations,
        })
    }

    pub fn for_series(series: &TickSeries, cfg: &PreAvgConfig) -> Result<Self> {
        Self::compute(series.log_prices(), cfg)
    }
}

/// Cross-day JV as the mean of daily ratios.
pub fn jv_mean_of_ratios(reports: &[VariationReport]) -> f64 {
    let v: Vec<f64> = reports
        .iter()
        .map(|r| r.jv)
        .filter(|x| x.is_finite())
        .collect();
    crate::stats::mean(&v)
}

/// Cross-day JV as the ratio of averaged variances.
pub fn jv_ratio_of_means(reports: &[VariationReport]) -> f64 {
    let rv: f64 = reports.iter().map(|r| r.rv_star).sum();
    let iv: f64 = reports.iter().map(|r| r.bv_star_tau).sum();
    jump_variation(rv, iv).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_returns_of_exponentials() {
        let s =
            TickSeries::new("x", vec![0, 1, 2], vec![1.0, 0.01f64.exp(), 0.03f64.exp()]).unwrap();
        let r = log_returns(&s).unwrap();
        assert_abs_diff_eq!(r[0], 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.02, epsilon = 1e-15);
        assert!(returns(&[1.0]).is_err());
    }

    #[test]
    fn window_rounding() {
        assert_eq!(WindowK::for_horizon(1.0, 40_000).get(), 200);
        assert_eq!(WindowK::for_horizon(0.1, 40_000).get(), 20);
        assert_eq!(WindowK::for_horizon(0.01, 100).get(), 2);
        assert_eq!(WindowK::for_horizon(1.0, 30).get(), 6);
        assert!(WindowK::new(3).is_err());
        assert_eq!(WindowK::new(2).unwrap().psi(), 0.125);
    }

    #[test]
    fn spike_preaveraging() {
        let mut y = vec![0.0; 12];
        y[5] = 1.0;
        let r = preavg_returns(&y, WindowK::new(4).unwrap()).unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(r[2], 0.25);
        assert_eq!(r[3], 0.25);
        assert_eq!(r[4], -0.25);
        assert_eq!(r[5], -0.25);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn constant_path_is_zero_everywhere() {
        let y = vec![3.0; 500];
        let cfg = PreAvgConfig::default();
        assert_eq!(preavg_rv(&y, &cfg).unwrap(), 0.0);
        assert_eq!(preavg_bv(&y, &cfg).unwrap(), 0.0);
        let t = truncated_preavg_bv(&y, &cfg).unwrap();
        assert_eq!((t.bv_star_tau, t.iterations), (0.0, 0));
    }

    #[test]
    fn too_short_series() {
        let cfg = PreAvgConfig::with_theta(5.0);
        assert!(matches!(
            preavg_bv(&[0.0; 40], &cfg),
            Err(PreAvgError::TooShort { .. })
        ));
    }

    #[test]
    fn linear_path_noise_estimate_is_negative() {
        let c = 0.003;
        let y: Vec<f64> = (0..50).map(|i| c * i as f64).collect();
        let r = returns(&y).unwrap();
        assert_abs_diff_eq!(noise_variance_ac(&r).unwrap(), -c * c, epsilon = 1e-18);
    }

    #[test]
    fn tau_zero_and_substitution() {
        let cfg = PreAvgConfig::default();
        assert_eq!(threshold_tau(0.0, 0.0, &cfg, 40_000).unwrap(), 0.0);
        let bad = PreAvgConfig { alpha: 1.0, ..cfg };
        assert!(threshold_tau(0.0, 0.0, &bad, 100).is_err());
    }

    #[test]
    fn jv_and_gamma() {
        assert_eq!(jump_variation(1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(jump_variation(1.25, 1.0).unwrap(), 0.2, epsilon = 1e-15);
        assert!(jump_variation(0.0, 1.0).is_err());
        assert_eq!(noise_ratio(0.0, 1.0, 10).unwrap(), 0.0);
        assert_abs_diff_eq!(
            noise_ratio(1.0 / 160_000.0, 1.0, 40_000).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(noise_ratio(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn breach_runs_grouping() {
        let r = [0.0, 2.0, 3.0, 0.0, 5.0, 0.0, 4.0, 4.0];
        assert_eq!(breach_runs(&r, 1.0), vec![(1, 2), (4, 4), (6, 7)]);
    }
}
