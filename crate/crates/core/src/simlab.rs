//! Synthetic price paths on `[0, 1]`: constant-volatility Brownian motion,
//! Heston and two-factor stochastic volatility with leverage, Brownian motion
//! with a jump or an outlier, and the burst-of-volatility design, overlaid
//! with i.i.d. or AR(1) noise and optional price rounding.
//!
//! Every path is reproducible from `(seed, path_id)`. Prices and noise draw
//! from separate ChaCha streams, so the noise seed can change without
//! touching the efficient price.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::preavg::WindowK;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid model parameter: {0}")]
    Param(String),
    #[error("noise ratio mode needs a path with positive integrated variance")]
    ZeroVariance,
    #[error("rounding produced a non-positive price at observation {0}")]
    RoundedToZero(usize),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Constant variance used by the BM-based models.
pub const BM_SIGMA2: f64 = 0.0391;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HestonParams {
    pub kappa: f64,
    /// Long-run variance.
    pub vbar: f64,
    /// Volatility of variance.
    pub xi: f64,
    pub rho: f64,
    /// Initial variance; the long-run level if absent.
    pub v0: Option<f64>,
}

impl Default for HestonParams {
    fn default() -> Self {
        Self {
            kappa: 5.0,
            vbar: BM_SIGMA2,
            xi: 0.5,
            rho: -0.5,
            v0: None,
        }
    }
}

/// `sigma = sexp(beta0 + beta1 v1 + beta2 v2)`, `dv1 = alpha1 v1 dt + dB1`,
/// `dv2 = alpha2 v2 dt + (1 + phi v2) dB2`, `corr(dW, dBj) = rho_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sv2fParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub phi: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl Default for Sv2fParams {
    fn default() -> Self {
        Self {
            beta0: -1.2,
            beta1: 0.04,
            beta2: 1.5,
            alpha1: -0.00137,
            alpha2: -1.386,
            phi: 0.25,
            rho1: -0.3,
            rho2: -0.3,
        }
    }
}

/// Exponential with a square-root tail above `ln 1.5`, keeping the two-factor model non-explosive.
pub fn sexp(x: f64) -> f64 {
    let x0 = 1.5f64.ln();
    if x <= x0 {
        x.exp()
    } else {
        x0.exp() * (1.0 - x0 + x * x / x0).sqrt()
    }
}

fn default_sigma2() -> f64 {
    BM_SIGMA2
}
fn default_jump_ratio() -> f64 {
    0.25
}
fn default_burst_sigma2() -> f64 {
    0.16 / 252.0
}
fn default_multiplier() -> f64 {
    3.0
}
fn default_burst_start() -> f64 {
    16.0 / 32.0
}
fn default_burst_end() -> f64 {
    17.0 / 32.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Bm {
        #[serde(default = "default_sigma2")]
        sigma2: f64,
    },
    Heston(HestonParams),
    Sv2fLev(Sv2fParams),
    /// BM plus one jump of size `±sqrt(jump_ratio IV)`, placed uniformly at
    /// least `edge` returns from either end (defaults to `K` at `theta = 5`).
    Bmj {
        #[serde(default = "default_sigma2")]
        sigma2: f64,
        #[serde(default = "default_jump_ratio")]
        jump_ratio: f64,
        #[serde(default)]
        edge: Option<usize>,
    },
    /// BM plus one additive outlier with the jump size law.
    Bmo {
        #[serde(default = "default_sigma2")]
        sigma2: f64,
        #[serde(default = "default_jump_ratio")]
        jump_ratio: f64,
        #[serde(default)]
        edge: Option<usize>,
    },
    /// Spot variance `multiplier^2 sigma2` on `[start, end]` and `sigma2` elsewhere.
    Burst {
        #[serde(default = "default_burst_sigma2")]
        sigma2: f64,
        #[serde(default = "default_multiplier")]
        multiplier: f64,
        #[serde(default = "default_burst_start")]
        start: f64,
        #[serde(default = "default_burst_end")]
        end: f64,
    },
}

impl Model {
    pub fn bm() -> Self {
        Model::Bm { sigma2: BM_SIGMA2 }
    }
    pub fn heston() -> Self {
        Model::Heston(HestonParams::default())
    }
    pub fn sv2f_lev() -> Self {
        Model::Sv2fLev(Sv2fParams::default())
    }
    /// Jump variance a quarter of IV, so jumps are 20% of expected QV.
    pub fn bmj() -> Self {
        Model::Bmj {
            sigma2: BM_SIGMA2,
            jump_ratio: default_jump_ratio(),
            edge: None,
        }
    }
    pub fn bmo() -> Self {
        Model::Bmo {
            sigma2: BM_SIGMA2,
            jump_ratio: default_jump_ratio(),
            edge: None,
        }
    }
    /// Three-fold volatility on `[16/32, 17/32]` at 40% annualized base volatility.
    pub fn burst() -> Self {
        Model::Burst {
            sigma2: default_burst_sigma2(),
            multiplier: default_multiplier(),
            start: default_burst_start(),
            end: default_burst_end(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Bm { .. } => "BM",
            Model::Heston(_) => "SV",
            Model::Sv2fLev(_) => "SV2F-LEV",
            Model::Bmj { .. } => "BMJ",
            Model::Bmo { .. } => "BMO",
            Model::Burst { .. } => "BURST",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::Param(format!(
                    "{name} must be non-negative, got {v}"
                )))
            }
        };
        match *self {
            Model::Bm { sigma2 } => nonneg("sigma2", sigma2),
            Model::Heston(p) => {
                nonneg("kappa", p.kappa)?;
                nonneg("vbar", p.vbar)?;
                nonneg("xi", p.xi)?;
                nonneg("v0", p.v0.unwrap_or(p.vbar))?;
                if p.rho.abs() > 1.0 {
                    return Err(SimError::Param(format!(
                        "rho must lie in [-1, 1], got {}",
                        p.rho
                    )));
                }
                Ok(())
            }
            Model::Sv2fLev(p) => {
                if p.alpha1 >= 0.0 || p.alpha2 >= 0.0 {
                    return Err(SimError::Param("alpha1 and alpha2 must be negative".into()));
                }
                if p.rho1 * p.rho1 + p.rho2 * p.rho2 > 1.0 {
                    return Err(SimError::Param("rho1^2 + rho2^2 must not exceed 1".into()));
                }
                Ok(())
            }
            Model::Bmj {
                sigma2, jump_ratio, ..
            }
            | Model::Bmo {
                sigma2, jump_ratio, ..
            } => {
                nonneg("sigma2", sigma2)?;
                nonneg("jump_ratio", jump_ratio)
            }
            Model::Burst {
                sigma2,
                multiplier,
                start,
                end,
            } => {
                nonneg("sigma2", sigma2)?;
                nonneg("multiplier", multiplier)?;
                if !(0.0..=1.0).contains(&start) || !(start..=1.0).contains(&end) {
                    return Err(SimError::Param(format!(
                        "burst window [{start}, {end}] must lie in [0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Noise ratio `sqrt(N omega^2 / IV)`; ignored when `omega2` is set.
    pub gamma: f64,
    pub omega2: Option<f64>,
    /// AR(1) coefficient; 0 gives i.i.d. noise.
    pub beta: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            omega2: None,
            beta: 0.0,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }
    pub fn iid(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }
    pub fn ar1(gamma: f64, beta: f64) -> Self {
        Self {
            gamma,
            omega2: None,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || self.omega2.is_some_and(|w| !(w >= 0.0)) {
            return Err(SimError::Param(
                "noise variance must be non-negative".into(),
            ));
        }
        if !(self.beta.abs() < 1.0) {
            return Err(SimError::Param(format!(
                "|beta| must be below 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    fn is_zero(&self) -> bool {
        self.omega2.map_or(self.gamma == 0.0, |w| w == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub tick: f64,
    pub level: f64,
}

impl Default for Rounding {
    /// Nearest cent on a $50 price.
    fn default() -> Self {
        Self {
            tick: 0.01,
            level: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Regular,
    /// `t_i = (i / N)^power`.
    Power { power: f64 },
}

impl Sampling {
    pub fn times(&self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (0..=n)
            .map(|i| match *self {
                Sampling::Regular => i as f64 / nf,
                Sampling::Power { power } => (i as f64 / nf).powf(power),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub model: Model,
    /// Number of returns; paths hold `n + 1` observations.
    pub n: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub rounding: Option<Rounding>,
    #[serde(default)]
    pub sampling: Sampling,
    pub seed: u64,
    /// Separate seed for the noise stream; `seed` if absent.
    #[serde(default)]
    pub noise_seed: Option<u64>,
    /// Euler steps per return for the stochastic-volatility models.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_substeps() -> usize {
    1
}

impl SimSpec {
    pub fn new(model: Model, n: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            noise: NoiseSpec::none(),
            rounding: None,
            sampling: Sampling::Regular,
            seed,
            noise_seed: None,
            substeps: 1,
        }
    }
    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }
    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }
    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = Some(rounding);
        self
    }
    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SimError::Param(format!(
                "N must be at least 2, got {}",
                self.n
            )));
        }
        if self.substeps == 0 {
            return Err(SimError::Param("substeps must be at least 1".into()));
        }
        if let Sampling::Power { power } = self.sampling {
            if !(power > 0.0 && power.is_finite()) {
                return Err(SimError::Param(format!(
                    "sampling power must be positive, got {power}"
                )));
            }
        }
        if let Some(r) = self.rounding {
            if !(r.tick > 0.0 && r.level > 0.0) {
                return Err(SimError::Param(
                    "rounding tick and level must be positive".into(),
                ));
            }
        }
        self.model.validate()?;
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPath {
    pub times: Vec<f64>,
    pub efficient: Vec<f64>,
    pub observed: Vec<f64>,
    /// Spot variance at each observation time.
    pub spot_variance: Vec<f64>,
    /// Integrated variance of each return interval.
    pub interval_variance: Vec<f64>,
    pub true_iv: f64,
    pub true_jv_sum: f64,
    pub jump_times: Vec<usize>,
    pub jump_sizes: Vec<f64>,
    pub outlier_times: Vec<usize>,
    pub outlier_sizes: Vec<f64>,
    /// Noise variance actually applied.
    pub omega2: f64,
}

impl SimPath {
    pub fn n(&self) -> usize {
        self.efficient.len() - 1
    }
    pub fn quadratic_variation(&self) -> f64 {
        self.true_iv + self.true_jv_sum
    }
}

const PRICE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Generator keyed by `(seed, path_id)` on the given stream.
pub fn path_rng(seed: u64, path_id: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path_id.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct Efficient {
    x: Vec<f64>,
    spot: Vec<f64>,
    /// Integrated variance over each return interval.
    interval: Vec<f64>,
}

fn brownian(times: &[f64], sigma2: f64, rng: &mut ChaCha8Rng) -> Efficient {
    let mut x = Vec::with_capacity(times.len());
    x.push(0.0);
    let mut interval = Vec::with_capacity(times.len() - 1);
    for w in times.windows(2) {
        let var = sigma2 * (w[1] - w[0]);
        let last = *x.last().unwrap_or(&0.0);
        x.push(last + var.sqrt() * normal(rng));
        interval.push(var);
    }
    Efficient {
        x,
        spot: vec![sigma2; times.len()],
        interval,
    }
}

/// Full-truncation Euler with `substeps` steps per return: the variance is
/// floored at zero inside drift and diffusion.
fn heston(times: &[f64], p: &HestonParams, substeps: usize, rng: &mut ChaCha8Rng) -> Efficient {
    let mut v = p.v0.unwrap_or(p.vbar);
    let mut x = vec![0.0];
    let mut spot = vec![v.max(0.0)];
    let mut interval = Vec::with_capacity(times.len() - 1);
    let rho_c = (1.0 - p.rho * p.rho).sqrt();
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        let (mut dx, mut var) = (0.0, 0.0);
        for _ in 0..substeps {
            let vp = v.max(0.0);
            let (z1, z2) = (normal(rng), normal(rng));
            dx += (vp * h).sqrt() * (p.rho * z1 + rho_c * z2);
            var += vp * h;
            v += p.kappa * (p.vbar - vp) * h + p.xi * (vp * h).sqrt() * z1;
        }
        let last = *x.last().unwrap_or(&0.0);
        x.push(last + dx);
        interval.push(var);
        spot.push(v.max(0.0));
    }
    Efficient { x, spot, interval }
}

/// Euler scheme with `substeps` steps per return; `v1` starts from its
/// stationary law, `v2` at zero.
fn sv2f(times: &[f64], p: &Sv2fParams, substeps: usize, rng: &mut ChaCha8Rng) -> Efficient {
    let mut v1 = normal(rng) / (-2.0 * p.alpha1).sqrt();
    let mut v2 = 0.0;
    let sigma = |v1: f64, v2: f64| sexp(p.beta0 + p.beta1 * v1 + p.beta2 * v2);
    let mut x = vec![0.0];
    let mut spot = vec![sigma(v1, v2).powi(2)];
    let mut interval = Vec::with_capacity(times.len() - 1);
    let rest = (1.0 - p.rho1 * p.rho1 - p.rho2 * p.rho2).max(0.0).sqrt();
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        let sh = h.sqrt();
        let (mut dx, mut var) = (0.0, 0.0);
        for _ in 0..substeps {
            let (b1, b2, z) = (normal(rng), normal(rng), normal(rng));
            let s = sigma(v1, v2);
            dx += s * sh * (p.rho1 * b1 + p.rho2 * b2 + rest * z);
            var += s * s * h;
            v1 += p.alpha1 * v1 * h + sh * b1;
            v2 += p.alpha2 * v2 * h + (1.0 + p.phi * v2) * sh * b2;
        }
        let last = *x.last().unwrap_or(&0.0);
        x.push(last + dx);
        interval.push(var);
        spot.push(sigma(v1, v2).powi(2));
    }
    Efficient { x, spot, interval }
}

/// Exact increments for piecewise-constant variance.
fn burst(
    times: &[f64],
    sigma2: f64,
    multiplier: f64,
    start: f64,
    end: f64,
    rng: &mut ChaCha8Rng,
) -> Efficient {
    let high = multiplier * multiplier * sigma2;
    let integral = |t: f64| sigma2 * t + (high - sigma2) * (t.clamp(start, end) - start);
    let mut x = vec![0.0];
    let mut interval = Vec::with_capacity(times.len() - 1);
    for w in times.windows(2) {
        let var = (integral(w[1]) - integral(w[0])).max(0.0);
        let last = *x.last().unwrap_or(&0.0);
        x.push(last + var.sqrt() * normal(rng));
        interval.push(var);
    }
    let spot = times
        .iter()
        .map(|&t| {
            if (start..end).contains(&t) {
                high
            } else {
                sigma2
            }
        })
        .collect();
    Efficient { x, spot, interval }
}

/// Observation index in `[edge, n - edge]` with a random sign.
fn place(n: usize, edge: Option<usize>, rng: &mut ChaCha8Rng) -> (usize, f64) {
    let edge = edge
        .unwrap_or_else(|| WindowK::for_horizon(5.0, n).get())
        .min(n / 4)
        .max(1);
    let idx = rng.random_range(edge..=n - edge);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    (idx, sign)
}

/// Simulate path `path_id` of `spec`.
pub fn simulate(spec: &SimSpec, path_id: u64) -> Result<SimPath> {
    spec.validate()?;
    let times = spec.sampling.times(spec.n);
    let mut rng = path_rng(spec.seed, path_id, PRICE_STREAM);
    let mut jumps = (vec![], vec![]);
    let mut outliers = (vec![], vec![]);
    let eff = match spec.model {
        Model::Bm { sigma2 } => brownian(&times, sigma2, &mut rng),
        Model::Heston(p) => heston(&times, &p, spec.substeps, &mut rng),
        Model::Sv2fLev(p) => sv2f(&times, &p, spec.substeps, &mut rng),
        Model::Burst {
            sigma2,
            multiplier,
            start,
            end,
        } => burst(&times, sigma2, multiplier, start, end, &mut rng),
        Model::Bmj {
            sigma2,
            jump_ratio,
            edge,
        } => {
            let mut e = brownian(&times, sigma2, &mut rng);
            let (idx, sign) = place(spec.n, edge, &mut rng);
            let size = sign * (jump_ratio * e.interval.iter().sum::<f64>()).sqrt();
            e.x[idx..].iter_mut().for_each(|x| *x += size);
            jumps = (vec![idx], vec![size]);
            e
        }
        Model::Bmo {
            sigma2,
            jump_ratio,
            edge,
        } => {
            let e = brownian(&times, sigma2, &mut rng);
            let (idx, sign) = place(spec.n, edge, &mut rng);
            outliers = (
                vec![idx],
                vec![sign * (jump_ratio * e.interval.iter().sum::<f64>()).sqrt()],
            );
            e
        }
    };
    let mut observed = eff.x.clone();
    for (&i, &o) in outliers.0.iter().zip(&outliers.1) {
        observed[i] += o;
    }
    let mut path = SimPath {
        times,
        efficient: eff.x,
        true_iv: eff.interval.iter().sum(),
        interval_variance: eff.interval,
        observed,
        spot_variance: eff.spot,
        true_jv_sum: jumps.1.iter().map(|j: &f64| j * j).sum(),
        jump_times: jumps.0,
        jump_sizes: jumps.1,
        outlier_times: outliers.0,
        outlier_sizes: outliers.1,
        omega2: 0.0,
    };
    add_noise(
        &mut path,
        &spec.noise,
        spec.noise_seed.unwrap_or(spec.seed),
        path_id,
    )?;
    if let Some(r) = spec.rounding {
        round_to_grid(&mut path, r)?;
    }
    Ok(path)
}

/// Add microstructure noise with `omega^2 = gamma^2 IV / N` (or the explicit
/// `omega2`): i.i.d. Gaussian, or stationary AR(1) with innovation variance
/// `omega^2 (1 - beta^2)`.
pub fn add_noise(path: &mut SimPath, noise: &NoiseSpec, seed: u64, path_id: u64) -> Result<()> {
    noise.validate()?;
    if noise.is_zero() {
        return Ok(());
    }
    let omega2 = match noise.omega2 {
        Some(w) => w,
        None if path.true_iv > 0.0 => noise.gamma * noise.gamma * path.true_iv / path.n() as f64,
        None => return Err(SimError::ZeroVariance),
    };
    let mut rng = path_rng(seed, path_id, NOISE_STREAM);
    let omega = omega2.sqrt();
    let innov = omega * (1.0 - noise.beta * noise.beta).sqrt();
    let mut u = omega * normal(&mut rng);
    for (i, y) in path.observed.iter_mut().enumerate() {
        if i > 0 {
            u = noise.beta * u + innov * normal(&mut rng);
        }
        *y += u;
    }
    path.omega2 = omega2;
    Ok(())
}

/// Round the observed level price `level exp(Y - X_0)` to a multiple of `tick`.
pub fn round_to_grid(path: &mut SimPath, r: Rounding) -> Result<()> {
    let x0 = path.efficient[0];
    for (i, y) in path.observed.iter_mut().enumerate() {
        let price = (r.level * (*y - x0).exp() / r.tick).round() * r.tick;
        if price <= 0.0 {
            return Err(SimError::RoundedToZero(i));
        }
        *y = (price / r.level).ln() + x0;
    }
    Ok(())
}

/// Evaluate `f` on paths `0..paths` in index order.
pub fn simulate_map<T, F>(spec: &SimSpec, paths: usize, exec: Exec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, SimPath) -> T + Sync + Send,
{
    spec.validate()?;
    exec.try_map(paths, |i| simulate(spec, i as u64).map(|p| f(i as u64, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_volatility_is_flat() {
        let p = simulate(&SimSpec::new(Model::Bm { sigma2: 0.0 }, 100, 1), 0).unwrap();
        assert!(p.efficient.iter().all(|&x| x == 0.0));
        assert_eq!(p.observed, p.efficient);
        assert_eq!(p.true_iv, 0.0);
    }

    #[test]
    fn deterministic_and_path_dependent() {
        let spec = SimSpec::new(Model::heston(), 500, 7).with_noise(NoiseSpec::iid(0.5));
        assert_eq!(simulate(&spec, 3).unwrap(), simulate(&spec, 3).unwrap());
        assert_ne!(
            simulate(&spec, 3).unwrap().efficient,
            simulate(&spec, 4).unwrap().efficient
        );
    }

    #[test]
    fn noise_seed_leaves_price_alone() {
        let a = SimSpec::new(Model::bm(), 300, 11).with_noise(NoiseSpec::iid(0.5));
        let b = SimSpec {
            noise_seed: Some(99),
            ..a.clone()
        };
        let (pa, pb) = (simulate(&a, 0).unwrap(), simulate(&b, 0).unwrap());
        assert_eq!(pa.efficient, pb.efficient);
        assert_ne!(pa.observed, pb.observed);
    }

    #[test]
    fn bmj_jump_is_quarter_of_iv() {
        let p = simulate(&SimSpec::new(Model::bmj(), 40_000, 5), 0).unwrap();
        assert_eq!(p.jump_times.len(), 1);
        assert!((1000..=39_000).contains(&p.jump_times[0]));
        assert_abs_diff_eq!(p.true_jv_sum, 0.25 * BM_SIGMA2, epsilon = 1e-15);
    }

    #[test]
    fn burst_iv_is_exact() {
        let m = Model::burst();
        let p = simulate(&SimSpec::new(m, 64, 2), 0).unwrap();
        assert_abs_diff_eq!(p.true_iv, 1.25 * 0.16 / 252.0, epsilon = 1e-15);
    }

    #[test]
    fn rounding_examples() {
        let mut p = simulate(&SimSpec::new(Model::Bm { sigma2: 0.0 }, 4, 0), 0).unwrap();
        p.observed[1] = (50.004f64 / 50.0).ln();
        round_to_grid(&mut p, Rounding::default()).unwrap();
        assert_abs_diff_eq!(50.0 * p.observed[1].exp(), 50.0, epsilon = 1e-12);
        p.observed[2] = -20.0;
        assert_eq!(
            round_to_grid(&mut p, Rounding::default()),
            Err(SimError::RoundedToZero(2))
        );
    }

    #[test]
    fn power_sampling_times() {
        let t = Sampling::Power { power: 2.0 }.times(4);
        assert_eq!(t, vec![0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
    }

    #[test]
    fn invalid_specs() {
        let bad = Model::Heston(HestonParams {
            kappa: -1.0,
            ..HestonParams::default()
        });
        assert!(simulate(&SimSpec::new(bad, 10, 0), 0).is_err());
        assert!(simulate(&SimSpec::new(Model::bm(), 1, 0), 0).is_err());
        let mut p = simulate(&SimSpec::new(Model::Bm { sigma2: 0.0 }, 10, 0), 0).unwrap();
        assert_eq!(
            add_noise(&mut p, &NoiseSpec::iid(0.5), 0, 0),
            Err(SimError::ZeroVariance)
        );
    }

    #[test]
    fn sexp_is_continuous() {
        let x0 = 1.5f64.ln();
        assert_abs_diff_eq!(sexp(x0), sexp(x0 + 1e-12), epsilon = 1e-9);
    }
}
