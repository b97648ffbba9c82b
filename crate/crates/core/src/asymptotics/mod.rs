//! Weight-function calculus, the asymptotic covariance `Σ*` of
//! `N^{1/4}(RV* - IV, BV* - IV)`, and the finite-sample bias law of `BV`.

pub mod quad;

use std::cell::Cell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::exec::Exec;
use quad::{adaptive_simpson, gl_on, gl_panels};

#[derive(Debug, Error, PartialEq)]
pub enum AsymptoticsError {
    #[error("adaptive quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("window K must be at least 2, got {0}")]
    BadWindow(usize),
    #[error("Gaussian covariance not positive semidefinite at l = {l}, s = {s:.6}, u = {u:.6}")]
    NotPsd { l: i32, s: f64, u: f64 },
    #[error("spot variance must be non-negative, got {value} at s = {s}")]
    NegativeVariance { s: f64, value: f64 },
    #[error("spot variance touches zero at s = {0}")]
    SigmaTouchesZero(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

pub type Result<T> = std::result::Result<T, AsymptoticsError>;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pre-averaging weight `g` on `[0, 1]` with its derivative. `breakpoints`
/// lists interior points where `g'` is discontinuous.
#[derive(Clone)]
pub struct WeightFunction {
    name: String,
    g: RealFn,
    g_prime: RealFn,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("name", &self.name)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl WeightFunction {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        breakpoints: Vec<f64>,
    ) -> Result<Self> {
        let w = Self {
            name: name.into(),
            g: Arc::new(g),
            g_prime: Arc::new(g_prime),
            breakpoints,
        };
        if w.g(0.0).abs() > 1e-12 || w.g(1.0).abs() > 1e-12 {
            return Err(AsymptoticsError::InvalidWeight(
                "g must vanish at 0 and 1".into(),
            ));
        }
        let psi2 = adaptive_simpson(|x| w.g(x).powi(2), 0.0, 1.0, &w.breakpoints, 1e-12)?;
        if psi2 <= 0.0 {
            return Err(AsymptoticsError::InvalidWeight(
                "integral of g^2 must be positive".into(),
            ));
        }
        Ok(w)
    }

    /// `g(x) = min(x, 1 - x)`.
    pub fn triangular() -> Self {
        Self {
            name: "min(x,1-x)".into(),
            g: Arc::new(|x: f64| x.min(1.0 - x)),
            g_prime: Arc::new(|x: f64| if x < 0.5 { 1.0 } else { -1.0 }),
            breakpoints: vec![0.5],
        }
    }

    /// `g(x) = sin(pi x)`.
    pub fn sine() -> Self {
        Self {
            name: "sin(pi x)".into(),
            g: Arc::new(|x: f64| (PI * x).sin()),
            g_prime: Arc::new(|x: f64| PI * (PI * x).cos()),
            breakpoints: vec![],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }
    pub fn g_prime(&self, x: f64) -> f64 {
        (self.g_prime)(x)
    }
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConstants {
    pub k: usize,
    /// `∫ g'^2`.
    pub psi1: f64,
    /// `∫ g^2`.
    pub psi2: f64,
    /// `K Σ_{j=1}^{K} (g(j/K) - g((j-1)/K))^2`.
    pub psi1_k: f64,
    /// `(1/K) Σ_{j=1}^{K-1} g(j/K)^2`.
    pub psi2_k: f64,
}

const TOL: f64 = 1e-13;

fn psi_integrals(g: &WeightFunction) -> Result<(f64, f64)> {
    let psi1 = adaptive_simpson(|x| g.g_prime(x).powi(2), 0.0, 1.0, g.breakpoints(), TOL)?;
    let psi2 = adaptive_simpson(|x| g.g(x).powi(2), 0.0, 1.0, g.breakpoints(), TOL)?;
    Ok((psi1, psi2))
}

pub fn weight_constants(g: &WeightFunction, k: usize) -> Result<WeightConstants> {
    if k < 2 {
        return Err(AsymptoticsError::BadWindow(k));
    }
    let (psi1, psi2) = psi_integrals(g)?;
    let kf = k as f64;
    let psi1_k = kf
        * (1..=k)
            .map(|j| (g.g(j as f64 / kf) - g.g((j - 1) as f64 / kf)).powi(2))
            .sum::<f64>();
    let psi2_k = (1..k).map(|j| g.g(j as f64 / kf).powi(2)).sum::<f64>() / kf;
    Ok(WeightConstants {
        k,
        psi1,
        psi2,
        psi1_k,
        psi2_k,
    })
}

fn lag_product(f: &(dyn Fn(f64) -> f64 + Sync), breakpoints: &[f64], u: f64) -> Result<f64> {
    let u = u.clamp(0.0, 1.0);
    let cuts: Vec<f64> = breakpoints.iter().flat_map(|&b| [b, b - u]).collect();
    adaptive_simpson(|y| f(y) * f(y + u), 0.0, 1.0 - u, &cuts, TOL)
}

/// `w_g(u) = ∫_0^{1-u} g(y) g(y+u) dy`.
pub fn w_g(g: &WeightFunction, u: f64) -> Result<f64> {
    lag_product(&|x| g.g(x), g.breakpoints(), u)
}

/// `w_{g'}(u) = ∫_0^{1-u} g'(y) g'(y+u) dy`.
pub fn w_g_prime(g: &WeightFunction, u: f64) -> Result<f64> {
    lag_product(&|x| g.g_prime(x), g.breakpoints(), u)
}

/// Monte Carlo settings for the absolute-value moments inside `Σ*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub draws: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            draws: 200_000,
            seed: 0x005e_ed5e_ed00,
        }
    }
}

/// Conditional asymptotic covariance of `N^{1/4}(RV* - IV, BV* - IV)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaStar {
    pub matrix: [[f64; 2]; 2],
    /// The two Monte Carlo estimates averaged into the off-diagonal.
    pub f12: f64,
    pub f21: f64,
    /// Monte Carlo estimate of the entry computed in closed form, for checking the sampler.
    pub rv_entry_mc: f64,
}

impl SigmaStar {
    pub fn correlation(&self) -> f64 {
        self.matrix[0][1] / (self.matrix[0][0] * self.matrix[1][1]).sqrt()
    }
}

const NODES: usize = 32;
const MU2: f64 = FRAC_2_PI;

/// Lag coefficients at one `u` node.
#[derive(Debug, Clone, Copy)]
struct LagCoefs {
    u: f64,
    wg: f64,
    wgp: f64,
    wg_c: f64,
    wgp_c: f64,
}

/// Summed over `l`: closed-form F11, MC estimates of F11, F12, F21, F22.
#[derive(Debug, Clone, Copy, Default)]
struct NodeValue([f64; 5]);

/// Lower Cholesky factor of a 4×4 covariance; `None` if not PSD.
fn cholesky4(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut l = [[0.0; 4]; 4];
    let scale = (0..4)
        .map(|i| a[i][i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for i in 0..4 {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s < -1e-10 * scale {
                    return None;
                }
                l[i][i] = s.max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > 1e-14 * scale.sqrt() {
                    s / l[j][j]
                } else {
                    0.0
                };
            }
        }
    }
    Some(l)
}

/// Covariance of `(S1, S2, T1, T2)` for lag `l`: the S and T pairs each
/// have independent components of variance `v`; `cov(S_a, T_b)` is `c_near`
/// when `a = b + l - 1`, `c_far` when `a = b + l`, and zero otherwise.
fn node_covariance(v: f64, c_near: f64, c_far: f64, l: i32) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = v;
    }
    for a in 1..=2i32 {
        for b in 1..=2i32 {
            let c = if a == b + l - 1 {
                c_near
            } else if a == b + l {
                c_far
            } else {
                0.0
            };
            let (i, j) = ((a - 1) as usize, (b + 1) as usize);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    m
}

#[allow(clippy::too_many_arguments)]
fn node_value(
    x2: f64,
    s: f64,
    lc: &LagCoefs,
    omega2: f64,
    theta: f64,
    psi1: f64,
    psi2: f64,
    mc: &McConfig,
    node: usize,
) -> Result<NodeValue> {
    let v = theta * psi2 * x2 + psi1 * omega2 / theta;
    let c_near = theta * lc.wg * x2 + lc.wgp * omega2 / theta;
    let c_far = theta * lc.wg_c * x2 + lc.wgp_c * omega2 / theta;
    let mut factors = [[[0.0; 4]; 4]; 4];
    let mut out = NodeValue::default();
    for (li, l) in (-1..=2).enumerate() {
        let cov = node_covariance(v, c_near, c_far, l);
        factors[li] = cholesky4(&cov).ok_or(AsymptoticsError::NotPsd { l, s, u: lc.u })?;
        out.0[0] += 2.0 * cov[0][2] * cov[0][2];
    }

    // Common random numbers: the stream depends on the u node only.
    let mut rng =
        ChaCha8Rng::seed_from_u64(mc.seed ^ (node as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    // Per l: sums of f1S, f2S, f1T, f2T, f1S f1T, f1S f2T, f2S f1T, f2S f2T.
    let mut acc = [[0.0f64; 8]; 4];
    for _ in 0..mc.draws {
        let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        for (li, lmat) in factors.iter().enumerate() {
            let x: [f64; 4] = std::array::from_fn(|i| (0..=i).map(|k| lmat[i][k] * z[k]).sum());
            let f1s = x[0] * x[0];
            let f2s = (x[0] * x[1]).abs() / MU2;
            let f1t = x[2] * x[2];
            let f2t = (x[2] * x[3]).abs() / MU2;
            let a = &mut acc[li];
            a[0] += f1s;
            a[1] += f2s;
            a[2] += f1t;
            a[3] += f2t;
            a[4] += f1s * f1t;
            a[5] += f1s * f2t;
            a[6] += f2s * f1t;
            a[7] += f2s * f2t;
        }
    }
    let n = mc.draws as f64;
    let cov = |sxy: f64, sx: f64, sy: f64| (sxy - sx * sy / n) / (n - 1.0);
    for a in &acc {
        out.0[1] += cov(a[4], a[0], a[2]);
        out.0[2] += cov(a[5], a[0], a[3]);
        out.0[3] += cov(a[6], a[1], a[2]);
        out.0[4] += cov(a[7], a[1], a[3]);
    }
    Ok(out)
}

/// `Σ* = 1/(θ ψ2²) Σ_{l=-1}^{2} ∫∫ F_{l, σ_s, u} ds du` for a spot-variance
/// path `sigma2(s)` and noise variance `omega2`. The F11 term is exact;
/// terms involving `|x1||x2|/μ²` use common-random-number Monte Carlo with a
/// seed per `u` node, so results do not depend on the execution strategy.
/// Quadrature is 32-node Gauss–Legendre in `s` and per panel in `u`
/// (panels split at the kinks of `w_g` and `w_{g'}`). Node evaluations are
/// shared across `s` nodes with equal spot variance.
pub fn sigma_star<S>(
    sigma2: S,
    omega2: f64,
    theta: f64,
    g: &WeightFunction,
    mc: &McConfig,
    exec: Exec,
) -> Result<SigmaStar>
where
    S: Fn(f64) -> f64,
{
    if !(theta > 0.0) {
        return Err(AsymptoticsError::NonPositive("theta"));
    }
    if mc.draws < 2 {
        return Err(AsymptoticsError::NonPositive("draws"));
    }
    let (psi1, psi2) = psi_integrals(g)?;
    let u_cuts: Vec<f64> = g.breakpoints().iter().flat_map(|&b| [b, 1.0 - b]).collect();
    let u_rule = gl_panels(NODES, 0.0, 1.0, &u_cuts);
    let coefs: Vec<LagCoefs> = u_rule
        .iter()
        .map(|&(u, _)| {
            Ok(LagCoefs {
                u,
                wg: w_g(g, u)?,
                wgp: w_g_prime(g, u)?,
                wg_c: w_g(g, 1.0 - u)?,
                wgp_c: w_g_prime(g, 1.0 - u)?,
            })
        })
        .collect::<Result<_>>()?;

    let s_rule = gl_on(NODES, 0.0, 1.0);
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    let mut slot: HashMap<u64, usize> = HashMap::new();
    let mut s_slots = Vec::with_capacity(NODES);
    for &(s, _) in &s_rule {
        let x2 = sigma2(s);
        if !(x2 >= 0.0) {
            return Err(AsymptoticsError::NegativeVariance { s, value: x2 });
        }
        let idx = *slot.entry(x2.to_bits()).or_insert_with(|| {
            distinct.push((x2, s));
            distinct.len() - 1
        });
        s_slots.push(idx);
    }

    let nu = coefs.len();
    let values: Vec<NodeValue> = exec.try_map(distinct.len() * nu, |t| {
        let ((x2, s), j) = (distinct[t / nu], t % nu);
        node_value(x2, s, &coefs[j], omega2, theta, psi1, psi2, mc, j)
    })?;

    let mut total = [0.0; 5];
    for (&(_, ws), &idx) in s_rule.iter().zip(&s_slots) {
        for (j, &(_, wu)) in u_rule.iter().enumerate() {
            let v = &values[idx * nu + j];
            for (t, x) in total.iter_mut().zip(v.0) {
                *t += ws * wu * x;
            }
        }
    }
    let scale = 1.0 / (theta * psi2 * psi2);
    let [f11, f11_mc, f12, f21, f22] = total.map(|x| scale * x);
    let off = 0.5 * (f12 + f21);
    Ok(SigmaStar {
        matrix: [[f11, off], [off, f22]],
        f12,
        f21,
        rv_entry_mc: f11_mc,
    })
}

/// Expected finite-sample bias of `BV` at `n` returns,
/// `-(1/n) (1/12) ∫_0^1 υ_s² / σ_s² ds`, where `υ` is the diffusion
/// coefficient of the spot variance `σ²`. `breakpoints` marks
/// discontinuities of the integrand.
pub fn bv_bias<S, V>(sigma2: S, vov: V, n: usize, breakpoints: &[f64]) -> Result<f64>
where
    S: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    if n == 0 {
        return Err(AsymptoticsError::NonPositive("n"));
    }
    let touched = Cell::new(None);
    let integrand = |s: f64| {
        let v = sigma2(s);
        if !(v > 0.0) {
            touched.set(Some(s));
            return 0.0;
        }
        vov(s).powi(2) / v
    };
    let scale = gl_on(NODES, 0.0, 1.0)
        .iter()
        .map(|&(s, w)| w * integrand(s).abs())
        .sum::<f64>()
        .max(1e-300);
    let integral = adaptive_simpson(integrand, 0.0, 1.0, breakpoints, 1e-12 * scale)?;
    if let Some(s) = touched.get() {
        return Err(AsymptoticsError::SigmaTouchesZero(s));
    }
    Ok(-integral / (12.0 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangular_constants() {
        let c = weight_constants(&WeightFunction::triangular(), 10).unwrap();
        assert_abs_diff_eq!(c.psi1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.psi2, 1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.psi1_k, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.psi2_k, (1.0 + 2.0 / 100.0) / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn sine_psi2() {
        let c = weight_constants(&WeightFunction::sine(), 8).unwrap();
        assert_abs_diff_eq!(c.psi2, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.psi1, PI * PI / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn invalid_weight_rejected() {
        assert!(WeightFunction::new("bad", |x| x, |_| 1.0, vec![]).is_err());
        assert!(WeightFunction::new("zero", |_| 0.0, |_| 0.0, vec![]).is_err());
        assert!(weight_constants(&WeightFunction::triangular(), 1).is_err());
    }

    #[test]
    fn w_g_endpoints() {
        let g = WeightFunction::triangular();
        assert_eq!(w_g(&g, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(w_g(&g, 0.0).unwrap(), 1.0 / 12.0, epsilon = 1e-13);
        assert_abs_diff_eq!(w_g_prime(&g, 0.0).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn covariance_layout() {
        let m = node_covariance(1.0, 0.3, 0.2, 1);
        // l = 1: cov(S1,T1) = cov(S2,T2) = near, cov(S2,T1) = far, cov(S1,T2) = 0.
        assert_eq!((m[0][2], m[1][3], m[1][2], m[0][3]), (0.3, 0.3, 0.2, 0.0));
        let m = node_covariance(1.0, 0.3, 0.2, -1);
        assert_eq!((m[0][2], m[0][3], m[1][2], m[1][3]), (0.0, 0.2, 0.0, 0.0));
        assert_eq!((m[0][1], m[2][3]), (0.0, 0.0));
    }

    #[test]
    fn cholesky_flags_indefinite() {
        let m = node_covariance(1.0, 0.9, 0.9, 1);
        assert!(cholesky4(&m).is_none());
        assert!(cholesky4(&node_covariance(1.0, 0.3, 0.2, 0)).is_some());
    }

    #[test]
    fn bias_law_closed_forms() {
        assert_eq!(bv_bias(|_| 0.04, |_| 0.0, 100, &[]).unwrap(), 0.0);
        let b = bv_bias(|_| 0.04, |_| 0.4, 1000, &[]).unwrap();
        assert_abs_diff_eq!(b, -0.16 / (12.0 * 1000.0 * 0.04), epsilon = 1e-15);
        assert!(matches!(
            bv_bias(|s| s - 0.5, |_| 1.0, 10, &[]),
            Err(AsymptoticsError::SigmaTouchesZero(_))
        ));
    }
}
