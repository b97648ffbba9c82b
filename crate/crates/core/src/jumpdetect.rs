//! Jump detection: the Lee–Mykland statistic on coarse returns, its
//! pre-averaged counterpart on tick data, and the maxgap measure of tick-level
//! price discontinuity.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use serde::Serialize;
use thiserror::Error;

use crate::marketdata::{sample_previous_tick, Millis, SessionWindow, TickSeries};
use crate::preavg::{self, PreAvgConfig, PreAvgError, WindowK};

#[derive(Debug, Error, PartialEq)]
pub enum JumpError {
    #[error("invalid jump-test config: {0}")]
    Config(String),
    #[error("need at least {need} returns for the local volatility window, got {got}")]
    NotEnoughData { need: usize, got: usize },
    #[error("sampling grid {grid} is not finer than the session ({session})")]
    GridTooCoarse { grid: Millis, session: Millis },
    #[error("interval holds fewer than two ticks")]
    EmptyInterval,
    #[error(transparent)]
    PreAvg(#[from] PreAvgError),
}

pub type Result<T> = std::result::Result<T, JumpError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LmConfig {
    /// Local-window length in returns.
    pub m: usize,
    pub significance: f64,
}

impl LmConfig {
    pub fn new(m: usize, significance: f64) -> Result<Self> {
        let cfg = Self { m, significance };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `M = ceil(sqrt(252 n_day))` for `n_day` returns per day, at the 1% level.
    pub fn for_daily_count(n_day: usize) -> Self {
        Self {
            m: ((252.0 * n_day as f64).sqrt().ceil() as usize).max(3),
            significance: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(JumpError::Config(format!(
                "M must be at least 3, got {}",
                self.m
            )));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(JumpError::Config(format!(
                "significance must lie in (0, 1), got {}",
                self.significance
            )));
        }
        Ok(())
    }
}

/// `L_i = r_i / sigma_i` with `sigma_i^2 = (pi/2)/(M-2) sum_{j=i-M+2}^{i-1} |r_j||r_{j-1}|`.
/// `None` when the window reaches before the first return or is flat.
pub fn lm_statistic(r: &[f64], m: usize, i: usize) -> Option<f64> {
    if m < 3 || i + 1 < m || i >= r.len() {
        return None;
    }
    let window = &r[i + 1 - m..i];
    let s: f64 = window.windows(2).map(|w| (w[0] * w[1]).abs()).sum();
    let var = FRAC_PI_2 * s / (m - 2) as f64;
    (var > 0.0).then(|| r[i] / var.sqrt())
}

/// Absolute threshold on `|L_i|` from the Gumbel limit of the maximum of
/// `n` statistics: `c0 (C_n + S_n (-ln(-ln(1 - significance))))`. The
/// leading `c0 = sqrt(2/pi)` maps the constants, stated for the bipower
/// scale without `pi/2`, onto `L_i`.
pub fn lm_threshold(n: usize, significance: f64) -> f64 {
    let c0 = FRAC_2_PI.sqrt();
    let ln_n = (n.max(2) as f64).ln();
    let root = (2.0 * ln_n).sqrt();
    let c_n = root / c0 - (PI.ln() + ln_n.ln()) / (2.0 * c0 * root);
    let s_n = 1.0 / (c0 * root);
    let beta = -(-(1.0 - significance).ln()).ln();
    c0 * (c_n + s_n * beta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpEvent {
    /// Position on the day's statistic grid.
    pub interval_index: usize,
    /// Observation indices `[first, last]` spanned by the tested return.
    pub first_obs: usize,
    pub last_obs: usize,
    /// End of the tested interval, when the input carries timestamps.
    pub timestamp: Option<Millis>,
    pub statistic: f64,
    pub size: f64,
    pub maxgap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmScan {
    pub events: Vec<JumpEvent>,
    pub n_statistics: usize,
    pub threshold: f64,
    /// Variation the jump sizes are compared against (grid RV or `RV*`).
    pub variation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpSummary {
    pub count: usize,
    pub avg_abs: f64,
    pub max_abs: f64,
    pub jv: f64,
}

impl LmScan {
    /// `sum size^2 / variation`.
    pub fn implied_jv(&self) -> f64 {
        if self.variation > 0.0 {
            self.events.iter().map(|e| e.size * e.size).sum::<f64>() / self.variation
        } else {
            0.0
        }
    }

    pub fn summary(&self) -> JumpSummary {
        let abs: Vec<f64> = self.events.iter().map(|e| e.size.abs()).collect();
        JumpSummary {
            count: abs.len(),
            avg_abs: if abs.is_empty() {
                0.0
            } else {
                abs.iter().sum::<f64>() / abs.len() as f64
            },
            max_abs: abs.iter().copied().fold(0.0, f64::max),
            jv: self.implied_jv(),
        }
    }
}

/// Test statistics for every return of `day`, with `history` holding the
/// returns that precede it. The threshold uses `n = day.len()`.
fn scan_statistics(
    history: &[f64],
    day: &[f64],
    cfg: &LmConfig,
) -> Result<(Vec<(usize, f64)>, f64)> {
    cfg.validate()?;
    let r: Vec<f64> = history.iter().chain(day).copied().collect();
    if r.len() < cfg.m {
        return Err(JumpError::NotEnoughData {
            need: cfg.m,
            got: r.len(),
        });
    }
    let h = history.len();
    let stats = (0..day.len())
        .filter_map(|i| lm_statistic(&r, cfg.m, h + i).map(|l| (i, l)))
        .collect();
    Ok((stats, lm_threshold(day.len(), cfg.significance)))
}

/// Lee–Mykland scan of one day of grid returns.
pub fn lm_scan_returns(history: &[f64], day: &[f64], cfg: &LmConfig) -> Result<LmScan> {
    let (stats, threshold) = scan_statistics(history, day, cfg)?;
    let events = stats
        .iter()
        .filter(|(_, l)| l.abs() > threshold)
        .map(|&(i, l)| JumpEvent {
            interval_index: i,
            first_obs: i,
            last_obs: i + 1,
            timestamp: None,
            statistic: l,
            size: day[i],
            maxgap: None,
        })
        .collect();
    Ok(LmScan {
        events,
        n_statistics: stats.len(),
        threshold,
        variation: preavg::realized_variance(day),
    })
}

/// Grid returns of a tick series over `session` by previous-tick sampling.
pub fn grid_returns(
    series: &TickSeries,
    session: &SessionWindow,
    grid: Millis,
) -> Result<Vec<f64>> {
    let span = session.duration();
    if grid.0 <= 0 || grid.0 >= span.0 {
        return Err(JumpError::GridTooCoarse {
            grid,
            session: span,
        });
    }
    let n = (span.0 / grid.0) as usize;
    let y = sample_previous_tick(series, session.start.0, grid, n);
    Ok(preavg::returns(&y)?)
}

/// Lee–Mykland scan on the `grid` returns of one trading day. Event
/// timestamps mark the end of the tested interval.
pub fn lm_scan(
    series: &TickSeries,
    session: &SessionWindow,
    grid: Millis,
    history: &[f64],
    cfg: &LmConfig,
) -> Result<LmScan> {
    let day = grid_returns(series, session, grid)?;
    let mut scan = lm_scan_returns(history, &day, cfg)?;
    for e in &mut scan.events {
        e.timestamp = Some(Millis(
            session.start.0 + grid.0 * (e.interval_index as i64 + 1),
        ));
    }
    Ok(scan)
}

/// Non-overlapping pre-averaged returns `r*_0, r*_K, r*_2K, ...`.
pub fn preavg_nonoverlapping(log_prices: &[f64], k: WindowK) -> Result<Vec<f64>> {
    let rstar = preavg::preavg_returns(log_prices, k)?;
    Ok(rstar.iter().step_by(k.get()).copied().collect())
}

/// Pre-averaged Lee–Mykland scan on the tick log prices of one day.
/// `history` holds non-overlapping pre-averaged returns of earlier days and
/// `cfg.m` counts non-overlapping returns. An event's size is
/// `sign(r*) sqrt(sum r*_i^2 / (K psi_K))` over all overlapping windows
/// that share a tick return with the flagged window; the implied JV divides
/// by `RV*`.
pub fn preavg_lm_scan_prices(
    log_prices: &[f64],
    history: &[f64],
    pcfg: &PreAvgConfig,
    cfg: &LmConfig,
) -> Result<LmScan> {
    pcfg.validate()?;
    if log_prices.len() < 3 {
        return Err(PreAvgError::TooShort {
            need: 3,
            got: log_prices.len(),
        }
        .into());
    }
    let k = pcfg.window(log_prices.len() - 1);
    let kk = k.get();
    let rstar = preavg::preavg_returns(log_prices, k)?;
    let z: Vec<f64> = rstar.iter().step_by(kk).copied().collect();
    let (stats, threshold) = scan_statistics(history, &z, cfg)?;
    let scale = kk as f64 * k.psi();
    let events = stats
        .iter()
        .filter(|(_, l)| l.abs() > threshold)
        .map(|&(idx, l)| {
            let i0 = idx * kk;
            let lo = i0.saturating_sub(kk - 1);
            let hi = (i0 + kk - 1).min(rstar.len() - 1);
            let energy: f64 = rstar[lo..=hi].iter().map(|x| x * x).sum();
            JumpEvent {
                interval_index: idx,
                first_obs: i0,
                last_obs: (i0 + kk - 1).min(log_prices.len() - 1),
                timestamp: None,
                statistic: l,
                size: z[idx].signum() * (energy / scale).sqrt(),
                maxgap: None,
            }
        })
        .collect();
    let variation = preavg::preavg_rv(log_prices, pcfg).unwrap_or(0.0);
    Ok(LmScan {
        events,
        n_statistics: stats.len(),
        threshold,
        variation,
    })
}

/// [`preavg_lm_scan_prices`] on a tick series; event timestamps are those
/// of the last tick in the flagged window.
pub fn preavg_lm_scan(
    series: &TickSeries,
    history: &[f64],
    pcfg: &PreAvgConfig,
    cfg: &LmConfig,
) -> Result<LmScan> {
    let mut scan = preavg_lm_scan_prices(series.log_prices(), history, pcfg, cfg)?;
    for e in &mut scan.events {
        e.timestamp = Some(Millis(series.timestamps()[e.last_obs]));
    }
    Ok(scan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MaxgapConfig {
    /// Observations in each local window beyond the candidate tick.
    pub delta: usize,
}

impl Default for MaxgapConfig {
    fn default() -> Self {
        Self { delta: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Maxgap {
    pub value: f64,
    /// `j` of the selected gap between observations `j` and `j + 1`.
    pub index: usize,
}

/// `g_j` for `j = 0..n-1`, with `B_j = {j-delta..=j}` and `F_j = {j+1..=j+1+delta}`
/// clipped to the interval.
pub fn gap_profile(y: &[f64], delta: usize) -> Vec<f64> {
    let n = y.len();
    (0..n.saturating_sub(1))
        .map(|j| {
            let before = &y[j.saturating_sub(delta)..=j];
            let after = &y[j + 1..=(j + 1 + delta).min(n - 1)];
            let (y0, y1) = (y[j], y[j + 1]);
            if y1 > y0 {
                let lo_after = after.iter().copied().fold(f64::INFINITY, f64::min);
                let hi_before = before.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo_after - hi_before).max(0.0)
            } else if y1 < y0 {
                let hi_after = after.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo_before = before.iter().copied().fold(f64::INFINITY, f64::min);
                (hi_after - lo_before).min(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Signed gap of largest magnitude; the earliest wins ties.
pub fn maxgap(y: &[f64], cfg: &MaxgapConfig) -> Result<Maxgap> {
    if y.len() < 2 {
        return Err(JumpError::EmptyInterval);
    }
    let g = gap_profile(y, cfg.delta);
    let (index, value) = g
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (j, v)| {
            if v.abs() > f64::abs(best.1) {
                (j, v)
            } else {
                best
            }
        });
    Ok(Maxgap { value, index })
}

/// Maxgap of the tick log prices with timestamps in `[start, end]`.
pub fn maxgap_in_window(
    series: &TickSeries,
    start: Millis,
    end: Millis,
    cfg: &MaxgapConfig,
) -> Result<Maxgap> {
    maxgap(series.slice_time(start.0, end.0).log_prices(), cfg)
}

/// Attach the maxgap over each coarse interval `[t - grid, t]` to the events
/// of a grid scan. Intervals with fewer than two ticks get no maxgap.
pub fn attach_maxgap(scan: &mut LmScan, series: &TickSeries, grid: Millis, cfg: &MaxgapConfig) {
    for e in &mut scan.events {
        if let Some(t) = e.timestamp {
            e.maxgap = maxgap_in_window(series, Millis(t.0 - grid.0), t, cfg)
                .ok()
                .map(|m| m.value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn statistic_of_flat_magnitude_window() {
        let a = 0.003;
        let r: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { a } else { -a }).collect();
        let l = lm_statistic(&r, 5, 8).unwrap();
        assert_abs_diff_eq!(l, FRAC_2_PI.sqrt(), epsilon = 1e-12);
        let mut z = r.clone();
        z[8] = 0.0;
        assert_eq!(lm_statistic(&z, 5, 8), Some(0.0));
    }

    #[test]
    fn statistic_needs_history_and_variation() {
        let r = vec![0.01; 6];
        assert!(lm_statistic(&r, 5, 3).is_none());
        assert!(lm_statistic(&r, 5, 4).is_some());
        assert!(lm_statistic(&[0.0, 0.0, 0.0, 0.0, 1.0], 5, 4).is_none());
    }

    #[test]
    fn threshold_values() {
        assert_abs_diff_eq!(lm_threshold(78, 0.01), 4.0674, epsilon = 1e-3);
        assert!(lm_threshold(78, 0.5) < lm_threshold(78, 0.01));
        assert_eq!(lm_threshold(78, 1.0), f64::NEG_INFINITY);
        assert!(lm_threshold(1000, 0.01) > lm_threshold(78, 0.01));
    }

    #[test]
    fn default_window() {
        assert_eq!(LmConfig::for_daily_count(78).m, 141);
        assert!(LmConfig::new(2, 0.01).is_err());
        assert!(LmConfig::new(10, 1.0).is_err());
    }

    #[test]
    fn implied_jv_is_size_squared_over_rv() {
        let mut day = [0.001, -0.001].repeat(20);
        day[30] = 0.05;
        let scan = lm_scan_returns(
            &[0.001, -0.001].repeat(10),
            &day,
            &LmConfig::new(10, 0.01).unwrap(),
        )
        .unwrap();
        assert_eq!(scan.events.len(), 1);
        assert_eq!(scan.events[0].interval_index, 30);
        let rv = preavg::realized_variance(&day);
        assert_abs_diff_eq!(scan.implied_jv(), 0.05f64.powi(2) / rv, epsilon = 1e-15);
    }

    #[test]
    fn flat_day_has_no_events() {
        let y = vec![4.0; 2000];
        let scan = preavg_lm_scan_prices(
            &y,
            &[],
            &PreAvgConfig::default(),
            &LmConfig::new(5, 0.01).unwrap(),
        )
        .unwrap();
        assert!(scan.events.is_empty());
    }

    #[test]
    fn gap_of_inserted_step() {
        let mut y = vec![1.0; 20];
        for v in &mut y[11..] {
            *v += 0.7;
        }
        let g = maxgap(&y, &MaxgapConfig::default()).unwrap();
        assert_eq!(g.index, 10);
        assert_abs_diff_eq!(g.value, 0.7, epsilon = 1e-15);
        assert_eq!(
            maxgap(&[1.0], &MaxgapConfig::default()),
            Err(JumpError::EmptyInterval)
        );
    }

    #[test]
    fn delta_zero_matches_tick_returns() {
        let y = [0.0, 1.0, 3.0, 2.5, 2.0, 6.0];
        assert_eq!(gap_profile(&y, 0), vec![1.0, 2.0, -0.5, -0.5, 4.0]);
    }

    #[test]
    fn ties_pick_earliest() {
        let y = [0.0, 1.0, 1.0, 2.0];
        assert_eq!(maxgap(&y, &MaxgapConfig { delta: 0 }).unwrap().index, 0);
    }
}
