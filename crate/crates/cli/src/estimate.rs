//! `estimate`: per-day variation measures at each requested frequency.

use std::path::{Path, PathBuf};

use jumpvar_core::marketdata::{sample_previous_tick, SessionWindow, TickSeries};
use jumpvar_core::preavg::{annualized_vol, PreAvgConfig, VariationReport};
use serde::Serialize;

use crate::config::{parse_frequencies, Frequency, RunConfig};
use crate::error::{Failure, ResultExt};
use crate::inputs::{collect_inputs, load_day, stem};
use crate::output::{ensure_dir, kv, meta_path, write_csv, write_meta};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EstimateRow {
    pub instrument: String,
    pub day: String,
    pub frequency: String,
    pub n_obs: usize,
    pub k: usize,
    pub rv: f64,
    pub bv: f64,
    pub rv_star: f64,
    pub bv_star: f64,
    pub bv_star_tau: f64,
    pub omega2_hat: f64,
    pub gamma_hat: f64,
    /// `(RV* - BV*_tau) / RV*`.
    pub jv: f64,
    /// `(RV - BV) / RV`.
    pub jv_rv_bv: f64,
    pub truncation_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SummaryRow {
    pub frequency: String,
    pub days: usize,
    pub rv: f64,
    pub bv: f64,
    pub rv_star: f64,
    pub bv_star_tau: f64,
    pub jv_mean_of_ratios: f64,
    pub jv_ratio_of_means: f64,
    pub jv_rv_bv: f64,
    pub vol_rv: f64,
    pub vol_bv: f64,
    pub vol_rv_star: f64,
    pub vol_bv_star_tau: f64,
}

/// Log prices of a day at `freq`.
pub fn sample(
    series: &TickSeries,
    session: &SessionWindow,
    freq: Frequency,
) -> Result<Vec<f64>, Failure> {
    match freq {
        Frequency::Tick => Ok(series.log_prices().to_vec()),
        Frequency::Grid(step) => {
            let n = session.duration().0 / step.0;
            if n < 1 {
                return Err(Failure::input(format!(
                    "frequency {freq} is coarser than the session"
                )));
            }
            Ok(sample_previous_tick(
                series,
                session.start.0,
                step,
                n as usize,
            ))
        }
    }
}

pub fn estimate_day(
    instrument: &str,
    day: &str,
    series: &TickSeries,
    session: &SessionWindow,
    frequencies: &[Frequency],
    cfg: &PreAvgConfig,
) -> Result<Vec<EstimateRow>, Failure> {
    frequencies
        .iter()
        .map(|&f| {
            let y = sample(series, session, f)?;
            let rep = VariationReport::compute(&y, cfg)
                .compute_err(format!("{instrument} {day} at {f}"))?;
            Ok(EstimateRow {
                instrument: instrument.to_string(),
                day: day.to_string(),
                frequency: f.to_string(),
                n_obs: rep.n_obs,
                k: rep.k,
                rv: rep.rv,
                bv: rep.bv,
                rv_star: rep.rv_star,
                bv_star: rep.bv_star,
                bv_star_tau: rep.bv_star_tau,
                omega2_hat: rep.omega2_hat,
                gamma_hat: rep.gamma_hat,
                jv: rep.jv,
                jv_rv_bv: (rep.rv - rep.bv) / rep.rv,
                truncation_iterations: rep.truncation_iterations,
            })
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs
        .filter(|x| x.is_finite())
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Cross-day averages per frequency, in variance and annualized-vol units.
pub fn summarize(rows: &[EstimateRow], frequencies: &[Frequency]) -> Vec<SummaryRow> {
    frequencies
        .iter()
        .map(|f| {
            let name = f.to_string();
            let sel: Vec<&EstimateRow> = rows.iter().filter(|r| r.frequency == name).collect();
            let m = |g: fn(&EstimateRow) -> f64| mean(sel.iter().map(|r| g(r)));
            let (rv, bv, rv_star, bv_tau) = (
                m(|r| r.rv),
                m(|r| r.bv),
                m(|r| r.rv_star),
                m(|r| r.bv_star_tau),
            );
            SummaryRow {
                frequency: name,
                days: sel.len(),
                rv,
                bv,
                rv_star,
                bv_star_tau: bv_tau,
                jv_mean_of_ratios: m(|r| r.jv),
                jv_ratio_of_means: (rv_star - bv_tau) / rv_star,
                jv_rv_bv: (rv - bv) / rv,
                vol_rv: annualized_vol(rv),
                vol_bv: annualized_vol(bv),
                vol_rv_star: annualized_vol(rv_star),
                vol_bv_star_tau: annualized_vol(bv_tau),
            }
        })
        .collect()
}

pub struct EstimateOutput {
    pub rows: Vec<EstimateRow>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &RunConfig, input: &Path, out: &Path) -> Result<EstimateOutput, Failure> {
    let frequencies = parse_frequencies(&cfg.estimate.frequencies)?;
    let session = cfg.data.session()?;
    let pcfg = cfg.preavg.config();
    pcfg.validate().input_err("preavg settings")?;
    let jobs: Vec<(String, PathBuf)> = collect_inputs(input)?
        .into_iter()
        .flat_map(|ins| ins.days.into_iter().map(move |d| (ins.id.clone(), d)))
        .collect();
    let results = cfg.exec().map(jobs.len(), |i| {
        let (id, path) = &jobs[i];
        let series = load_day(path, &cfg.data, &session)?;
        estimate_day(id, &stem(path), &series, &session, &frequencies, &pcfg)
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for ((_, path), res) in jobs.iter().zip(results) {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failures.push(e);
            }
        }
    }
    ensure_dir(out)?;
    let summary = summarize(&rows, &frequencies);
    let est = out.join("estimates.csv");
    let sum = out.join("estimates_summary.csv");
    write_csv(&est, &rows)?;
    write_csv(&sum, &summary)?;
    let mut meta = vec![
        kv("command", "estimate"),
        kv("input", input.display()),
        kv("days", jobs.len() - failures.len()),
    ];
    meta.push(kv("failed_days", failures.len()));
    meta.extend(cfg.echo());
    write_meta(&meta_path(&est), &meta)?;
    if let Some(first) = failures.into_iter().next() {
        return Err(first);
    }
    Ok(EstimateOutput {
        rows,
        summary,
        files: vec![est, sum],
    })
}
