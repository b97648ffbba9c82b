//! `signature`: estimates as a function of the pre-averaging horizon
//! (`theta`) or of the sampling frequency on the burst design (`jv`).

use std::path::{Path, PathBuf};

use jumpvar_core::preavg::{
    annualized_vol, bipower_variation, realized_variance, returns, PreAvgConfig, VariationReport,
};
use jumpvar_core::simlab::{simulate_map, Model, NoiseSpec, Rounding, SimSpec};
use jumpvar_core::stats::{mean, std_error};
use jumpvar_core::Exec;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Failure, ResultExt};
use crate::inputs::{collect_inputs, load_day};
use crate::output::{ensure_dir, kv, meta_path, write_csv, write_meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Theta,
    Jv,
}

impl std::str::FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theta" => Ok(Kind::Theta),
            "jv" => Ok(Kind::Jv),
            _ => Err(format!(
                "unknown signature kind `{s}` (expected theta or jv)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ThetaPoint {
    pub theta: f64,
    pub days: usize,
    pub vol_rv_star: f64,
    pub vol_bv_star_tau: f64,
    pub jv: f64,
    /// Annualized volatility implied by the true IV; simulated input only.
    pub true_vol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct JvPoint {
    pub samples: usize,
    pub log_samples: f64,
    /// Path average of `(RV - BV) / RV` on the efficient price.
    pub jv_noise_free: f64,
    pub std_error_noise_free: f64,
    /// Same on the noisy, rounded price.
    pub jv_noisy: f64,
    pub log_jv_noise_free: f64,
    pub log_jv_noisy: f64,
}

fn ln_or_nan(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NAN
    }
}

fn check_thetas(thetas: &[f64]) -> Result<(), Failure> {
    match thetas.iter().find(|t| t.is_nan() || **t <= 0.0) {
        Some(t) => Err(Failure::input(format!(
            "theta grid values must be positive, got {t}"
        ))),
        None if thetas.is_empty() => Err(Failure::input("theta grid is empty")),
        None => Ok(()),
    }
}

/// Average over days of annualized `RV*` and `BV*_tau` vols and the JV, per horizon.
fn theta_points(
    days: &[(Vec<f64>, Option<f64>)],
    thetas: &[f64],
    base: &PreAvgConfig,
    exec: Exec,
) -> Result<Vec<ThetaPoint>, Failure> {
    thetas
        .iter()
        .map(|&theta| {
            let cfg = PreAvgConfig { theta, ..*base };
            let reps = exec
                .try_map(days.len(), |i| VariationReport::compute(&days[i].0, &cfg))
                .compute_err(format!("estimating at theta = {theta}"))?;
            let ivs: Vec<f64> = days.iter().filter_map(|d| d.1).collect();
            Ok(ThetaPoint {
                theta,
                days: reps.len(),
                vol_rv_star: annualized_vol(mean(
                    &reps.iter().map(|r| r.rv_star).collect::<Vec<_>>(),
                )),
                vol_bv_star_tau: annualized_vol(mean(
                    &reps.iter().map(|r| r.bv_star_tau).collect::<Vec<_>>(),
                )),
                jv: mean(&reps.iter().map(|r| r.jv).collect::<Vec<_>>()),
                true_vol: (!ivs.is_empty()).then(|| annualized_vol(mean(&ivs))),
            })
        })
        .collect()
}

/// Theta signature of noisy BM paths with `n` ticks.
pub fn theta_signature_simulated(
    thetas: &[f64],
    base: &PreAvgConfig,
    n: usize,
    gamma: f64,
    paths: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<ThetaPoint>, Failure> {
    check_thetas(thetas)?;
    let spec = SimSpec::new(Model::bm(), n, seed).with_noise(NoiseSpec::iid(gamma));
    let days = simulate_map(&spec, paths, exec, |_, p| (p.observed, Some(p.true_iv)))
        .compute_err("simulating")?;
    theta_points(&days, thetas, base, exec)
}

/// Mean JV from `RV` and `BV` at each sampling count, noise-free and noisy,
/// on the burst-of-volatility design with `n` ticks per day.
pub fn jv_signature(
    n: usize,
    samples: &[usize],
    paths: usize,
    gamma: f64,
    rounding: Rounding,
    seed: u64,
    exec: Exec,
) -> Result<Vec<JvPoint>, Failure> {
    if let Some(s) = samples.iter().find(|&&s| s < 2 || n % s != 0) {
        return Err(Failure::input(format!(
            "sample count {s} must be at least 2 and divide {n}"
        )));
    }
    let spec = SimSpec::new(Model::burst(), n, seed)
        .with_noise(NoiseSpec::iid(gamma))
        .with_rounding(rounding);
    let jv = |y: &[f64], m: usize| -> f64 {
        let sub: Vec<f64> = y.iter().step_by(n / m).copied().collect();
        let r = returns(&sub).unwrap_or_default();
        let rv = realized_variance(&r);
        let bv = bipower_variation(&r).unwrap_or(f64::NAN);
        (rv - bv) / rv
    };
    let per_path = simulate_map(&spec, paths, exec, |_, p| {
        samples
            .iter()
            .map(|&m| (jv(&p.efficient, m), jv(&p.observed, m)))
            .collect::<Vec<_>>()
    })
    .compute_err("simulating burst paths")?;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let free: Vec<f64> = per_path
                .iter()
                .map(|v| v[j].0)
                .filter(|x| x.is_finite())
                .collect();
            let noisy: Vec<f64> = per_path
                .iter()
                .map(|v| v[j].1)
                .filter(|x| x.is_finite())
                .collect();
            let (jf, jn) = (mean(&free), mean(&noisy));
            JvPoint {
                samples: m,
                log_samples: (m as f64).ln(),
                jv_noise_free: jf,
                std_error_noise_free: std_error(&free),
                jv_noisy: jn,
                log_jv_noise_free: ln_or_nan(jf),
                log_jv_noisy: ln_or_nan(jn),
            }
        })
        .collect())
}

pub fn run(
    cfg: &RunConfig,
    kind: Kind,
    input: Option<&Path>,
    out: &Path,
    paths: usize,
) -> Result<PathBuf, Failure> {
    let s = &cfg.signature;
    let base = cfg.preavg.config();
    base.validate().input_err("preavg settings")?;
    ensure_dir(out)?;
    let mut meta = vec![kv("command", "signature")];
    let csv = match kind {
        Kind::Theta => {
            check_thetas(&s.thetas)?;
            let points = match input {
                Some(path) => {
                    let session = cfg.data.session()?;
                    let files: Vec<PathBuf> = collect_inputs(path)?
                        .into_iter()
                        .flat_map(|i| i.days)
                        .collect();
                    let days = files
                        .iter()
                        .map(|f| {
                            Ok((
                                load_day(f, &cfg.data, &session)?.log_prices().to_vec(),
                                None,
                            ))
                        })
                        .collect::<Result<Vec<_>, Failure>>()?;
                    meta.push(kv("source", path.display()));
                    theta_points(&days, &s.thetas, &base, cfg.exec())?
                }
                None => {
                    meta.push(kv("source", "simulated BM with i.i.d. noise"));
                    theta_signature_simulated(
                        &s.thetas,
                        &base,
                        s.n,
                        s.gamma,
                        paths,
                        cfg.seed,
                        cfg.exec(),
                    )?
                }
            };
            let csv = out.join("signature_theta.csv");
            write_csv(&csv, &points)?;
            csv
        }
        Kind::Jv => {
            let points = jv_signature(
                s.n,
                &s.samples,
                paths,
                s.gamma,
                s.rounding,
                cfg.seed,
                cfg.exec(),
            )?;
            meta.push(kv("source", "simulated burst of volatility"));
            let csv = out.join("signature_jv.csv");
            write_csv(&csv, &points)?;
            csv
        }
    };
    meta.push(kv("paths", paths));
    meta.extend(cfg.echo());
    write_meta(&meta_path(&csv), &meta)?;
    Ok(csv)
}
