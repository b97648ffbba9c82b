//! `table2`: normalized means of `RV*`, `BV*` and `BV*_tau` over simulated
//! paths for each model, pre-averaging horizon and noise regime.

use std::path::Path;

use jumpvar_core::preavg::{preavg_bv, preavg_rv, truncated_preavg_bv, PreAvgConfig, PreAvgError};
use jumpvar_core::simlab::{simulate_map, Model, NoiseSpec, SimSpec};
use jumpvar_core::stats::{mean, std_error};
use jumpvar_core::Exec;
use serde::Serialize;

use crate::config::{RunConfig, Table2Section};
use crate::error::{Failure, ResultExt};
use crate::output::{ensure_dir, kv, meta_path, write_csv, write_meta};

pub const ESTIMATORS: [&str; 3] = ["RV*", "BV*", "BV*_tau"];

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Table2Cell {
    pub noise: String,
    pub model: String,
    pub theta: f64,
    pub estimator: String,
    pub mean: f64,
    pub std_error: f64,
    /// Paths entering the mean.
    pub paths: usize,
    /// Paths dropped because truncation hit its iteration cap.
    pub diverged: usize,
}

pub fn models(section: &Table2Section) -> Vec<Model> {
    vec![
        Model::bm(),
        Model::Heston(section.heston),
        Model::Sv2fLev(section.sv2f),
        Model::bmj(),
        Model::bmo(),
    ]
}

pub fn regimes(section: &Table2Section) -> Vec<(&'static str, NoiseSpec)> {
    vec![
        ("iid", NoiseSpec::iid(section.gamma)),
        ("ar1", NoiseSpec::ar1(section.gamma, section.beta)),
    ]
}

/// Cells of one model and noise regime. Every horizon is evaluated on the
/// same paths. A path whose truncation exceeds the iteration cap is left out
/// of that `BV*_tau` cell and counted in `diverged`.
pub fn model_cells(
    spec: &SimSpec,
    noise_label: &str,
    thetas: &[f64],
    base: &PreAvgConfig,
    paths: usize,
    exec: Exec,
) -> Result<Vec<Table2Cell>, Failure> {
    let per_path = simulate_map(spec, paths, exec, |_, p| {
        thetas
            .iter()
            .map(|&theta| {
                let cfg = PreAvgConfig { theta, ..*base };
                let iv = p.true_iv;
                let tau = match truncated_preavg_bv(&p.observed, &cfg) {
                    Ok(t) => Some(t.bv_star_tau / iv),
                    Err(PreAvgError::TruncationDiverged { .. }) => None,
                    Err(e) => return Err(e),
                };
                Ok([
                    Some(preavg_rv(&p.observed, &cfg)? / iv),
                    Some(preavg_bv(&p.observed, &cfg)? / iv),
                    tau,
                ])
            })
            .collect::<Result<Vec<[Option<f64>; 3]>, PreAvgError>>()
    })
    .compute_err(format!("simulating {}", spec.model.name()))?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .compute_err(format!("estimating on {} paths", spec.model.name()))?;
    let mut cells = Vec::new();
    for (t, &theta) in thetas.iter().enumerate() {
        for (e, name) in ESTIMATORS.iter().enumerate() {
            let xs: Vec<f64> = per_path.iter().filter_map(|v| v[t][e]).collect();
            cells.push(Table2Cell {
                noise: noise_label.to_string(),
                model: spec.model.name().to_string(),
                theta,
                estimator: name.to_string(),
                mean: mean(&xs),
                std_error: std_error(&xs),
                paths: xs.len(),
                diverged: paths - xs.len(),
            });
        }
    }
    Ok(cells)
}

/// The full model x horizon x noise grid. Model `m` of regime `r` uses seed `seed + 16 r + m`.
pub fn table2(
    section: &Table2Section,
    base: &PreAvgConfig,
    paths: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Table2Cell>, Failure> {
    if let Some(t) = section.thetas.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(Failure::input(format!(
            "theta grid values must be positive, got {t}"
        )));
    }
    let mut cells = Vec::new();
    for (r, (label, noise)) in regimes(section).into_iter().enumerate() {
        for (m, model) in models(section).into_iter().enumerate() {
            let spec = SimSpec::new(
                model,
                section.n,
                seed.wrapping_add(16 * r as u64 + m as u64),
            )
            .with_noise(noise);
            spec.validate().input_err("table2 settings")?;
            cells.extend(model_cells(
                &spec,
                label,
                &section.thetas,
                base,
                paths,
                exec,
            )?);
        }
    }
    Ok(cells)
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Vec<Table2Cell>, Failure> {
    let base = cfg.preavg.config();
    base.validate().input_err("preavg settings")?;
    let cells = table2(&cfg.table2, &base, cfg.table2.paths, cfg.seed, cfg.exec())?;
    ensure_dir(out)?;
    let csv = out.join("table2.csv");
    write_csv(&csv, &cells)?;
    let mut meta = vec![
        kv("command", "table2"),
        kv("normalization", "estimate / true_iv per path"),
    ];
    meta.extend(cfg.echo());
    write_meta(&meta_path(&csv), &meta)?;
    Ok(cells)
}

/// Cell lookup by `(noise, model, theta, estimator)`.
pub fn find<'a>(
    cells: &'a [Table2Cell],
    noise: &str,
    model: &str,
    theta: f64,
    estimator: &str,
) -> Option<&'a Table2Cell> {
    cells.iter().find(|c| {
        c.noise == noise
            && c.model == model
            && (c.theta - theta).abs() < 1e-12
            && c.estimator == estimator
    })
}
