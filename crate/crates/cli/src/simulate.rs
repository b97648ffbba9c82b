//! `simulate`: write synthetic paths and matching tick files.

use std::path::{Path, PathBuf};

use jumpvar_core::marketdata::{write_ticks, SessionWindow, TickSchema, TickSeries};
use jumpvar_core::simlab::{simulate, NoiseSpec, Sampling, SimPath, SimSpec};

use crate::config::RunConfig;
use crate::error::{Failure, ResultExt};
use crate::output::{ensure_dir, kv, meta_path, write_meta, write_table};

pub fn spec(cfg: &RunConfig) -> SimSpec {
    let s = &cfg.simulate;
    SimSpec {
        model: s.model,
        n: s.n,
        noise: NoiseSpec::ar1(s.gamma, s.beta),
        rounding: s.rounding,
        sampling: s
            .sampling_power
            .map_or(Sampling::Regular, |power| Sampling::Power { power }),
        seed: cfg.seed,
        noise_seed: None,
        substeps: s.substeps,
    }
}

/// Tick series of a path over `session`: unit time maps onto the session
/// and the observed log price is shifted to start at `level`.
pub fn to_ticks(
    path: &SimPath,
    session: &SessionWindow,
    level: f64,
    id: &str,
) -> Result<TickSeries, Failure> {
    let span = session.duration().0 as f64;
    let ts = path
        .times
        .iter()
        .map(|t| session.start.0 + (t * span).round() as i64)
        .collect();
    let shift = level.ln() - path.efficient[0];
    let y = path.observed.iter().map(|y| y + shift).collect();
    TickSeries::from_log_prices(id, ts, y).compute_err("building tick series")
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn join_f(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn path_meta(path: &SimPath, spec: &SimSpec) -> Vec<(String, String)> {
    let mut meta = vec![
        kv("model", spec.model.name()),
        kv("n", spec.n),
        kv("true_iv", path.true_iv),
        kv("true_jv_sum", path.true_jv_sum),
        kv("omega2", path.omega2),
        kv("jump_indices", join(&path.jump_times)),
        kv("jump_sizes", join_f(&path.jump_sizes)),
        kv("outlier_indices", join(&path.outlier_times)),
        kv("outlier_sizes", join_f(&path.outlier_sizes)),
    ];
    if let Ok(toml::Value::Table(t)) = toml::Value::try_from(spec) {
        for (k, v) in t {
            meta.push((format!("spec.{k}"), v.to_string()));
        }
    }
    meta
}

/// Tick file of path `id`: `ticks/sim_XXXX.csv`, or `ticks/sim_XXX/day_YYYY.csv`
/// when instruments span several days.
fn tick_file(tick_dir: &Path, id: usize, days: usize) -> Result<PathBuf, Failure> {
    if days <= 1 {
        return Ok(tick_dir.join(format!("sim_{id:04}.csv")));
    }
    let dir = tick_dir.join(format!("sim_{:03}", id / days));
    ensure_dir(&dir)?;
    Ok(dir.join(format!("day_{:04}.csv", id % days)))
}

pub fn run(cfg: &RunConfig, out: &Path, paths: usize) -> Result<Vec<PathBuf>, Failure> {
    let spec = spec(cfg);
    spec.validate().input_err("simulation settings")?;
    if cfg.simulate.days == 0 {
        return Err(Failure::input("simulate.days must be at least 1"));
    }
    let session = cfg.data.session()?;
    ensure_dir(out)?;
    let tick_dir = out.join("ticks");
    ensure_dir(&tick_dir)?;
    let header: Vec<String> = ["index", "time", "efficient", "observed", "spot_variance"]
        .map(String::from)
        .to_vec();
    let mut written = Vec::new();
    for id in 0..paths {
        let p = simulate(&spec, id as u64).compute_err(format!("simulating path {id}"))?;
        let name = format!("sim_{id:04}");
        let rows: Vec<Vec<String>> = (0..p.efficient.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    p.times[i].to_string(),
                    p.efficient[i].to_string(),
                    p.observed[i].to_string(),
                    p.spot_variance[i].to_string(),
                ]
            })
            .collect();
        let csv = out.join(format!("{name}.csv"));
        write_table(&csv, &header, &rows)?;
        let mut meta = vec![kv("command", "simulate"), kv("path_id", id)];
        meta.extend(path_meta(&p, &spec));
        write_meta(&meta_path(&csv), &meta)?;
        let ticks = to_ticks(&p, &session, cfg.simulate.level, &name)?;
        let tick_file = tick_file(&tick_dir, id, cfg.simulate.days)?;
        let f = std::fs::File::create(&tick_file)
            .input_err(format!("creating {}", tick_file.display()))?;
        write_ticks(&ticks, std::io::BufWriter::new(f), &TickSchema::default())
            .input_err(tick_file.display())?;
        written.extend([csv, tick_file]);
    }
    Ok(written)
}
