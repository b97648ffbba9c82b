//! `jumpscan`: Lee–Mykland tests on the coarse grid and on pre-averaged
//! ticks, with the maxgap of each coarse jump interval.

use std::path::{Path, PathBuf};

use jumpvar_core::jumpdetect::{
    attach_maxgap, grid_returns, lm_scan_returns, preavg_lm_scan, preavg_nonoverlapping, JumpError,
    JumpEvent, LmScan,
};
use jumpvar_core::marketdata::{Millis, SessionWindow, TickSeries};
use jumpvar_core::preavg::PreAvgConfig;
use jumpvar_core::stats::ols;
use serde::Serialize;

use crate::config::{Frequency, JumpscanSection, RunConfig};
use crate::error::{Failure, ResultExt};
use crate::inputs::{collect_inputs, load_day, stem, Instrument};
use crate::output::{ensure_dir, kv, meta_path, write_csv, write_meta};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EventRow {
    pub instrument: String,
    pub day: String,
    /// `lm` on the coarse grid or `lm_star` on pre-averaged ticks.
    pub test: String,
    pub interval_index: usize,
    pub timestamp_ms: Option<i64>,
    pub clock: Option<String>,
    pub statistic: f64,
    pub size: f64,
    pub maxgap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SummaryRow {
    pub instrument: String,
    pub days: usize,
    pub statistics: usize,
    pub j_count: usize,
    pub j_avg: f64,
    pub j_max: f64,
    pub jv: f64,
    pub statistics_star: usize,
    pub j_star_count: usize,
    pub j_star_avg: f64,
    pub j_star_max: f64,
    pub jv_star: f64,
    pub g_avg: f64,
    pub g_max: f64,
    /// OLS slope of maxgap on coarse jump size; NaN with fewer than two pairs.
    pub g_on_j_slope: f64,
}

/// Scans of one day given the history carried from earlier days.
pub struct DayScan {
    pub coarse: LmScan,
    pub star: LmScan,
}

/// Rolling per-instrument history of both tests.
#[derive(Debug, Default)]
pub struct History {
    pub coarse: Vec<f64>,
    pub star: Vec<f64>,
}

fn keep_tail(v: &mut Vec<f64>, n: usize) {
    if v.len() > n {
        v.drain(..v.len() - n);
    }
}

/// Empty scan for a day whose local window cannot be filled yet.
fn not_enough(e: JumpError) -> Result<LmScan, JumpError> {
    match e {
        JumpError::NotEnoughData { .. } => Ok(LmScan {
            events: vec![],
            n_statistics: 0,
            threshold: f64::NAN,
            variation: 0.0,
        }),
        e => Err(e),
    }
}

pub fn scan_day(
    series: &TickSeries,
    session: &SessionWindow,
    grid: Millis,
    js: &JumpscanSection,
    pcfg: &PreAvgConfig,
    history: &mut History,
) -> Result<DayScan, Failure> {
    let day = grid_returns(series, session, grid).compute_err("grid returns")?;
    let cfg = js.lm_config(day.len(), js.m)?;
    let mut coarse = lm_scan_returns(&history.coarse, &day, &cfg)
        .or_else(not_enough)
        .compute_err("coarse scan")?;
    for e in &mut coarse.events {
        e.timestamp = Some(Millis(
            session.start.0 + grid.0 * (e.interval_index as i64 + 1),
        ));
    }
    attach_maxgap(&mut coarse, series, grid, &js.maxgap());
    history.coarse.extend(&day);
    keep_tail(&mut history.coarse, cfg.m);

    let y = series.log_prices();
    let z = if y.len() >= 3 {
        preavg_nonoverlapping(y, pcfg.window(y.len() - 1)).compute_err("pre-averaging")?
    } else {
        Vec::new()
    };
    let cfg_star = js.lm_config(z.len(), js.m_star)?;
    let star = preavg_lm_scan(series, &history.star, pcfg, &cfg_star)
        .or_else(not_enough)
        .compute_err("pre-averaged scan")?;
    history.star.extend(&z);
    keep_tail(&mut history.star, cfg_star.m);
    Ok(DayScan { coarse, star })
}

fn event_row(instrument: &str, day: &str, test: &str, e: &JumpEvent) -> EventRow {
    EventRow {
        instrument: instrument.to_string(),
        day: day.to_string(),
        test: test.to_string(),
        interval_index: e.interval_index,
        timestamp_ms: e.timestamp.map(|t| t.0),
        clock: e.timestamp.map(|t| t.to_string()),
        statistic: e.statistic,
        size: e.size,
        maxgap: e.maxgap,
    }
}

fn abs_stats(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let avg = xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64;
    (avg, xs.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

pub fn scan_instrument(
    ins: &Instrument,
    cfg: &RunConfig,
    session: &SessionWindow,
    grid: Millis,
) -> Result<(SummaryRow, Vec<EventRow>), Failure> {
    let pcfg = cfg.preavg.config();
    let mut history = History::default();
    let mut events = Vec::new();
    let (mut stats, mut stats_star) = (0, 0);
    let (mut var, mut var_star) = (0.0, 0.0);
    let (mut j, mut j_star, mut pairs) = (vec![], vec![], vec![]);
    for path in &ins.days {
        let day = stem(path);
        let series = load_day(path, &cfg.data, session)?;
        let scan = scan_day(&series, session, grid, &cfg.jumpscan, &pcfg, &mut history)
            .map_err(|e| Failure::Compute(anyhow::anyhow!("{}: {e}", path.display())))?;
        stats += scan.coarse.n_statistics;
        stats_star += scan.star.n_statistics;
        var += scan.coarse.variation;
        var_star += scan.star.variation.max(0.0);
        for e in &scan.coarse.events {
            events.push(event_row(&ins.id, &day, "lm", e));
            j.push(e.size);
            if let Some(g) = e.maxgap {
                pairs.push((e.size, g));
            }
        }
        for e in &scan.star.events {
            events.push(event_row(&ins.id, &day, "lm_star", e));
            j_star.push(e.size);
        }
    }
    let sq = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>();
    let (j_avg, j_max) = abs_stats(&j);
    let (js_avg, js_max) = abs_stats(&j_star);
    let gs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (g_avg, g_max) = abs_stats(&gs);
    let slope = if pairs.len() >= 2 {
        ols(&pairs.iter().map(|p| p.0).collect::<Vec<_>>(), &gs).0
    } else {
        f64::NAN
    };
    let summary = SummaryRow {
        instrument: ins.id.clone(),
        days: ins.days.len(),
        statistics: stats,
        j_count: j.len(),
        j_avg,
        j_max,
        jv: if var > 0.0 { sq(&j) / var } else { 0.0 },
        statistics_star: stats_star,
        j_star_count: j_star.len(),
        j_star_avg: js_avg,
        j_star_max: js_max,
        jv_star: if var_star > 0.0 {
            sq(&j_star) / var_star
        } else {
            0.0
        },
        g_avg,
        g_max,
        g_on_j_slope: slope,
    };
    Ok((summary, events))
}

pub struct JumpscanOutput {
    pub summary: Vec<SummaryRow>,
    pub events: Vec<EventRow>,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &RunConfig, input: &Path, out: &Path) -> Result<JumpscanOutput, Failure> {
    let grid = match cfg
        .jumpscan
        .frequency
        .parse::<Frequency>()
        .map_err(Failure::input)?
    {
        Frequency::Grid(g) => g,
        Frequency::Tick => {
            return Err(Failure::input(
                "jumpscan needs a clock grid frequency such as 5m",
            ))
        }
    };
    let session = cfg.data.session()?;
    cfg.preavg
        .config()
        .validate()
        .input_err("preavg settings")?;
    let instruments = collect_inputs(input)?;
    let results = cfg.exec().try_map(instruments.len(), |i| {
        scan_instrument(&instruments[i], cfg, &session, grid)
    })?;
    let (summary, events): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let events: Vec<EventRow> = events.into_iter().flatten().collect();
    ensure_dir(out)?;
    let sum = out.join("jumpscan_summary.csv");
    let ev = out.join("jumpscan_events.csv");
    write_csv(&sum, &summary)?;
    write_csv(&ev, &events)?;
    let mut meta = vec![
        kv("command", "jumpscan"),
        kv("input", input.display()),
        kv("grid_ms", grid.0),
    ];
    meta.extend(cfg.echo());
    write_meta(&meta_path(&sum), &meta)?;
    Ok(JumpscanOutput {
        summary,
        events,
        files: vec![sum, ev],
    })
}
