//! TOML run configuration. Every field has a default, so an empty file (or
//! no file) is valid; command-line flags override the file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use jumpvar_core::jumpdetect::{LmConfig, MaxgapConfig};
use jumpvar_core::marketdata::{Millis, SessionWindow, TickSchema};
use jumpvar_core::preavg::PreAvgConfig;
use jumpvar_core::simlab::{HestonParams, Model, Rounding, Sv2fParams};
use jumpvar_core::Exec;
use serde::{Deserialize, Serialize};

use crate::error::{Failure, ResultExt};

/// A sampling frequency: every tick, or previous-tick sampling on a clock grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frequency {
    Tick,
    Grid(Millis),
}

impl FromStr for Frequency {
    type Err = String;

    /// `tick`, or a positive count with unit `s`, `m` or `h` (`5m`, `30s`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("tick") {
            return Ok(Frequency::Tick);
        }
        let split = s
            .find(|c: char| !c.is_ascii_digit())
            .ok_or_else(|| format!("frequency `{s}` lacks a unit"))?;
        let (num, unit) = s.split_at(split);
        let n: i64 = num.parse().map_err(|_| format!("bad frequency `{s}`"))?;
        let ms = match unit {
            "s" => Millis::SECOND.0,
            "m" | "min" => Millis::MINUTE.0,
            "h" => 60 * Millis::MINUTE.0,
            _ => return Err(format!("unknown frequency unit in `{s}`")),
        };
        if n <= 0 {
            return Err(format!("frequency `{s}` must be positive"));
        }
        Ok(Frequency::Grid(Millis(n * ms)))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Tick => write!(f, "tick"),
            Frequency::Grid(m) if m.0 % 3_600_000 == 0 => write!(f, "{}h", m.0 / 3_600_000),
            Frequency::Grid(m) if m.0 % 60_000 == 0 => write!(f, "{}m", m.0 / 60_000),
            Frequency::Grid(m) => write!(f, "{}s", m.0 as f64 / 1000.0),
        }
    }
}

pub fn parse_frequencies(items: &[String]) -> Result<Vec<Frequency>, Failure> {
    items
        .iter()
        .map(|s| s.parse().map_err(Failure::input))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreAvgSection {
    pub theta: f64,
    pub alpha: f64,
    pub varpi: f64,
    pub max_iterations: usize,
}

impl Default for PreAvgSection {
    fn default() -> Self {
        let d = PreAvgConfig::default();
        Self {
            theta: d.theta,
            alpha: d.alpha,
            varpi: d.varpi,
            max_iterations: d.max_iterations,
        }
    }
}

impl PreAvgSection {
    pub fn config(&self) -> PreAvgConfig {
        PreAvgConfig {
            theta: self.theta,
            alpha: self.alpha,
            varpi: self.varpi,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Session bounds as `HH:MM[:SS]` clock times from the day origin.
    pub session_start: String,
    pub session_end: String,
    pub timezone: String,
    /// Collapse records sharing a millisecond before estimation.
    pub aggregate_ms: bool,
    pub schema: TickSchema,
}

impl Default for DataSection {
    fn default() -> Self {
        let s = SessionWindow::us_equity();
        Self {
            session_start: s.start.to_string(),
            session_end: s.end.to_string(),
            timezone: s.tz,
            aggregate_ms: true,
            schema: TickSchema::default(),
        }
    }
}

impl DataSection {
    pub fn session(&self) -> Result<SessionWindow, Failure> {
        SessionWindow::parse(
            &self.session_start,
            &self.session_end,
            self.timezone.clone(),
        )
        .input_err("session window")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    pub frequencies: Vec<String>,
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self {
            frequencies: vec!["tick".into(), "5m".into(), "15m".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub model: Model,
    pub n: usize,
    pub paths: usize,
    pub gamma: f64,
    pub beta: f64,
    pub rounding: Option<Rounding>,
    /// Sampling times `(i/N)^power`; regular when absent.
    pub sampling_power: Option<f64>,
    /// Price level of the emitted tick files.
    pub level: f64,
    /// Euler steps per return for the stochastic-volatility models.
    pub substeps: usize,
    /// Days per synthetic instrument. Above 1, consecutive paths become the
    /// days of one instrument directory so jump scans carry history.
    pub days: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            model: Model::bm(),
            n: 40_000,
            paths: 1,
            gamma: 0.5,
            beta: 0.0,
            rounding: None,
            sampling_power: None,
            level: 50.0,
            substeps: 1,
            days: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table2Section {
    pub paths: usize,
    pub n: usize,
    pub thetas: Vec<f64>,
    pub gamma: f64,
    /// AR(1) coefficient of the dependent-noise panel.
    pub beta: f64,
    /// Calibration defaults, user-overridable.
    pub heston: HestonParams,
    pub sv2f: Sv2fParams,
}

impl Default for Table2Section {
    fn default() -> Self {
        Self {
            paths: 10_000,
            n: 40_000,
            thetas: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            gamma: 0.5,
            beta: 0.77,
            heston: HestonParams::default(),
            sv2f: Sv2fParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignatureSection {
    pub thetas: Vec<f64>,
    pub paths: usize,
    /// Ticks per simulated day.
    pub n: usize,
    /// Samples per day for the JV signature; must divide `n`.
    pub samples: Vec<usize>,
    pub gamma: f64,
    pub rounding: Rounding,
}

impl Default for SignatureSection {
    fn default() -> Self {
        Self {
            thetas: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0],
            paths: 1_000,
            n: 16_384,
            samples: (4..=14).rev().map(|p| 1usize << p).collect(),
            gamma: 0.5,
            rounding: Rounding::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpscanSection {
    pub frequency: String,
    pub significance: f64,
    /// Local window of the coarse test; `ceil(sqrt(252 n_day))` when absent.
    pub m: Option<usize>,
    /// Local window of the pre-averaged test, in non-overlapping returns.
    pub m_star: Option<usize>,
    pub delta: usize,
}

impl Default for JumpscanSection {
    fn default() -> Self {
        Self {
            frequency: "5m".into(),
            significance: 0.01,
            m: None,
            m_star: None,
            delta: MaxgapConfig::default().delta,
        }
    }
}

impl JumpscanSection {
    pub fn lm_config(&self, n_day: usize, m: Option<usize>) -> Result<LmConfig, Failure> {
        let m = m.unwrap_or_else(|| LmConfig::for_daily_count(n_day).m);
        LmConfig::new(m, self.significance).input_err("jumpscan settings")
    }

    pub fn maxgap(&self) -> MaxgapConfig {
        MaxgapConfig { delta: self.delta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    pub jobs: usize,
    pub preavg: PreAvgSection,
    pub data: DataSection,
    pub estimate: EstimateSection,
    pub simulate: SimulateSection,
    pub table2: Table2Section,
    pub signature: SignatureSection,
    pub jumpscan: JumpscanSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            jobs: 0,
            preavg: PreAvgSection::default(),
            data: DataSection::default(),
            estimate: EstimateSection::default(),
            simulate: SimulateSection::default(),
            table2: Table2Section::default(),
            signature: SignatureSection::default(),
            jumpscan: JumpscanSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).input_err("config")
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .input_err(format!("reading config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn exec(&self) -> Exec {
        Exec::from_jobs(self.jobs)
    }

    /// `section.key = value` lines for metadata sidecars.
    pub fn echo(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).unwrap_or(toml::Value::Table(Default::default()));
        let mut out = Vec::new();
        flatten("", &value, &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        toml::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_parse() {
        assert_eq!("tick".parse::<Frequency>().unwrap(), Frequency::Tick);
        assert_eq!(
            "5m".parse::<Frequency>().unwrap(),
            Frequency::Grid(Millis(300_000))
        );
        assert_eq!("30s".parse::<Frequency>().unwrap().to_string(), "30s");
        assert_eq!("15m".parse::<Frequency>().unwrap().to_string(), "15m");
        assert!("5".parse::<Frequency>().is_err());
        assert!("0m".parse::<Frequency>().is_err());
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/jumpvar.toml");
        assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override() {
        let cfg = RunConfig::from_toml(
            "seed = 7\n[preavg]\ntheta = 0.5\n[simulate.model]\nmodel = \"bmj\"\n[table2.heston]\nkappa = 2.0\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.preavg.theta, 0.5);
        assert_eq!(cfg.simulate.model, Model::bmj());
        assert_eq!(cfg.table2.heston.kappa, 2.0);
        assert!(RunConfig::from_toml("[preavg]\nthetta = 1").is_err());
    }

    #[test]
    fn echo_is_flat() {
        let echo = RunConfig::default().echo();
        assert!(echo.iter().any(|(k, v)| k == "preavg.theta" && v == "1.0"));
        assert!(echo.iter().any(|(k, _)| k == "simulate.model.model"));
    }
}
