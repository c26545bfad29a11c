//! Flat `key = value` experiment configuration.
//!
//! Every count that can be swept (`ns`, `nrs`, `k`, `r`) and the SNR grid take
//! comma-separated lists; the sweep runs their Cartesian product. Unknown keys
//! are rejected.

use std::fmt;
use std::path::Path;

use thiserror::Error;
use twr_core::had_relay::AltMaxOptions;
use twr_core::terminal::WaterFillRule;
use twr_core::trial::{Method, TrialConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}:{line}: {msg}")]
    Syntax { origin: String, line: usize, msg: String },
    #[error("{origin}:{line}: unknown key `{key}`")]
    UnknownKey { origin: String, line: usize, key: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown preset `{0}` (expected fig1a, fig1b, fig2a or fig2b)")]
    UnknownPreset(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One point of the sweep grid, fixed across SNR values and methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub ns: usize,
    pub nrs: usize,
    pub k: usize,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m_rs: usize,
    pub m1: usize,
    pub m2: usize,
    pub paths: usize,
    pub delay_taps: usize,
    pub ns: Vec<usize>,
    pub nrs: Vec<usize>,
    pub k: Vec<usize>,
    pub r: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    pub p_rs: f64,
    pub p_ue: f64,
    pub half_prelog: bool,
    pub literal_waterfill: bool,
    pub altmax_deflation: bool,
    pub outer_refine: bool,
    pub altmax_tol: f64,
    pub altmax_max_iter: usize,
    pub norm_passes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let base = TrialConfig::default();
        let altmax = AltMaxOptions::default();
        Self {
            m_rs: base.relay_antennas,
            m1: base.ms_antennas[0],
            m2: base.ms_antennas[1],
            paths: base.paths,
            delay_taps: base.delay_taps,
            ns: vec![base.streams],
            nrs: vec![base.rf_chains],
            k: vec![base.subcarriers],
            r: vec![base.r],
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            methods: ["anomax", "rr", "err", "had_hosvd", "had_altmax"].iter().map(|t| t.parse().unwrap()).collect(),
            trials: 200,
            seed: 0,
            p_rs: base.p_rs,
            p_ue: base.p_ue,
            half_prelog: base.half_prelog,
            literal_waterfill: base.waterfill == WaterFillRule::Literal,
            altmax_deflation: altmax.deflation,
            outer_refine: altmax.outer_refine,
            altmax_tol: altmax.tol,
            altmax_max_iter: altmax.max_iter,
            norm_passes: base.norm_passes,
        }
    }
}

const PRESETS: [(&str, &str); 4] = [
    (
        "fig1a",
        "m_rs = 16\nk = 1\nns = 1, 2, 4\nr = 2\nsnr_db = 0, 5, 10, 15, 20, 25, 30\nmethods = anomax, rr, err\n",
    ),
    ("fig1b", "m_rs = 16\nk = 1\nns = 4\nr = 1, 2, 3, 4, 5, 6\nsnr_db = 25\nmethods = err\n"),
    (
        "fig2a",
        "m_rs = 16\nk = 32\nns = 4\nnrs = 8\nr = 2\nsnr_db = 0, 5, 10, 15, 20, 25, 30\n\
         methods = rr, err, rr_had_hosvd, rr_had_altmax, had_hosvd, had_altmax\n",
    ),
    (
        "fig2b",
        "m_rs = 16\nk = 32, 64\nns = 4\nnrs = 4, 8\nr = 2\nsnr_db = 0, 5, 10, 15, 20, 25, 30\n\
         methods = err, had_hosvd, had_altmax\n",
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", s.trim())))
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("`{value}`: {e}"))
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        let mut cfg = Self::default();
        cfg.apply_str(text, &format!("preset {name}"))?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        self.apply_str(&text, &path.display().to_string())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: String| ConfigError::Syntax { origin: origin.to_string(), line: idx + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match self.set(key, value) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ConfigError::UnknownKey { origin: origin.to_string(), line: idx + 1, key: key.to_string() })
                }
                Err(msg) => return Err(syntax(format!("{key}: {msg}"))),
            }
        }
        Ok(())
    }

    /// Returns `Ok(false)` for an unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "m_rs" => self.m_rs = parse_one(value)?,
            "m1" => self.m1 = parse_one(value)?,
            "m2" => self.m2 = parse_one(value)?,
            "l" => self.paths = parse_one(value)?,
            "d" => self.delay_taps = parse_one(value)?,
            "ns" => self.ns = parse_list(value)?,
            "nrs" => self.nrs = parse_list(value)?,
            "k" => self.k = parse_list(value)?,
            "r" => self.r = parse_list(value)?,
            "snr_db" => self.snr_db = parse_list(value)?,
            "methods" => self.methods = parse_list(value)?,
            "trials" => self.trials = parse_one(value)?,
            "seed" => self.seed = parse_one(value)?,
            "p_rs" => self.p_rs = parse_one(value)?,
            "p_ue" => self.p_ue = parse_one(value)?,
            "half_prelog" => self.half_prelog = parse_one(value)?,
            "literal_waterfill" => self.literal_waterfill = parse_one(value)?,
            "altmax_deflation" => self.altmax_deflation = parse_one(value)?,
            "outer_refine" => self.outer_refine = parse_one(value)?,
            "altmax_tol" => self.altmax_tol = parse_one(value)?,
            "altmax_max_iter" => self.altmax_max_iter = parse_one(value)?,
            "norm_passes" => self.norm_passes = parse_one(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &ns in &self.ns {
            for &nrs in &self.nrs {
                for &k in &self.k {
                    for &r in &self.r {
                        out.push(GridPoint { ns, nrs, k, r });
                    }
                }
            }
        }
        out
    }

    pub fn trial_config(&self, p: GridPoint) -> TrialConfig {
        TrialConfig {
            relay_antennas: self.m_rs,
            ms_antennas: [self.m1, self.m2],
            subcarriers: p.k,
            streams: p.ns,
            rf_chains: p.nrs,
            paths: self.paths,
            delay_taps: self.delay_taps,
            r: p.r,
            p_rs: self.p_rs,
            p_ue: self.p_ue,
            half_prelog: self.half_prelog,
            waterfill: if self.literal_waterfill { WaterFillRule::Literal } else { WaterFillRule::Capacity },
            altmax: AltMaxOptions {
                tol: self.altmax_tol,
                max_iter: self.altmax_max_iter,
                deflation: self.altmax_deflation,
                outer_refine: self.outer_refine,
                ..AltMaxOptions::default()
            },
            norm_passes: self.norm_passes,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, reason: String| ConfigError::Invalid { field: field.to_string(), reason };
        for (field, empty) in [
            ("ns", self.ns.is_empty()),
            ("nrs", self.nrs.is_empty()),
            ("k", self.k.is_empty()),
            ("r", self.r.is_empty()),
            ("snr_db", self.snr_db.is_empty()),
            ("methods", self.methods.is_empty()),
        ] {
            if empty {
                return Err(invalid(field, "list is empty".into()));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1".into()));
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(invalid("snr_db", format!("{s} is not finite")));
        }
        if !(self.altmax_tol >= 0.0) {
            return Err(invalid("altmax_tol", format!("must be non-negative, got {}", self.altmax_tol)));
        }
        if self.altmax_max_iter == 0 {
            return Err(invalid("altmax_max_iter", "must be at least 1".into()));
        }
        let max_r = 2 * self.m1 * self.m2;
        if let Some(r) = self.r.iter().find(|&&r| r > max_r) {
            return Err(invalid("r", format!("{r} exceeds 2*m1*m2 = {max_r}")));
        }
        for p in self.points() {
            if let Err(e) = self.trial_config(p).validate() {
                return Err(match e {
                    twr_core::Error::InvalidParameter { name, reason } => invalid(name, reason),
                    other => invalid("config", other.to_string()),
                });
            }
        }
        Ok(())
    }
}
