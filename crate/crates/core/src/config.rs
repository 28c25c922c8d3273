//! Run configuration and the `key = value` config file format.
//!
//! Durations accept `us`/`μs`, `ms` or `s` suffixes; a bare number is
//! microseconds. Lists are comma separated, or an inclusive integer range
//! written `2..=20`.

use std::fmt;
use std::path::PathBuf;

use crate::model::SystemParams;

pub const DEFAULT_CYCLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Simulate,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    /// Second-hop mean SNRs to run. Sweep mode defaults to 2, 3, ..., 20;
    /// the other modes default to `params.mean_snr_hop2`.
    pub sweep: Vec<f64>,
    pub cycles: u64,
    pub seed: u64,
    /// Fixed-point tolerance; `None` means `1e-9 * coherence`.
    pub tol: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub mode: Mode,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        let params = SystemParams::default();
        Self {
            params,
            sweep: default_sweep(mode, &params),
            cycles: DEFAULT_CYCLES,
            seed: DEFAULT_SEED,
            tol: None,
            output_path: None,
            mode,
        }
    }

    pub fn gap_tolerance(&self) -> f64 {
        self.tol.unwrap_or(1e-9 * self.params.coherence)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError::new(0, e.to_string()))?;
        if self.sweep.is_empty() {
            return Err(ConfigError::new(0, "rho_g list is empty"));
        }
        if let Some(bad) = self.sweep.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(ConfigError::new(0, format!("rho_g must be > 0, got {bad}")));
        }
        if matches!(self.mode, Mode::Simulate | Mode::Sweep | Mode::Verify)
            && self.cycles < crate::sim::MIN_CYCLES
        {
            return Err(ConfigError::new(
                0,
                format!("cycles must be at least {}", crate::sim::MIN_CYCLES),
            ));
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                return Err(ConfigError::new(0, format!("tol must be > 0, got {t}")));
            }
        }
        Ok(())
    }
}

pub fn default_sweep(mode: Mode, params: &SystemParams) -> Vec<f64> {
    match mode {
        Mode::Sweep => (2..=20).map(f64::from).collect(),
        _ => vec![params.mean_snr_hop2],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line, or 0 when not tied to a line.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Settings read from a config file; unset keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileSettings {
    pub params: Option<SystemParams>,
    pub sweep: Option<Vec<f64>>,
    pub cycles: Option<u64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<FileSettings, ConfigError> {
    let mut params = SystemParams::default();
    let mut touched_params = false;
    let mut out = FileSettings::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let err = |m: String| ConfigError::new(line_no, m);
        let mut set_param = |f: &mut dyn FnMut(&mut SystemParams)| {
            f(&mut params);
            touched_params = true;
        };
        match key {
            "num_sources" | "M" => {
                let v = parse_int(value).map_err(err)?;
                let v = u32::try_from(v).map_err(|_| ConfigError::new(line_no, "num_sources too large"))?;
                set_param(&mut |p| p.num_sources = v);
            }
            "tx_prob" | "p" => {
                let v = parse_real(value).map_err(err)?;
                set_param(&mut |p| p.tx_prob = v);
            }
            "minislot" | "sigma" => {
                let v = parse_duration(value).map_err(err)?;
                set_param(&mut |p| p.minislot = v);
            }
            "rts" => {
                let v = parse_duration(value).map_err(err)?;
                set_param(&mut |p| p.rts = v);
            }
            "cts" => {
                let v = parse_duration(value).map_err(err)?;
                set_param(&mut |p| p.cts = v);
            }
            "timeout" => {
                let v = parse_duration(value).map_err(err)?;
                set_param(&mut |p| p.timeout = v);
            }
            "coherence" | "tau_d" => {
                let v = parse_duration(value).map_err(err)?;
                set_param(&mut |p| p.coherence = v);
            }
            "mean_snr_hop1" | "rho_f" => {
                let v = parse_real(value).map_err(err)?;
                set_param(&mut |p| p.mean_snr_hop1 = v);
            }
            "mean_snr_hop2" | "rho_g" => {
                let v = parse_real(value).map_err(err)?;
                set_param(&mut |p| p.mean_snr_hop2 = v);
            }
            "sweep" => out.sweep = Some(parse_list(value).map_err(err)?),
            "cycles" => out.cycles = Some(parse_int(value).map_err(err)?),
            "seed" => out.seed = Some(parse_int(value).map_err(err)?),
            "tol" => out.tol = Some(parse_real(value).map_err(err)?),
            other => return Err(ConfigError::new(line_no, format!("unknown key `{other}`"))),
        }
    }
    if touched_params {
        out.params = Some(params);
    }
    Ok(out)
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: `{s}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: `{s}`"))
    }
}

pub fn parse_int(s: &str) -> Result<u64, String> {
    let t = s.trim().replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    // allow 1e6 style integers
    let v = parse_real(&t)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("not a nonnegative integer: `{s}`"))
    }
}

/// Parses a duration into seconds; a bare number is microseconds.
pub fn parse_duration(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("us").or_else(|| t.strip_suffix("μs")) {
        (n, 1e-6)
    } else if let Some(n) = t.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = t.strip_suffix('s') {
        (n, 1.0)
    } else {
        (t, 1e-6)
    };
    Ok(parse_real(num)? * scale)
}

/// Comma-separated reals, or an inclusive integer range `a..=b`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once("..=") {
        let (a, b) = (parse_int(a)?, parse_int(b)?);
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        return Ok((a..=b).map(|v| v as f64).collect());
    }
    t.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(parse_real)
        .collect()
}
