//! `key = value` simulation config.
//!
//! ```text
//! # 16-QCI with the low-complexity demapper
//! constellation = qci
//! order = 16
//! demapper = qci_lcd
//! mode = gmi
//! psnr = 8:16:0.25
//! seed = 7
//! ```
//!
//! `constellation = qci16` is accepted as shorthand for family plus order.
//! Unknown keys are errors.

use std::path::PathBuf;
use std::str::FromStr;

use crate::demapper::DemapperKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Pam,
    Qam,
    Qci,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    UncodedBer,
    CodedBer,
    Gmi,
    Scatter,
    Complexity,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::UncodedBer => "uncoded_ber",
            Mode::CodedBer => "coded_ber",
            Mode::Gmi => "gmi",
            Mode::Scatter => "scatter",
            Mode::Complexity => "complexity",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Mode::UncodedBer, Mode::CodedBer, Mode::Gmi, Mode::Scatter, Mode::Complexity]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// Inclusive PSNR grid in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::Config("sweep bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::Config(format!("sweep step must be positive, got {step}")));
        }
        if start > stop {
            return Err(Error::Config(format!("sweep start {start} exceeds stop {stop}")));
        }
        Ok(Sweep { start, stop, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Sweep {
    type Err = Error;
    /// `start:stop:step`, or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad PSNR sweep `{s}`")))
            })
            .collect::<Result<_>>()?;
        match parts[..] {
            [a] => Sweep::new(a, a, 1.0),
            [a, b, c] => Sweep::new(a, b, c),
            _ => Err(Error::Config(format!("PSNR sweep must be start:stop:step, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub family: Family,
    /// Constellation size; 0 for file-loaded constellations.
    pub order: usize,
    pub demapper: DemapperKind,
    pub sweep: Sweep,
    pub mode: Mode,
    pub code_file: Option<PathBuf>,
    /// Symbols per point for GMI/scatter/complexity modes.
    pub samples: usize,
    /// Bit errors (uncoded) or frame errors (coded) to collect per point.
    pub target_errors: u64,
    /// Bits (uncoded) or frames (coded) cap per point.
    pub max_trials: u64,
    pub max_iters: usize,
    pub compensation_samples: usize,
    pub seed: u64,
    /// 0 selects the number of available CPUs.
    pub workers: usize,
    pub output: Option<PathBuf>,
}

pub const KEYS: [&str; 15] = [
    "constellation",
    "order",
    "constellation_file",
    "demapper",
    "mode",
    "psnr",
    "code_file",
    "samples",
    "target_errors",
    "max_trials",
    "max_iters",
    "compensation_samples",
    "seed",
    "workers",
    "output",
];

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.replace('_', "")
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Builds a config from file text (optional) and overriding `key, value` flags.
pub fn parse_config(text: Option<&str>, overrides: &[(String, String)]) -> Result<SimConfig> {
    let mut pairs = match text {
        Some(t) => parse_pairs(t)?,
        None => Vec::new(),
    };
    pairs.extend(overrides.iter().cloned());

    let mut values: std::collections::HashMap<&str, String> = Default::default();
    for (k, v) in &pairs {
        let key = KEYS
            .iter()
            .find(|&&known| known == k)
            .ok_or_else(|| Error::Config(format!("unknown key `{k}`")))?;
        values.insert(key, v.clone());
    }
    let get = |k: &str| values.get(k).map(String::as_str);
    let require = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing required key `{k}`")));

    let cons = require("constellation")?;
    let digits = cons.trim_start_matches(|c: char| c.is_ascii_alphabetic());
    let name = &cons[..cons.len() - digits.len()];
    let family = match name {
        "pam" => Family::Pam,
        "qam" => Family::Qam,
        "qci" => Family::Qci,
        "file" => Family::File(PathBuf::from(require("constellation_file")?)),
        _ => return Err(Error::Config(format!("unknown constellation family `{cons}`"))),
    };
    let order = match (&family, digits, get("order")) {
        (Family::File(_), _, _) => 0,
        (_, "", Some(o)) => parse_num("order", o)?,
        (_, "", None) => return Err(Error::Config("missing required key `order`".into())),
        (_, d, _) => parse_num("constellation", d)?,
    };
    if !matches!(family, Family::File(_)) && get("constellation_file").is_some() {
        return Err(Error::Config("`constellation_file` requires `constellation = file`".into()));
    }

    let mode: Mode = require("mode")?.parse()?;
    let sweep: Sweep = require("psnr")?.parse()?;
    let demapper = get("demapper").map(str::parse).transpose()?.unwrap_or(DemapperKind::Exact2d);
    let (def_errors, def_trials) = match mode {
        Mode::CodedBer => (50, 10_000),
        _ => (100, 10_000_000),
    };
    let opt = |k: &str| get(k).map(|v| parse_num::<u64>(k, v)).transpose();
    let workers = match get("workers") {
        None | Some("auto") => 0,
        Some(v) => parse_num("workers", v)?,
    };
    let cfg = SimConfig {
        family,
        order,
        demapper,
        sweep,
        mode,
        code_file: get("code_file").map(PathBuf::from),
        samples: opt("samples")?.unwrap_or(1_000_000) as usize,
        target_errors: opt("target_errors")?.unwrap_or(def_errors),
        max_trials: opt("max_trials")?.unwrap_or(def_trials),
        max_iters: opt("max_iters")?.unwrap_or(50) as usize,
        compensation_samples: opt("compensation_samples")?.unwrap_or(100_000) as usize,
        seed: opt("seed")?.unwrap_or(1),
        workers,
        output: get("output").map(PathBuf::from),
    };
    if cfg.samples == 0 || cfg.max_trials == 0 || cfg.target_errors == 0 || cfg.max_iters == 0 {
        return Err(Error::Config(
            "samples, target_errors, max_trials and max_iters must be positive".into(),
        ));
    }
    Ok(cfg)
}

impl SimConfig {
    pub fn constellation_id(&self) -> String {
        match &self.family {
            Family::Pam => format!("pam{}", self.order),
            Family::Qam => format!("qam{}", self.order),
            Family::Qci => format!("qci{}", self.order),
            Family::File(p) => format!(
                "file:{}",
                p.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
            ),
        }
    }
}
