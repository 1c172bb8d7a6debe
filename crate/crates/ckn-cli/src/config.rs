//! Flat key = value run configuration, overridden by command-line flags.

use ckn::{Error, Result};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

const KNOWN_KEYS: &[&str] = &[
    "d",
    "p",
    "theta",
    "mu",
    "mu_start",
    "mu_end",
    "step",
    "out_dir",
    "grid_s_half",
    "grid_n_s",
    "grid_n_zeta",
];

#[derive(Debug, Default, Clone)]
pub struct RunConfig {
    values: HashMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidParameter(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "{}:{}: unknown config key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    pub fn d(&self) -> Result<Option<u32>> {
        self.get("d")
    }

    pub fn p(&self) -> Result<Option<f64>> {
        self.get("p")
    }

    pub fn theta(&self) -> Result<Option<f64>> {
        self.get("theta")
    }

    pub fn mu(&self) -> Result<Option<MuRange>> {
        self.get("mu")
    }

    pub fn mu_start(&self) -> Result<Option<f64>> {
        self.get("mu_start")
    }

    pub fn mu_end(&self) -> Result<Option<f64>> {
        self.get("mu_end")
    }

    pub fn step(&self) -> Result<Option<f64>> {
        self.get("step")
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.values.get("out_dir").map(PathBuf::from)
    }

    pub fn grid_s_half(&self) -> Result<Option<f64>> {
        self.get("grid_s_half")
    }

    pub fn grid_n_s(&self) -> Result<Option<usize>> {
        self.get("grid_n_s")
    }

    pub fn grid_n_zeta(&self) -> Result<Option<usize>> {
        self.get("grid_n_zeta")
    }
}

/// Inclusive mu sweep `start:end:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl MuRange {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl std::str::FromStr for MuRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("mu range `{s}` must look like start:end:step"));
        }
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let range = MuRange {
            start: parse(parts[0])?,
            end: parse(parts[1])?,
            step: parse(parts[2])?,
        };
        if !(range.step > 0.0 && range.end >= range.start && range.start > 0.0) {
            return Err(format!("mu range `{s}` must satisfy 0 < start <= end, step > 0"));
        }
        Ok(range)
    }
}

/// Output directory resolution: flag, then config, then CKN_OUT_DIR, then cwd.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.out_dir())
        .or_else(|| std::env::var_os("CKN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
