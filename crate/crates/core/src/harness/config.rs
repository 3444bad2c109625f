//! Flat `key = value` configuration files with `#` comments.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dynamics::{Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Parsed key-value pairs; every key must be consumed exactly once by a
/// typed getter, so typos surface as configuration errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        KvConfig::parse(&text)
    }

    /// Sets or replaces `key`.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| v.parse::<f64>().map_err(|_| Error::config(format!("{key}: not a number: {v:?}"))))
            .transpose()
    }

    pub fn take_u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.take(key)
            .map(|v| v.parse::<u64>().map_err(|_| Error::config(format!("{key}: not an unsigned integer: {v:?}"))))
            .transpose()
    }

    pub fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        Ok(self.take_u64(key)?.map(|v| v as usize))
    }

    pub fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key)
            .map(|v| match v.as_str() {
                "on" | "true" | "yes" | "1" => Ok(true),
                "off" | "false" | "no" | "0" => Ok(false),
                _ => Err(Error::config(format!("{key}: expected on/off, got {v:?}"))),
            })
            .transpose()
    }

    pub fn take_string(&mut self, key: &str) -> Option<String> {
        self.take(key)
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| Error::config(format!("{key}: not a number: {s:?}"))))
                    .collect()
            })
            .transpose()
    }

    /// Fails if any key was not consumed.
    pub fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Err(Error::config(format!("unknown keys: {}", keys.join(", "))))
        }
    }
}

/// Consumes the simulation keys of `kv` on top of `base`.
pub fn take_sim_config(kv: &mut KvConfig, base: &SimConfig) -> Result<SimConfig> {
    let mut cfg = base.clone();
    let n = kv.take_usize("grid_n")?.unwrap_or(base.grid.n());
    let l = kv.take_f64("box_L")?.unwrap_or(base.grid.box_length());
    cfg.grid = GridSpec::new(l, n)?;
    if let Some(v) = kv.take_f64("eps")? {
        cfg.eps = v;
    }
    if let Some(v) = kv.take_f64("p")? {
        cfg.p = v;
    }
    if let Some(v) = kv.take_f64("lambda")? {
        cfg.lambda = v;
    }
    if let Some(v) = kv.take_f64("dt")? {
        cfg.dt = v;
    }
    if let Some(v) = kv.take_f64("T")? {
        cfg.t_final = v;
    }
    if let Some(v) = kv.take_u64("seed")? {
        cfg.seed = v;
    }
    if let Some(v) = kv.take_u64("stream")? {
        cfg.stream = v;
    }
    if let Some(v) = kv.take_string("scheme") {
        cfg.scheme = Scheme::parse(&v)?;
    }
    if let Some(v) = kv.take_usize("cadence")? {
        cfg.cadence = v;
    }
    if let Some(v) = kv.take_bool("renormalize")? {
        cfg.renormalize = v;
    }
    if let Some(v) = kv.take_bool("dealias")? {
        cfg.dealias = v;
    }
    if let Some(v) = kv.take_bool("record_energy")? {
        cfg.record_energy = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a complete simulation config; unknown keys are errors.
pub fn sim_config_from_text(text: &str) -> Result<SimConfig> {
    let mut kv = KvConfig::parse(text)?;
    let cfg = take_sim_config(&mut kv, &SimConfig::default())?;
    kv.finish()?;
    Ok(cfg)
}
