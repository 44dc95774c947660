//! Flat `key = value` run files and the simulation presets.
//!
//! Keys are the long command-line flag names (`n-steps`, `lower-paths`, ...);
//! underscores are accepted in place of hyphens. Flags given on the command
//! line win over the file, and the file wins over the preset.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use foresight_core::bounds::BoundsConfig;

use crate::error::bad_input;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad_input(format!("config line {}: expected key = value", n + 1)))?;
            let key = normalize_key(key);
            if key.is_empty() {
                return Err(bad_input(format!("config line {}: empty key", n + 1)));
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(bad_input(format!(
                    "config line {}: duplicate key `{key}`",
                    n + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text)
    }

    /// Rejects keys the current subcommand does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> anyhow::Result<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(bad_input(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| bad_input(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    /// Command-line value, else file value, else `default`.
    pub fn resolve<T>(&self, cli: Option<T>, key: &str, default: T) -> anyhow::Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match cli {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

/// Parses `1,5,10` and inclusive ranges like `1-20` (or a mix of both).
pub fn parse_usize_list(text: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| bad_input(format!("bad list entry `{item}`: {e}")))
        };
        match item.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(bad_input(format!("empty range `{item}`")));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse(item)?),
        }
    }
    if out.is_empty() {
        return Err(bad_input("empty list"));
    }
    Ok(out)
}

pub fn parse_f64_list(text: &str) -> anyhow::Result<Vec<f64>> {
    let out = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| bad_input(format!("bad list entry `{s}`: {e}")))
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    if out.is_empty() {
        return Err(bad_input("empty list"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Preset {
    /// Path counts divided by 5.
    #[default]
    Desk,
    /// Full published simulation sizes.
    Full,
}

impl Preset {
    pub fn bounds(self) -> BoundsConfig {
        match self {
            Preset::Desk => BoundsConfig::DESK,
            Preset::Full => BoundsConfig::FULL,
        }
    }

    pub fn rule_paths(self) -> usize {
        match self {
            Preset::Desk => 10_000,
            Preset::Full => 50_000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(format!("unknown preset `{s}` (expected desk or full)")),
        }
    }
}

/// Default grid: `h = 1/2500` with 250 steps.
pub const DEFAULT_H: f64 = 1.0 / 2500.0;
pub const DEFAULT_N_STEPS: usize = 250;
pub const DEFAULT_SEED: u64 = 20_240_601;
