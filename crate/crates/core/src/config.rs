//! `key = value` configuration files.
//!
//! ```text
//! # reference setup
//! r_low_ohm = 1000
//! r_high_ohm = 10000
//! temperatures = 1e8, 1e12, 1e18
//! samples_per_bit = 200, 1000
//! ```
//!
//! Blank lines and `#` comments (whole-line or trailing) are ignored. Unknown
//! keys and repeated keys are errors.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub r_low_ohm: Option<f64>,
    pub r_high_ohm: Option<f64>,
    pub u_dc_volt: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub temperatures: Option<Vec<f64>>,
    pub samples_per_bit: Option<Vec<usize>>,
    pub key_length: Option<usize>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
}

fn parse_one<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Config {
        line,
        msg: format!("cannot parse '{}' for key '{key}'", raw.trim()),
    })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>> {
    let items = raw
        .split(',')
        .map(|s| parse_one(line, key, s))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::Config {
            line,
            msg: format!("empty list for key '{key}'"),
        });
    }
    Ok(items)
}

/// Integers written in float notation (`1e3`) are accepted when exact.
fn parse_count(line: usize, key: &str, raw: &str) -> Result<usize> {
    if let Ok(n) = raw.trim().parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = parse_one(line, key, raw)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(Error::Config {
            line,
            msg: format!(
                "'{}' is not a non-negative integer for key '{key}'",
                raw.trim()
            ),
        })
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim();
            let dup = || Error::Config {
                line,
                msg: format!("duplicate key '{key}'"),
            };
            macro_rules! set {
                ($field:ident, $val:expr) => {{
                    if cfg.$field.is_some() {
                        return Err(dup());
                    }
                    cfg.$field = Some($val);
                }};
            }
            match key {
                "r_low_ohm" => set!(r_low_ohm, parse_one(line, key, value)?),
                "r_high_ohm" => set!(r_high_ohm, parse_one(line, key, value)?),
                "u_dc_volt" => set!(u_dc_volt, parse_one(line, key, value)?),
                "bandwidth_hz" => set!(bandwidth_hz, parse_one(line, key, value)?),
                "temperatures" => set!(temperatures, parse_list(line, key, value)?),
                "samples_per_bit" => set!(
                    samples_per_bit,
                    value
                        .split(',')
                        .map(|s| parse_count(line, key, s))
                        .collect::<Result<Vec<_>>>()?
                ),
                "key_length" => set!(key_length, parse_count(line, key, value)?),
                "seed" => set!(seed, parse_one(line, key, value)?),
                "replicates" => set!(replicates, parse_count(line, key, value)?),
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}
