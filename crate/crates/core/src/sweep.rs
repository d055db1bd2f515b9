//! Temperature × samples-per-bit sweep of Eve's success probability, and its
//! CSV serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::attack::{analytic_bit_success_prob, run_attack};
use crate::circuit::SystemParams;
use crate::error::{Error, Result};
use crate::protocol::{run_key_exchange, ExchangeConfig};
use crate::rng::{domain, mix_key};

pub const CSV_HEADER: &str =
    "temperature_K,samples_per_bit,replicate,bits_attacked,p_estimate,std_error,analytic_p";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub params: SystemParams,
    pub temperatures: Vec<f64>,
    pub samples_per_bit: Vec<usize>,
    pub key_length: usize,
    pub master_seed: u64,
    pub replicates: usize,
}

impl Default for SweepConfig {
    /// Decade grid 1e8..=1e18 K, N ∈ {200, 500, 1000}, 700-bit keys.
    fn default() -> Self {
        Self {
            params: SystemParams::reference(1e8).expect("reference parameters are valid"),
            temperatures: (8..=18).map(|e| 10f64.powi(e)).collect(),
            samples_per_bit: vec![200, 500, 1000],
            key_length: 700,
            master_seed: 0,
            replicates: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSweep(m.to_string()));
        self.params.validate()?;
        if self.temperatures.is_empty() {
            return bad("temperature list is empty");
        }
        if self
            .temperatures
            .iter()
            .any(|t| !(t.is_finite() && *t > 0.0))
        {
            return bad("temperatures must be finite and > 0");
        }
        if self.samples_per_bit.is_empty() {
            return bad("samples_per_bit list is empty");
        }
        if self.samples_per_bit.iter().any(|&n| n < 2) {
            return bad("samples_per_bit entries must be >= 2");
        }
        if self.key_length == 0 {
            return bad("key_length must be >= 1");
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1");
        }
        Ok(())
    }

    /// Seed for one grid point. Keyed on the parameter values rather than
    /// their list positions so that extending the grid leaves existing rows
    /// untouched.
    pub fn point_seed(&self, temperature: f64, samples: usize, replicate: usize) -> u64 {
        mix_key(&[
            domain::SWEEP,
            self.master_seed,
            temperature.to_bits(),
            samples as u64,
            replicate as u64,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub temperature: f64,
    pub samples_per_bit: usize,
    pub replicate: usize,
    pub bits_attacked: usize,
    pub p_estimate: f64,
    pub std_error: f64,
    pub analytic_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, temperature: f64, samples: usize, replicate: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| {
            r.temperature == temperature && r.samples_per_bit == samples && r.replicate == replicate
        })
    }
}

/// One simulated grid point.
pub fn run_point(
    config: &SweepConfig,
    temperature: f64,
    samples: usize,
    replicate: usize,
) -> Result<SweepRow> {
    let params = config.params.with_temperature(temperature)?;
    let exchange = ExchangeConfig::new(config.key_length, samples);
    let seed = config.point_seed(temperature, samples, replicate);
    let result = run_key_exchange(&params, &exchange, seed)?;
    let stats = run_attack(&params, &result)?;
    Ok(SweepRow {
        temperature,
        samples_per_bit: samples,
        replicate,
        bits_attacked: stats.n_tot,
        p_estimate: stats.p_estimate,
        std_error: stats.std_error,
        analytic_p: analytic_bit_success_prob(&params, samples),
    })
}

/// Rows come out ordered by (samples_per_bit, temperature, replicate) in the
/// order given by the config lists.
pub fn run_temperature_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::with_capacity(
        config.samples_per_bit.len() * config.temperatures.len() * config.replicates,
    );
    // Points run one at a time; each is parallel inside the key exchange.
    for &n in &config.samples_per_bit {
        for &t in &config.temperatures {
            for rep in 0..config.replicates {
                rows.push(run_point(config, t, n, rep)?);
            }
        }
    }
    Ok(SweepResult { rows })
}

pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &result.rows {
        // `{:?}` on f64 is the shortest representation that parses back exactly.
        writeln!(
            out,
            "{:?},{},{},{},{:?},{:?},{:?}",
            r.temperature,
            r.samples_per_bit,
            r.replicate,
            r.bits_attacked,
            r.p_estimate,
            r.std_error,
            r.analytic_p
        )?;
    }
    out.flush()
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.is_empty() {
        return Err(Error::EmptyResult);
    }
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(result, BufWriter::new(file)).map_err(io_err)
}
