//! Countermeasures: cancel the DC source, or drown it in more noise by raising
//! the generator temperature or the bandwidth (up to the wave limit).

use crate::attack::{run_attack, AttackStats};
use crate::circuit::SystemParams;
use crate::error::{Error, Result};
use crate::protocol::{run_key_exchange, ExchangeConfig};
use crate::rng::{domain, mix_key};

/// Default bandwidth cap standing in for the cable wave limit (Hz).
pub const DEFAULT_WAVE_LIMIT_HZ: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefenseKind {
    /// Add `magnitude` volts to the loop's DC source.
    DcCompensation,
    /// Multiply both generators' temperature by `magnitude`.
    TemperatureScale,
    /// Multiply the noise bandwidth by `magnitude`.
    BandwidthScale,
}

impl std::str::FromStr for DefenseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc-compensation" => Ok(Self::DcCompensation),
            "temperature-scale" => Ok(Self::TemperatureScale),
            "bandwidth-scale" => Ok(Self::BandwidthScale),
            other => Err(Error::InvalidDefense(format!(
                "unknown kind '{other}' (expected dc-compensation, temperature-scale or bandwidth-scale)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefenseSpec {
    pub kind: DefenseKind,
    pub magnitude: f64,
    pub wave_limit_bandwidth: f64,
}

impl DefenseSpec {
    pub fn new(kind: DefenseKind, magnitude: f64) -> Self {
        Self {
            kind,
            magnitude,
            wave_limit_bandwidth: DEFAULT_WAVE_LIMIT_HZ,
        }
    }

    pub fn dc_compensation(volts: f64) -> Self {
        Self::new(DefenseKind::DcCompensation, volts)
    }

    pub fn temperature_scale(factor: f64) -> Self {
        Self::new(DefenseKind::TemperatureScale, factor)
    }

    pub fn bandwidth_scale(factor: f64) -> Self {
        Self::new(DefenseKind::BandwidthScale, factor)
    }

    pub fn with_wave_limit(self, hz: f64) -> Self {
        Self {
            wave_limit_bandwidth: hz,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.magnitude.is_finite() {
            return Err(Error::InvalidDefense(format!(
                "magnitude must be finite, got {}",
                self.magnitude
            )));
        }
        if self.kind != DefenseKind::DcCompensation && self.magnitude <= 0.0 {
            return Err(Error::InvalidDefense(format!(
                "scale factor must be > 0, got {}",
                self.magnitude
            )));
        }
        if !(self.wave_limit_bandwidth.is_finite() && self.wave_limit_bandwidth > 0.0) {
            return Err(Error::InvalidDefense(format!(
                "wave limit must be > 0, got {}",
                self.wave_limit_bandwidth
            )));
        }
        Ok(())
    }
}

pub fn apply_defense(params: &SystemParams, spec: &DefenseSpec) -> Result<SystemParams> {
    spec.validate()?;
    match spec.kind {
        DefenseKind::DcCompensation => params.with_u_dc(params.u_dc + spec.magnitude),
        DefenseKind::TemperatureScale => {
            params.with_temperature(params.temperature * spec.magnitude)
        }
        DefenseKind::BandwidthScale => {
            let requested = params.bandwidth * spec.magnitude;
            if requested > spec.wave_limit_bandwidth {
                return Err(Error::WaveLimitExceeded {
                    requested,
                    limit: spec.wave_limit_bandwidth,
                });
            }
            params.with_bandwidth(requested)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefenseOutcome {
    pub before: AttackStats,
    pub after: AttackStats,
    pub defended: SystemParams,
}

/// Full exchange and attack with and without the defense, on independent
/// substreams. Eve recomputes her threshold from the defended parameters.
pub fn evaluate_defense(
    params: &SystemParams,
    spec: &DefenseSpec,
    exchange: &ExchangeConfig,
    seed: u64,
) -> Result<DefenseOutcome> {
    let defended = apply_defense(params, spec)?;
    let before_ex = run_key_exchange(params, exchange, mix_key(&[domain::DEFENSE_BEFORE, seed]))?;
    let before = run_attack(params, &before_ex)?;
    drop(before_ex);
    let after_ex = run_key_exchange(&defended, exchange, mix_key(&[domain::DEFENSE_AFTER, seed]))?;
    let after = run_attack(&defended, &after_ex)?;
    Ok(DefenseOutcome {
        before,
        after,
        defended,
    })
}
