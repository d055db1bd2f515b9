//! Lumped-circuit model of the KLJN loop with a parasitic DC source.
//!
//! Alice's end holds resistor `R_A` with Johnson-noise source `U_An` and the
//! ground-loop source `U_DC`; Bob's end holds `R_B` with `U_Bn`. The loop
//! current points from Alice to Bob and the wire voltage is measured against
//! Bob's ground:
//!
//! ```text
//! I = (U_DC + U_An - U_Bn) / (R_A + R_B)
//! U = I * R_B + U_Bn
//! ```
//!
//! Wire resistance is zero throughout.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Boltzmann constant, exact SI value (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Physical constants and circuit parameters of one KLJN line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Low resistor value (Ω).
    pub r_low: f64,
    /// High resistor value (Ω).
    pub r_high: f64,
    /// Noise temperature of both generators (K).
    pub temperature: f64,
    /// Effective noise bandwidth (Hz).
    pub bandwidth: f64,
    /// Parasitic DC voltage at Alice's end (V). Any sign.
    pub u_dc: f64,
    /// Boltzmann constant (J/K).
    pub boltzmann: f64,
}

impl SystemParams {
    pub fn new(
        r_low: f64,
        r_high: f64,
        temperature: f64,
        bandwidth: f64,
        u_dc: f64,
    ) -> Result<Self> {
        let params = Self {
            r_low,
            r_high,
            temperature,
            bandwidth,
            u_dc,
            boltzmann: BOLTZMANN,
        };
        params.validate()?;
        Ok(params)
    }

    /// The simulation setup of the original experiment: 1 kΩ / 10 kΩ,
    /// 1 MHz bandwidth, 0.1 V ground-loop voltage, at the given temperature.
    pub fn reference(temperature: f64) -> Result<Self> {
        Self::new(1e3, 1e4, temperature, 1e6, 0.1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.r_low.is_finite() && self.r_high.is_finite()) {
            return bad("resistances must be finite".into());
        }
        if !(0.0 < self.r_low && self.r_low < self.r_high) {
            return bad(format!(
                "require 0 < r_low < r_high, got r_low={} r_high={}",
                self.r_low, self.r_high
            ));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            ));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return bad(format!("bandwidth must be > 0, got {}", self.bandwidth));
        }
        if !(self.boltzmann.is_finite() && self.boltzmann > 0.0) {
            return bad(format!("boltzmann must be > 0, got {}", self.boltzmann));
        }
        if !self.u_dc.is_finite() {
            return bad(format!("u_dc must be finite, got {}", self.u_dc));
        }
        Ok(())
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self> {
        let p = Self {
            temperature,
            ..self
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_u_dc(self, u_dc: f64) -> Result<Self> {
        let p = Self { u_dc, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bandwidth(self, bandwidth: f64) -> Result<Self> {
        let p = Self { bandwidth, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn resistance(&self, choice: ResistorChoice) -> f64 {
        match choice {
            ResistorChoice::Low => self.r_low,
            ResistorChoice::High => self.r_high,
        }
    }

    /// `4kT`, the common prefactor of every Johnson-noise density.
    fn four_kt(&self) -> f64 {
        4.0 * self.boltzmann * self.temperature
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResistorChoice {
    Low,
    High,
}

impl ResistorChoice {
    pub fn label(self) -> char {
        match self {
            ResistorChoice::Low => 'L',
            ResistorChoice::High => 'H',
        }
    }
}

/// The pair of resistors connected during one exchange period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitSituation {
    pub alice: ResistorChoice,
    pub bob: ResistorChoice,
}

impl BitSituation {
    pub const LL: Self = Self::new(ResistorChoice::Low, ResistorChoice::Low);
    pub const LH: Self = Self::new(ResistorChoice::Low, ResistorChoice::High);
    pub const HL: Self = Self::new(ResistorChoice::High, ResistorChoice::Low);
    pub const HH: Self = Self::new(ResistorChoice::High, ResistorChoice::High);

    pub const ALL: [Self; 4] = [Self::LL, Self::LH, Self::HL, Self::HH];

    pub const fn new(alice: ResistorChoice, bob: ResistorChoice) -> Self {
        Self { alice, bob }
    }

    /// Only mixed situations produce a secure bit.
    pub fn is_secure(&self) -> bool {
        self.alice != self.bob
    }

    /// `(R_A, R_B)` for these parameters.
    pub fn resistances(&self, params: &SystemParams) -> (f64, f64) {
        (params.resistance(self.alice), params.resistance(self.bob))
    }

    pub fn mirrored(&self) -> Self {
        Self::new(self.bob, self.alice)
    }

    pub fn index(&self) -> usize {
        match (self.alice, self.bob) {
            (ResistorChoice::Low, ResistorChoice::Low) => 0,
            (ResistorChoice::Low, ResistorChoice::High) => 1,
            (ResistorChoice::High, ResistorChoice::Low) => 2,
            (ResistorChoice::High, ResistorChoice::High) => 3,
        }
    }
}

impl std::fmt::Display for BitSituation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.alice.label(), self.bob.label())
    }
}

impl std::str::FromStr for BitSituation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LL" => Ok(Self::LL),
            "LH" => Ok(Self::LH),
            "HL" => Ok(Self::HL),
            "HH" => Ok(Self::HH),
            _ => Err(Error::InvalidParams(format!("unknown bit situation '{s}'"))),
        }
    }
}

/// Voltage and current samples observed on the wire during one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct WireTrace {
    voltage: Vec<f64>,
    current: Vec<f64>,
}

impl WireTrace {
    pub fn new(voltage: Vec<f64>, current: Vec<f64>) -> Result<Self> {
        if voltage.is_empty() {
            return Err(Error::TooFewSamples { min: 1, got: 0 });
        }
        if voltage.len() != current.len() {
            return Err(Error::InvalidParams(format!(
                "trace length mismatch: {} voltage vs {} current samples",
                voltage.len(),
                current.len()
            )));
        }
        Ok(Self { voltage, current })
    }

    pub fn len(&self) -> usize {
        self.voltage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltage.is_empty()
    }

    pub fn voltage(&self) -> &[f64] {
        &self.voltage
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn voltage_mean(&self) -> f64 {
        mean(&self.voltage)
    }

    pub fn current_mean(&self) -> f64 {
        mean(&self.current)
    }

    /// Mean-removed (n − 1) sample variance of the voltage; 0 for one sample.
    pub fn voltage_variance(&self) -> f64 {
        variance(&self.voltage)
    }

    /// Mean-removed (n − 1) sample variance of the current; 0 for one sample.
    pub fn current_variance(&self) -> f64 {
        variance(&self.current)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Shifted two-pass variance; exactly 0 for a constant sequence.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let x0 = xs[0];
    let m = xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - x0 - m) * (x - x0 - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Wire-voltage power spectral density, `4kT·R_A·R_B/(R_A+R_B)` (V²/Hz).
pub fn voltage_psd(params: &SystemParams, sit: BitSituation) -> f64 {
    let (ra, rb) = sit.resistances(params);
    params.four_kt() * ra * rb / (ra + rb)
}

/// Loop-current power spectral density, `4kT/(R_A+R_B)` (A²/Hz).
pub fn current_psd(params: &SystemParams, sit: BitSituation) -> f64 {
    let (ra, rb) = sit.resistances(params);
    params.four_kt() / (ra + rb)
}

/// DC loop current driven by the ground-loop source, positive from Alice to Bob.
pub fn dc_loop_current(params: &SystemParams, sit: BitSituation) -> f64 {
    let (ra, rb) = sit.resistances(params);
    params.u_dc / (ra + rb)
}

/// DC component of the wire voltage, `U_DC·R_B/(R_A+R_B)`.
pub fn dc_wire_voltage(params: &SystemParams, sit: BitSituation) -> f64 {
    let (ra, rb) = sit.resistances(params);
    params.u_dc * rb / (ra + rb)
}

/// RMS of the AC wire voltage, `sqrt(4kT·Δf·(R_A ∥ R_B))`.
pub fn ac_wire_rms(params: &SystemParams, sit: BitSituation) -> f64 {
    (voltage_psd(params, sit) * params.bandwidth).sqrt()
}

/// RMS of one end's band-limited Johnson noise source, `sqrt(4kT·R·Δf)`.
pub fn source_rms(params: &SystemParams, r: f64) -> f64 {
    (params.four_kt() * r * params.bandwidth).sqrt()
}

/// Raw per-sample noise draws behind a [`WireTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraws {
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
}

/// Draws `n` i.i.d. wire samples for the given situation.
pub fn sample_wire_trace<R: Rng + ?Sized>(
    params: &SystemParams,
    sit: BitSituation,
    n: usize,
    rng: &mut R,
) -> Result<WireTrace> {
    sample_wire_trace_with_sources(params, sit, n, rng).map(|(trace, _)| trace)
}

/// As [`sample_wire_trace`], also returning the generator draws that produced
/// each sample.
pub fn sample_wire_trace_with_sources<R: Rng + ?Sized>(
    params: &SystemParams,
    sit: BitSituation,
    n: usize,
    rng: &mut R,
) -> Result<(WireTrace, NoiseDraws)> {
    if n == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let (ra, rb) = sit.resistances(params);
    let sigma_a = source_rms(params, ra);
    let sigma_b = source_rms(params, rb);
    let r_sum = ra + rb;

    let mut voltage = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    let mut alice = Vec::with_capacity(n);
    let mut bob = Vec::with_capacity(n);
    for _ in 0..n {
        let za: f64 = rng.sample(StandardNormal);
        let zb: f64 = rng.sample(StandardNormal);
        let u_an = sigma_a * za;
        let u_bn = sigma_b * zb;
        let i = (params.u_dc + u_an - u_bn) / r_sum;
        voltage.push(i * rb + u_bn);
        current.push(i);
        alice.push(u_an);
        bob.push(u_bn);
    }
    Ok((WireTrace { voltage, current }, NoiseDraws { alice, bob }))
}
