//! The legitimate KLJN bit-exchange protocol.
//!
//! Each attempt both parties connect a random resistor, observe the same wire
//! trace, and infer the remote resistor from the loop-current variance. Only
//! LH and HL attempts are kept. Key bits follow Alice's view: LH is 1, HL is 0.

use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{sample_wire_trace, BitSituation, ResistorChoice, SystemParams, WireTrace};
use crate::error::{Error, Result};
use crate::rng::{domain, substream};

pub fn pick_resistor<R: Rng + ?Sized>(rng: &mut R) -> ResistorChoice {
    if rng.random_bool(0.5) {
        ResistorChoice::High
    } else {
        ResistorChoice::Low
    }
}

/// Loop resistance `R_A + R_B` recovered from a band-integrated current
/// variance: `4kT·Δf / V`.
pub fn loop_resistance_from_variance(current_variance: f64, params: &SystemParams) -> Result<f64> {
    if !(current_variance.is_finite() && current_variance > 0.0) {
        return Err(Error::DegenerateTrace);
    }
    Ok(4.0 * params.boltzmann * params.temperature * params.bandwidth / current_variance)
}

/// Remote resistance given one's own resistor and a current variance.
pub fn infer_from_current_variance(
    own: f64,
    current_variance: f64,
    params: &SystemParams,
) -> Result<f64> {
    Ok(loop_resistance_from_variance(current_variance, params)? - own)
}

/// Remote resistance estimated from the mean-removed current variance of a trace.
pub fn infer_remote_resistance(own: f64, trace: &WireTrace, params: &SystemParams) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: trace.len(),
        });
    }
    infer_from_current_variance(own, trace.current_variance(), params)
}

/// Nearest of the two nominal resistors in log space; the geometric mean
/// goes to `Low`.
pub fn classify_resistance(estimate: f64, params: &SystemParams) -> Result<ResistorChoice> {
    if !(estimate.is_finite() && estimate > 0.0) {
        return Err(Error::NonPositiveEstimate(estimate));
    }
    // |ln(e/r_low)| <= |ln(e/r_high)|  <=>  e <= sqrt(r_low * r_high)
    Ok(if estimate <= (params.r_low * params.r_high).sqrt() {
        ResistorChoice::Low
    } else {
        ResistorChoice::High
    })
}

/// An estimate at or below zero lies under both candidates, so it reads as `Low`.
fn classify_lenient(estimate: f64, params: &SystemParams) -> ResistorChoice {
    classify_resistance(estimate, params).unwrap_or(ResistorChoice::Low)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitExchangeRecord {
    /// Ground truth.
    pub situation: BitSituation,
    pub trace: WireTrace,
    /// Alice's estimate of Bob's resistance (Ω).
    pub alice_estimate: f64,
    /// Bob's estimate of Alice's resistance (Ω).
    pub bob_estimate: f64,
    /// Bob's resistor as inferred by Alice.
    pub alice_inferred: ResistorChoice,
    /// Alice's resistor as inferred by Bob.
    pub bob_inferred: ResistorChoice,
    pub retained: bool,
}

impl BitExchangeRecord {
    /// Key bit for a retained record.
    pub fn key_bit(&self) -> Option<bool> {
        match self.situation {
            BitSituation::LH => Some(true),
            BitSituation::HL => Some(false),
            _ => None,
        }
    }

    /// Both parties read the situation correctly.
    pub fn inference_correct(&self) -> bool {
        self.alice_inferred == self.situation.bob && self.bob_inferred == self.situation.alice
    }
}

pub fn run_bit_exchange<R: Rng + ?Sized>(
    params: &SystemParams,
    n: usize,
    rng: &mut R,
) -> Result<BitExchangeRecord> {
    let alice = pick_resistor(rng);
    let bob = pick_resistor(rng);
    run_bit_exchange_in(params, BitSituation::new(alice, bob), n, rng)
}

/// One exchange period with the resistors already chosen.
pub fn run_bit_exchange_in<R: Rng + ?Sized>(
    params: &SystemParams,
    situation: BitSituation,
    n: usize,
    rng: &mut R,
) -> Result<BitExchangeRecord> {
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let trace = sample_wire_trace(params, situation, n, rng)?;
    let (ra, rb) = situation.resistances(params);
    let alice_estimate = infer_remote_resistance(ra, &trace, params)?;
    let bob_estimate = infer_remote_resistance(rb, &trace, params)?;
    Ok(BitExchangeRecord {
        situation,
        trace,
        alice_estimate,
        bob_estimate,
        alice_inferred: classify_lenient(alice_estimate, params),
        bob_inferred: classify_lenient(bob_estimate, params),
        retained: situation.is_secure(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeConfig {
    /// Secure bits to accumulate (key length).
    pub target_secure_bits: usize,
    /// Wire samples per exchange period.
    pub samples_per_bit: usize,
    /// Maximum attempts; `None` means 100 × target.
    pub attempt_cap: Option<usize>,
}

impl ExchangeConfig {
    pub const DEFAULT_CAP_FACTOR: usize = 100;

    pub fn new(target_secure_bits: usize, samples_per_bit: usize) -> Self {
        Self {
            target_secure_bits,
            samples_per_bit,
            attempt_cap: None,
        }
    }

    pub fn with_attempt_cap(self, cap: usize) -> Self {
        Self {
            attempt_cap: Some(cap),
            ..self
        }
    }

    pub fn cap(&self) -> usize {
        self.attempt_cap.unwrap_or(
            self.target_secure_bits
                .saturating_mul(Self::DEFAULT_CAP_FACTOR),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyExchangeResult {
    pub records: Vec<BitExchangeRecord>,
    pub secure_bits: Vec<bool>,
    pub attempts: usize,
}

impl KeyExchangeResult {
    pub fn retained(&self) -> impl Iterator<Item = &BitExchangeRecord> {
        self.records.iter().filter(|r| r.retained)
    }
}

/// Runs attempts until `target_secure_bits` secure bits are retained.
///
/// Attempt `i` draws from the substream `(seed, i)`, so the outcome does not
/// depend on how many threads evaluate the batches.
pub fn run_key_exchange(
    params: &SystemParams,
    config: &ExchangeConfig,
    seed: u64,
) -> Result<KeyExchangeResult> {
    params.validate()?;
    let target = config.target_secure_bits;
    if target == 0 {
        return Err(Error::InvalidParams(
            "target_secure_bits must be >= 1".into(),
        ));
    }
    if config.samples_per_bit < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: config.samples_per_bit,
        });
    }
    let cap = config.cap();

    let mut records = Vec::new();
    let mut retained = 0;
    while retained < target {
        let start = records.len();
        if start >= cap {
            return Err(Error::AttemptCapExceeded {
                cap,
                retained,
                target,
            });
        }
        // Expected yield is one half; over-provision a little to avoid a
        // long tail of tiny batches.
        let want = (target - retained) * 2 + 16;
        let end = (start + want).min(cap);
        let batch: Vec<BitExchangeRecord> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(&[domain::EXCHANGE, seed, i as u64]);
                run_bit_exchange(params, config.samples_per_bit, &mut rng)
            })
            .collect::<Result<_>>()?;
        for rec in batch {
            if retained == target {
                break;
            }
            retained += rec.retained as usize;
            records.push(rec);
        }
    }

    let secure_bits = records
        .iter()
        .filter_map(BitExchangeRecord::key_bit)
        .collect();
    Ok(KeyExchangeResult {
        attempts: records.len(),
        records,
        secure_bits,
    })
}
