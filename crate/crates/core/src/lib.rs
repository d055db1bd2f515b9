//! Simulation and analytic model of the static ground-loop voltage attack on
//! Kirchhoff-law–Johnson-noise (KLJN) key exchange.
//!
//! A DC voltage between the two grounds drives a loop current whose DC wire
//! voltage differs between the LH and HL secure situations. An eavesdropper
//! who counts wire samples above the midpoint of the two levels guesses the
//! key bit better than chance unless the noise swamps the offset.
//!
//! - [`circuit`]: parameters, spectra, DC/AC decomposition, trace sampling
//! - [`protocol`]: resistor picking, remote-resistor inference, key exchange
//! - [`attack`]: Eve's threshold attack and the erf/binomial model
//! - [`defense`]: DC compensation, temperature and bandwidth scaling
//! - [`sweep`]: temperature sweeps and CSV output
//! - [`cli`]: the `kljn` command

pub mod attack;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod defense;
pub mod error;
pub mod protocol;
pub mod rng;
pub mod sweep;

pub use attack::{AttackDecision, AttackStats, TieRule};
pub use circuit::{BitSituation, ResistorChoice, SystemParams, WireTrace};
pub use defense::{DefenseKind, DefenseSpec};
pub use error::{Error, Result};
pub use protocol::{BitExchangeRecord, ExchangeConfig, KeyExchangeResult};
pub use sweep::{SweepConfig, SweepResult, SweepRow};
