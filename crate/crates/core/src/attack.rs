//! Eve's threshold attack on the ground-loop DC leak, and its closed-form model.
//!
//! Eve knows `U_DC` and both resistor values. The DC wire voltage sits at
//! `U_LH` or `U_HL` depending on the secure situation; she counts how many of
//! her `N` voltage samples land above the midpoint and picks the situation on
//! the majority side.

use statrs::function::erf::erf;
use statrs::function::factorial::ln_binomial;

use crate::circuit::{ac_wire_rms, dc_wire_voltage, BitSituation, SystemParams, WireTrace};
use crate::error::{Error, Result};
use crate::protocol::KeyExchangeResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackDecision {
    GuessLH,
    GuessHL,
    Undetermined,
}

impl AttackDecision {
    /// Credit for this decision against the true situation: 1 if right,
    /// 0 if wrong, `None` if undetermined.
    pub fn score(self, truth: BitSituation) -> Option<f64> {
        let guessed = match self {
            AttackDecision::GuessLH => BitSituation::LH,
            AttackDecision::GuessHL => BitSituation::HL,
            AttackDecision::Undetermined => return None,
        };
        Some(if guessed == truth { 1.0 } else { 0.0 })
    }
}

/// How an undetermined decision enters the tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Counts as half a correct guess (the expected score of a coin flip).
    #[default]
    HalfCredit,
    /// Dropped from `n_tot` altogether.
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackStats {
    pub n_tot: usize,
    pub n_cor: f64,
    pub n_undetermined: usize,
    pub p_estimate: f64,
    pub std_error: f64,
}

impl AttackStats {
    pub fn from_tally(n_tot: usize, n_cor: f64, n_undetermined: usize) -> Result<Self> {
        if n_tot == 0 {
            return Err(Error::NoSecureBits);
        }
        let p = n_cor / n_tot as f64;
        Ok(Self {
            n_tot,
            n_cor,
            n_undetermined,
            p_estimate: p,
            std_error: (p * (1.0 - p) / n_tot as f64).sqrt(),
        })
    }
}

/// Midpoint of the two secure DC levels, `(U_LH + U_HL)/2 = U_DC/2`.
pub fn threshold(params: &SystemParams) -> f64 {
    params.u_dc / 2.0
}

/// Fraction of voltage samples strictly above `u_th`.
pub fn gamma(trace: &WireTrace, u_th: f64) -> f64 {
    let above = trace.voltage().iter().filter(|&&u| u > u_th).count();
    above as f64 / trace.len() as f64
}

pub fn guess(g: f64) -> AttackDecision {
    if g > 0.5 {
        AttackDecision::GuessLH
    } else if g < 0.5 {
        AttackDecision::GuessHL
    } else {
        AttackDecision::Undetermined
    }
}

/// Attacks every retained bit with half-credit tie accounting.
pub fn run_attack(params: &SystemParams, exchange: &KeyExchangeResult) -> Result<AttackStats> {
    run_attack_with(params, exchange, TieRule::HalfCredit)
}

pub fn run_attack_with(
    params: &SystemParams,
    exchange: &KeyExchangeResult,
    ties: TieRule,
) -> Result<AttackStats> {
    let u_th = threshold(params);
    let mut attacked = 0;
    let mut n_cor = 0.0;
    let mut n_undetermined = 0;
    for rec in exchange.retained() {
        attacked += 1;
        match guess(gamma(&rec.trace, u_th)).score(rec.situation) {
            Some(s) => n_cor += s,
            None => {
                n_undetermined += 1;
                if ties == TieRule::HalfCredit {
                    n_cor += 0.5;
                }
            }
        }
    }
    if attacked == 0 {
        return Err(Error::NoSecureBits);
    }
    let n_tot = match ties {
        TieRule::HalfCredit => attacked,
        TieRule::Exclude => attacked - n_undetermined,
    };
    AttackStats::from_tally(n_tot, n_cor, n_undetermined)
}

/// Probability that one wire-voltage sample lands at or above the threshold:
/// `0.5·[1 − erf((U_th − U_DCw)/(√2·σ))]` with σ the AC wire RMS.
///
/// With no noise the sample equals its DC level, giving 1, 0, or ½ on a tie.
pub fn analytic_exceed_prob(params: &SystemParams, sit: BitSituation) -> f64 {
    let u_th = threshold(params);
    let u_dcw = dc_wire_voltage(params, sit);
    let sigma = ac_wire_rms(params, sit);
    if sigma == 0.0 {
        return match u_dcw.partial_cmp(&u_th) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        };
    }
    0.5 * (1.0 - erf((u_th - u_dcw) / (std::f64::consts::SQRT_2 * sigma)))
}

/// Majority-vote success for `n` samples each exceeding with probability `q`,
/// when the truth is the situation whose samples lie above the threshold:
/// `P{Bin(n,q) > n/2} + ½·P{Bin(n,q) = n/2}`.
pub fn majority_success(q: f64, n: u64) -> f64 {
    assert!(n >= 1, "majority_success needs n >= 1");
    assert!((0.0..=1.0).contains(&q), "q = {q} outside [0, 1]");
    let pmf = |k: u64| -> f64 {
        if q == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if q == 1.0 {
            return if k == n { 1.0 } else { 0.0 };
        }
        (ln_binomial(n, k) + k as f64 * q.ln() + (n - k) as f64 * (1.0 - q).ln()).exp()
    };
    let tie = if n.is_multiple_of(2) {
        0.5 * pmf(n / 2)
    } else {
        0.0
    };
    // Sum whichever tail is small so results near 0 or 1 keep full precision.
    let p = if q > 0.5 {
        let below: f64 = (0..n.div_ceil(2)).map(pmf).sum();
        1.0 - below - tie
    } else {
        let above: f64 = (n / 2 + 1..=n).map(pmf).sum();
        above + tie
    };
    p.clamp(0.0, 1.0)
}

/// Eve's expected per-bit success against a given secure situation.
pub fn analytic_bit_success_in(params: &SystemParams, sit: BitSituation, n: usize) -> f64 {
    let q = analytic_exceed_prob(params, sit);
    match sit {
        // HL is right when the samples fall below, i.e. a majority of misses.
        BitSituation::HL => majority_success(1.0 - q, n as u64),
        _ => majority_success(q, n as u64),
    }
}

/// Eve's expected per-bit success; LH and HL give the same value.
pub fn analytic_bit_success_prob(params: &SystemParams, n: usize) -> f64 {
    analytic_bit_success_in(params, BitSituation::LH, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::sample_wire_trace;
    use crate::protocol::{run_bit_exchange_in, run_key_exchange, ExchangeConfig};
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn at(t: f64) -> SystemParams {
        SystemParams::reference(t).unwrap()
    }

    /// Oracle: Simpson's rule on the Gaussian density over [a, mean + 12σ].
    fn tail_by_quadrature(mean: f64, sigma: f64, a: f64) -> f64 {
        let lo = a;
        let hi = mean + 12.0 * sigma;
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let pdf = |x: f64| {
            let z = (x - mean) / sigma;
            (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut s = pdf(lo) + pdf(hi);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold(&at(1e12)), 0.05);
        assert_eq!(threshold(&at(1e12).with_u_dc(0.0).unwrap()), 0.0);
        let p = SystemParams::new(47.0, 3300.0, 1.0, 1.0, 0.37).unwrap();
        let mid =
            0.5 * (dc_wire_voltage(&p, BitSituation::LH) + dc_wire_voltage(&p, BitSituation::HL));
        assert!((threshold(&p) - mid).abs() < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let mut v = vec![1.0; 600];
        v.extend(vec![-1.0; 400]);
        let t = WireTrace::new(v, vec![0.0; 1000]).unwrap();
        assert_eq!(gamma(&t, 0.0), 0.6);
        assert_eq!(gamma(&t, -2.0), 1.0);
        // at-threshold samples do not count
        let t = WireTrace::new(vec![0.05, 0.05], vec![0.0; 2]).unwrap();
        assert_eq!(gamma(&t, 0.05), 0.0);

        let cold = at(0.0);
        let trace =
            sample_wire_trace(&cold, BitSituation::LH, 100, &mut substream(&[200])).unwrap();
        assert_eq!(gamma(&trace, threshold(&cold)), 1.0);
    }

    #[test]
    fn guess_rule() {
        assert_eq!(guess(0.7), AttackDecision::GuessLH);
        assert_eq!(guess(0.3), AttackDecision::GuessHL);
        assert_eq!(guess(0.5), AttackDecision::Undetermined);
        assert_eq!(AttackDecision::GuessLH.score(BitSituation::LH), Some(1.0));
        assert_eq!(AttackDecision::GuessLH.score(BitSituation::HL), Some(0.0));
        assert_eq!(AttackDecision::Undetermined.score(BitSituation::HL), None);
    }

    #[test]
    fn attack_needs_secure_bits() {
        let p = at(1e12);
        let rec = run_bit_exchange_in(&p, BitSituation::HH, 10, &mut substream(&[201])).unwrap();
        let ex = KeyExchangeResult {
            records: vec![rec],
            secure_bits: vec![],
            attempts: 1,
        };
        assert!(matches!(run_attack(&p, &ex), Err(Error::NoSecureBits)));
    }

    #[test]
    fn perfect_attack_and_tie_accounting() {
        // At 1e8 K the noise RMS is ~18x below the DC offset from threshold.
        let p = at(1e8);
        let ex = run_key_exchange(&p, &ExchangeConfig::new(50, 20), 202).unwrap();
        let stats = run_attack(&p, &ex).unwrap();
        assert_eq!(stats.p_estimate, 1.0);
        assert_eq!(stats.std_error, 0.0);
        assert_eq!(stats.n_tot, 50);

        // Hand-built ties: one LH bit with gamma exactly 0.5.
        let rec = run_bit_exchange_in(&p, BitSituation::LH, 2, &mut substream(&[203])).unwrap();
        let mut tie = rec.clone();
        tie.trace = WireTrace::new(vec![1.0, -1.0], vec![0.0, 1.0]).unwrap();
        let ex = KeyExchangeResult {
            records: vec![rec, tie],
            secure_bits: vec![true, true],
            attempts: 2,
        };
        let half = run_attack(&p, &ex).unwrap();
        assert_eq!((half.n_tot, half.n_cor, half.n_undetermined), (2, 1.5, 1));
        assert_eq!(half.p_estimate, 0.75);
        let excl = run_attack_with(&p, &ex, TieRule::Exclude).unwrap();
        assert_eq!((excl.n_tot, excl.n_cor, excl.n_undetermined), (1, 1.0, 1));
    }

    #[test]
    fn no_dc_means_no_information() {
        for (seed, t) in [(204u64, 1e9), (205, 1e14)] {
            let p = at(t).with_u_dc(0.0).unwrap();
            let ex = run_key_exchange(&p, &ExchangeConfig::new(700, 100), seed).unwrap();
            let s = run_attack(&p, &ex).unwrap();
            assert!(
                (s.p_estimate - 0.5).abs() <= 3.0 * (0.25f64 / 700.0).sqrt(),
                "{s:?}"
            );
        }
    }

    #[test]
    fn exceed_prob_matches_quadrature_and_monte_carlo() {
        let p = at(1e12);
        let q = analytic_exceed_prob(&p, BitSituation::LH);
        let mean = dc_wire_voltage(&p, BitSituation::LH);
        let sigma = ac_wire_rms(&p, BitSituation::LH);
        let oracle = tail_by_quadrature(mean, sigma, threshold(&p));
        assert!((q - oracle).abs() < 1e-8, "{q} vs {oracle}");
        assert!((q - 0.572435).abs() < 1e-6);

        let mut rng = substream(&[206]);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma * z >= 0.05
            })
            .count();
        assert!((hits as f64 / n as f64 - q).abs() < 0.002);
    }

    #[test]
    fn exceed_prob_limits() {
        assert!((analytic_exceed_prob(&at(1e18), BitSituation::LH) - 0.5).abs() < 1e-4);
        let sym = SystemParams::new(1e3, 1e4, 1e12, 1e6, 0.1).unwrap();
        assert_eq!(analytic_exceed_prob(&sym, BitSituation::LL), 0.5);
        assert_eq!(analytic_exceed_prob(&at(0.0), BitSituation::LH), 1.0);
        assert_eq!(analytic_exceed_prob(&at(0.0), BitSituation::HL), 0.0);
        assert_eq!(analytic_exceed_prob(&at(0.0), BitSituation::HH), 0.5);
    }

    #[test]
    fn bit_success_edge_cases() {
        let flat = at(1e12).with_u_dc(0.0).unwrap();
        for n in [1, 2, 7, 200, 1000] {
            assert!((analytic_bit_success_prob(&flat, n) - 0.5).abs() < 1e-12);
            assert_eq!(analytic_bit_success_prob(&at(0.0), n), 1.0);
            assert_eq!(analytic_bit_success_in(&at(0.0), BitSituation::HL, n), 1.0);
        }
        assert_eq!(majority_success(0.0, 5), 0.0);
        assert_eq!(majority_success(1.0, 4), 1.0);
        assert!((majority_success(0.3, 1) - 0.3).abs() < 1e-15);
        // n = 2: P{2 hits} + ½·P{1 hit}
        assert!((majority_success(0.3, 2) - (0.09 + 0.5 * 0.42)).abs() < 1e-15);
    }

    #[test]
    fn bit_success_at_reference_point() {
        let p = at(1e12);
        let q = analytic_exceed_prob(&p, BitSituation::LH);
        let n = 1000;
        let exact = analytic_bit_success_prob(&p, n);
        assert!(1.0 - exact < 1e-5 && exact <= 1.0);
        assert!((1.0 - exact - 2.0689e-6).abs() < 1e-9);
        // Frozen from an independent binomial-tail evaluation (scipy sf/pmf).
        assert!((analytic_bit_success_prob(&p, 200) - 0.9801602550532463).abs() < 1e-13);
        assert!((analytic_bit_success_prob(&p, 500) - 0.9994329368647613).abs() < 1e-13);
        assert!((analytic_bit_success_prob(&at(1e14), 1000) - 0.6774385504912244).abs() < 1e-11);

        // Normal approximation of the binomial tail.
        let z = (0.5 - q) * (n as f64).sqrt() / (q * (1.0 - q)).sqrt();
        let normal = 0.5 * (1.0 - erf(z / std::f64::consts::SQRT_2));
        assert!((exact - normal).abs() < 1e-5);

        // Direct Monte Carlo on the per-bit majority vote at a point where the
        // tail is visible (N = 200, p ~ 0.98).
        let mut rng = substream(&[207]);
        let bits = 20_000;
        let score: f64 = (0..bits)
            .map(|_| {
                let hits = (0..200).filter(|_| rng.random_bool(q)).count();
                match hits.cmp(&100) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                }
            })
            .sum();
        let mc = score / bits as f64;
        let expect = analytic_bit_success_prob(&p, 200);
        let se = (expect * (1.0 - expect) / bits as f64).sqrt();
        assert!((mc - expect).abs() < 4.0 * se, "mc {mc} vs {expect}");
    }

    #[test]
    fn lh_and_hl_success_coincide() {
        for t in [1e10, 1e12, 1e13, 1e15] {
            for n in [1, 2, 200, 501] {
                let p = at(t);
                let lh = analytic_bit_success_in(&p, BitSituation::LH, n);
                let hl = analytic_bit_success_in(&p, BitSituation::HL, n);
                assert!((lh - hl).abs() < 1e-12, "T={t} n={n}");
            }
        }
    }

    proptest! {
        #[test]
        fn exceed_prob_monotone_in_temperature(log_t in 8.0f64..17.9, step in 0.01f64..1.0) {
            let lo = at(10f64.powf(log_t));
            let hi = at(10f64.powf(log_t + step));
            let (a, b) = (analytic_exceed_prob(&lo, BitSituation::LH), analytic_exceed_prob(&hi, BitSituation::LH));
            prop_assert!(b <= a && b >= 0.5);
            if a < 1.0 { prop_assert!(b < a); }
            let (c, d) = (analytic_exceed_prob(&lo, BitSituation::HL), analytic_exceed_prob(&hi, BitSituation::HL));
            prop_assert!(d >= c && d <= 0.5);
        }

        #[test]
        fn exceed_probs_complement(log_t in 6.0f64..19.0, u_dc in -2.0f64..2.0) {
            let p = at(10f64.powf(log_t)).with_u_dc(u_dc).unwrap();
            let s = analytic_exceed_prob(&p, BitSituation::LH) + analytic_exceed_prob(&p, BitSituation::HL);
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn bit_success_monotone_in_samples(log_t in 10.0f64..16.0, n in 1usize..600) {
            let p = at(10f64.powf(log_t));
            prop_assert!(analytic_bit_success_prob(&p, n + 1) >= analytic_bit_success_prob(&p, n) - 1e-12);
        }

        #[test]
        fn scale_invariance(log_t in 9.0f64..16.0, factor in 0.01f64..100.0) {
            let base = at(10f64.powf(log_t));
            let scaled = base
                .with_u_dc(base.u_dc * factor).unwrap()
                .with_temperature(base.temperature * factor * factor).unwrap();
            let a = analytic_exceed_prob(&base, BitSituation::LH);
            let b = analytic_exceed_prob(&scaled, BitSituation::LH);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
