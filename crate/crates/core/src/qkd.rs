//! Frequency-coded quantum key distribution on the carrier and first
//! sidebands.
//!
//! Alice's four BB84 states live in the span of the carrier and the
//! antisymmetric sideband combination; they are produced by single-tone
//! phase modulation at two special indices solved at startup: the root of
//! J_0(m) = sqrt(2) J_1(m) (~1.161) and the first zero of J_0 (~2.405).
//! Bob either measures directly (basis 2) or modulates again (basis 1) and
//! routes the carrier to detector D2 and everything else to D1. Sessions
//! are Monte Carlo with per-block seeds so results merge deterministically.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_space::make_lattice;
use crate::numerics::{bessel_j, bisect};
use crate::phase_mod::{exact_matrix, ToneConfig, PERTURBATIVE_LIMIT};

/// Label of one of the four BB84 states: sign within the basis, basis 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateLabel {
    PlusOne,
    MinusOne,
    PlusTwo,
    MinusTwo,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [
        StateLabel::PlusOne,
        StateLabel::MinusOne,
        StateLabel::PlusTwo,
        StateLabel::MinusTwo,
    ];

    pub fn basis(self) -> u8 {
        match self {
            StateLabel::PlusOne | StateLabel::MinusOne => 1,
            StateLabel::PlusTwo | StateLabel::MinusTwo => 2,
        }
    }

    /// Key bit carried by the state: + is 0, - is 1.
    pub fn bit(self) -> u8 {
        match self {
            StateLabel::PlusOne | StateLabel::PlusTwo => 0,
            StateLabel::MinusOne | StateLabel::MinusTwo => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateLabel::PlusOne => "+1",
            StateLabel::MinusOne => "-1",
            StateLabel::PlusTwo => "+2",
            StateLabel::MinusTwo => "-2",
        }
    }

    pub fn parse(s: &str) -> Option<StateLabel> {
        match s {
            "+1" => Some(StateLabel::PlusOne),
            "-1" => Some(StateLabel::MinusOne),
            "+2" => Some(StateLabel::PlusTwo),
            "-2" => Some(StateLabel::MinusTwo),
            _ => None,
        }
    }
}

/// One-photon state over the modes (omega - Omega, omega, omega + Omega),
/// stored as (lower, carrier, upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcState {
    pub amps: [Complex64; 3],
    pub label: StateLabel,
}

impl FcState {
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Inner product <a|b> over the three modes.
pub fn fc_inner(a: &FcState, b: &FcState) -> Complex64 {
    a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Modulation index solving J_0(m) = sqrt(2) J_1(m); close to the quoted
/// 1.161.
pub fn basis_one_index() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        let m = bisect(
            |x| bessel_j(0, x).unwrap() - 2.0_f64.sqrt() * bessel_j(1, x).unwrap(),
            1.0,
            1.5,
            1e-13,
        );
        debug_assert!((m - 1.161).abs() < 2e-3);
        m
    })
}

/// First zero of J_0; close to the quoted 2.405.
pub fn carrier_null_index() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        let m = bisect(|x| bessel_j(0, x).unwrap(), 2.0, 3.0, 1e-13);
        debug_assert!((m - 2.405).abs() < 2e-3);
        m
    })
}

/// (m, theta) with which Alice's modulator produces each state; m = 0 means
/// no modulation.
pub fn alice_settings(label: StateLabel) -> (f64, f64) {
    use std::f64::consts::FRAC_PI_2;
    match label {
        StateLabel::PlusOne => (basis_one_index(), -FRAC_PI_2),
        StateLabel::MinusOne => (basis_one_index(), FRAC_PI_2),
        StateLabel::PlusTwo => (0.0, 0.0),
        StateLabel::MinusTwo => (carrier_null_index(), FRAC_PI_2),
    }
}

/// Closed-form target vectors (lower, carrier, upper):
///   |+,1> = (-1/2, 1/sqrt2, +1/2)     |-,1> = (+1/2, 1/sqrt2, -1/2)
///   |+,2> = (0, 1, 0)                 |-,2> = (-1/sqrt2, 0, +1/sqrt2)
fn closed_form(label: StateLabel) -> [Complex64; 3] {
    let r = |x: f64| Complex64::new(x, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match label {
        StateLabel::PlusOne => [r(-0.5), r(s), r(0.5)],
        StateLabel::MinusOne => [r(0.5), r(s), r(-0.5)],
        StateLabel::PlusTwo => [r(0.0), r(1.0), r(0.0)],
        StateLabel::MinusTwo => [r(-s), r(0.0), r(s)],
    }
}

/// Build Alice's state from the modulation settings, filtered to the first
/// sidebands and renormalized by the generation efficiency
/// eta = J_0^2 + 2 J_1^2, with the global phase fixed to the closed form.
pub fn alice_state(label: StateLabel) -> FcState {
    let (m, theta) = alice_settings(label);
    let j0 = bessel_j(0, m).unwrap();
    let j1 = bessel_j(1, m).unwrap();
    let eta = j0 * j0 + 2.0 * j1 * j1;
    let scale = 1.0 / eta.sqrt();
    // Carrier J_0, upper -i e^{-i theta} J_1, lower i e^{i theta} J_{-1}.
    let upper = Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -theta) * j1 * scale;
    let lower = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, theta) * (-j1) * scale;
    let carrier = Complex64::new(j0 * scale, 0.0);
    let mut amps = [lower, carrier, upper];

    // The construction fixes the state only up to a global phase; rotate it
    // onto the closed-form convention and confirm the match.
    let target = closed_form(label);
    let overlap: Complex64 = amps
        .iter()
        .zip(&target)
        .map(|(a, t)| a.conj() * t)
        .sum();
    let phase = overlap / overlap.norm();
    for a in &mut amps {
        *a *= phase;
    }
    let dist: f64 = amps
        .iter()
        .zip(&target)
        .map(|(a, t)| (a - t).norm_sqr())
        .sum::<f64>()
        .sqrt();
    debug_assert!(dist < 1e-3, "state {label:?} misses its closed form by {dist}");
    FcState { amps, label }
}

/// Bob's detection model: apply his basis modulation exactly over a window
/// wide enough that truncation leakage stays below 1e-6, then read the
/// carrier probability as D2 and everything else as D1. Returns
/// (p_D1, p_D2).
pub fn bob_measure_probs(state: &FcState, bob_basis: u8) -> Result<(f64, f64)> {
    if !(1..=2).contains(&bob_basis) {
        return Err(Error::OutOfDomain {
            name: "bob_basis",
            value: bob_basis as f64,
            domain: "1 or 2",
        });
    }
    let n = state.norm_sq();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized {
            norm_sq: n,
            tol: 1e-9,
        });
    }
    let lattice = make_lattice(1000.0, 1.0, 24)?;
    let q0 = lattice.q0();
    let (m, theta) = match bob_basis {
        1 => (basis_one_index(), -std::f64::consts::FRAC_PI_2),
        _ => (0.0, 0.0),
    };
    let cfg = ToneConfig::new(m, theta, 0.0)?;
    let matrix = exact_matrix(&cfg, &lattice)?;
    let mut psi = vec![Complex64::new(0.0, 0.0); lattice.len()];
    let mid = q0 - lattice.q_lo();
    psi[mid - 1] = state.amps[0];
    psi[mid] = state.amps[1];
    psi[mid + 1] = state.amps[2];
    let out = matrix.apply_vec(&psi)?;
    let p_d2 = out[mid].norm_sqr();
    let p_d1: f64 = out
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != mid)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Ok((p_d1, p_d2))
}

/// First-sideband coherent amplitudes after cascaded low-index modulation by
/// Alice and Bob on the same tone: (lower, upper) =
/// (-i (e^{+i thA} mA + e^{+i thB} mB) alpha / 2,
///  -i (e^{-i thA} mA + e^{-i thB} mB) alpha / 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B92Amplitudes {
    pub lower: Complex64,
    pub upper: Complex64,
    pub regime_warning: bool,
}

pub fn b92_sideband_amplitude(
    m_a: f64,
    theta_a: f64,
    m_b: f64,
    theta_b: f64,
    alpha: Complex64,
) -> Result<B92Amplitudes> {
    for (name, m) in [("m_a", m_a), ("m_b", m_b)] {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::OutOfDomain {
                name,
                value: m,
                domain: "m >= 0",
            });
        }
    }
    let half_i = Complex64::new(0.0, -0.5);
    let lower = half_i
        * (Complex64::from_polar(m_a, theta_a) + Complex64::from_polar(m_b, theta_b))
        * alpha;
    let upper = half_i
        * (Complex64::from_polar(m_a, -theta_a) + Complex64::from_polar(m_b, -theta_b))
        * alpha;
    Ok(B92Amplitudes {
        lower,
        upper,
        regime_warning: m_a > PERTURBATIVE_LIMIT || m_b > PERTURBATIVE_LIMIT,
    })
}

/// Which detector fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    D1,
    D2,
}

/// Monte Carlo session parameters. Send rates are per label in the order
/// (+1, -1, +2, -2); `forced_bob_basis` pins Bob's basis for calibration
/// runs instead of sampling it uniformly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionConfig {
    pub trials: u64,
    pub rates: [f64; 4],
    pub seed: u64,
    pub forced_bob_basis: Option<u8>,
}

impl SessionConfig {
    pub fn uniform(trials: u64, seed: u64) -> Self {
        SessionConfig {
            trials,
            rates: [0.25; 4],
            seed,
            forced_bob_basis: None,
        }
    }
}

/// Counts and derived figures of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    /// `counts[label][detector]` over all trials, labels in
    /// (+1, -1, +2, -2) order, detectors (D1, D2).
    pub counts: [[u64; 2]; 4],
    pub trials: u64,
    pub sifted: u64,
    pub errors: u64,
    pub sift_rate: f64,
    pub qber: f64,
    pub seed: u64,
}

const BLOCK: u64 = 1 << 16;

/// Run a session: sample labels from the send rates, Bob's basis uniformly
/// (unless forced), detector clicks from the exact measurement
/// probabilities; sift matching bases and count errors. Deterministic for a
/// fixed seed, independent of how many blocks run in parallel.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionStats> {
    if cfg.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let sum: f64 = cfg.rates.iter().sum();
    if cfg.rates.iter().any(|r| *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRates { sum });
    }
    if let Some(b) = cfg.forced_bob_basis {
        if !(1..=2).contains(&b) {
            return Err(Error::OutOfDomain {
                name: "forced_bob_basis",
                value: b as f64,
                domain: "1 or 2",
            });
        }
    }

    // p_D2 per (label, bob basis).
    let mut p_d2 = [[0.0_f64; 2]; 4];
    for (li, label) in StateLabel::ALL.iter().enumerate() {
        let state = alice_state(*label);
        for basis in [1u8, 2] {
            let (_, d2) = bob_measure_probs(&state, basis)?;
            p_d2[li][(basis - 1) as usize] = d2;
        }
    }

    let cum = {
        let mut c = [0.0_f64; 4];
        let mut acc = 0.0;
        for (i, r) in cfg.rates.iter().enumerate() {
            acc += r;
            c[i] = acc;
        }
        c[3] = 1.0 + 1e-12;
        c
    };

    let n_blocks = cfg.trials.div_ceil(BLOCK);
    let blocks: Vec<SessionStats> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(cfg.trials);
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b + 1);
            let mut counts = [[0u64; 2]; 4];
            let mut sifted = 0u64;
            let mut errors = 0u64;
            for _ in lo..hi {
                let u: f64 = rng.random();
                let li = cum.iter().position(|c| u <= *c).unwrap_or(3);
                let label = StateLabel::ALL[li];
                let bob_basis = match cfg.forced_bob_basis {
                    Some(b) => b,
                    None => {
                        if rng.random::<bool>() {
                            1
                        } else {
                            2
                        }
                    }
                };
                let click: f64 = rng.random();
                let detector = if click < p_d2[li][(bob_basis - 1) as usize] {
                    Detector::D2
                } else {
                    Detector::D1
                };
                counts[li][if detector == Detector::D1 { 0 } else { 1 }] += 1;
                if bob_basis == label.basis() {
                    sifted += 1;
                    // Decoding: basis 2 reads D2 as +, basis 1 reads D1 as +.
                    let bob_bit = match (bob_basis, detector) {
                        (2, Detector::D2) | (1, Detector::D1) => 0,
                        _ => 1,
                    };
                    if bob_bit != label.bit() {
                        errors += 1;
                    }
                }
            }
            SessionStats {
                counts,
                trials: hi - lo,
                sifted,
                errors,
                sift_rate: 0.0,
                qber: 0.0,
                seed: cfg.seed,
            }
        })
        .collect();

    let mut total = SessionStats {
        counts: [[0; 2]; 4],
        trials: 0,
        sifted: 0,
        errors: 0,
        sift_rate: 0.0,
        qber: 0.0,
        seed: cfg.seed,
    };
    for b in blocks {
        for i in 0..4 {
            total.counts[i][0] += b.counts[i][0];
            total.counts[i][1] += b.counts[i][1];
        }
        total.trials += b.trials;
        total.sifted += b.sifted;
        total.errors += b.errors;
    }
    total.sift_rate = total.sifted as f64 / total.trials as f64;
    total.qber = if total.sifted > 0 {
        total.errors as f64 / total.sifted as f64
    } else {
        0.0
    };
    Ok(total)
}

/// Exact sifted error rate for uniform send rates and uniform basis choice,
/// derived from the measurement probabilities: only |-,1> misfires, a
/// quarter of sifted bits carry it.
pub fn expected_qber_uniform() -> Result<f64> {
    let (p_d1, _) = bob_measure_probs(&alice_state(StateLabel::MinusOne), 1)?;
    Ok(p_d1 / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solved_indices_match_quoted_values() {
        assert!((basis_one_index() - 1.161).abs() <= 2e-3);
        assert!((carrier_null_index() - 2.405).abs() <= 2e-3);
        // Frozen solver outputs.
        assert!((basis_one_index() - 1.1612125141872042).abs() < 1e-9);
        assert!((carrier_null_index() - 2.404825557695773).abs() < 1e-9);
    }

    #[test]
    fn alice_states_match_their_closed_forms() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus2 = alice_state(StateLabel::PlusTwo);
        assert!((plus2.amps[0]).norm() < 1e-12);
        assert!((plus2.amps[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((plus2.amps[2]).norm() < 1e-12);

        let minus2 = alice_state(StateLabel::MinusTwo);
        assert!((minus2.amps[0] - c(-s, 0.0)).norm() < 1e-3);
        assert!(minus2.amps[1].norm() < 1e-3);
        assert!((minus2.amps[2] - c(s, 0.0)).norm() < 1e-3);

        for (label, lower, upper) in [
            (StateLabel::PlusOne, -0.5, 0.5),
            (StateLabel::MinusOne, 0.5, -0.5),
        ] {
            let st = alice_state(label);
            assert!((st.amps[0] - c(lower, 0.0)).norm() < 1e-3);
            assert!((st.amps[1] - c(s, 0.0)).norm() < 1e-3);
            assert!((st.amps[2] - c(upper, 0.0)).norm() < 1e-3);
        }
    }

    #[test]
    fn state_overlaps_form_nonconjugate_bases() {
        for b in [1u8, 2] {
            let plus = alice_state(if b == 1 {
                StateLabel::PlusOne
            } else {
                StateLabel::PlusTwo
            });
            let minus = alice_state(if b == 1 {
                StateLabel::MinusOne
            } else {
                StateLabel::MinusTwo
            });
            assert!(fc_inner(&plus, &minus).norm() < 1e-3, "basis {b}");
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for a in [StateLabel::PlusOne, StateLabel::MinusOne] {
            for b in [StateLabel::PlusTwo, StateLabel::MinusTwo] {
                let overlap = fc_inner(&alice_state(a), &alice_state(b)).norm();
                assert!((overlap - s).abs() < 1e-3, "{a:?} vs {b:?}: {overlap}");
            }
        }
    }

    #[test]
    fn bob_fires_the_advertised_detectors() {
        let (p1, p2) = bob_measure_probs(&alice_state(StateLabel::PlusTwo), 2).unwrap();
        assert!((p2 - 1.0).abs() < 1e-9);
        assert!(p1 < 1e-9);

        let (p1, p2) = bob_measure_probs(&alice_state(StateLabel::MinusTwo), 2).unwrap();
        assert!((p1 - 1.0).abs() < 1e-3);
        assert!(p2 < 1e-3);

        let (p1, _) = bob_measure_probs(&alice_state(StateLabel::PlusOne), 1).unwrap();
        assert!((p1 - 1.0).abs() < 1e-3);

        // The one imperfect case: |-,1> read in basis 1.
        let (p1, p2) = bob_measure_probs(&alice_state(StateLabel::MinusOne), 1).unwrap();
        assert!((p2 - 0.953).abs() < 0.005, "p_D2 = {p2}");
        assert!((p1 - 0.047).abs() < 0.005, "p_D1 = {p1}");
        assert!((p1 + p2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn measurement_probs_sum_to_one() {
        for label in StateLabel::ALL {
            for basis in [1u8, 2] {
                let (p1, p2) = bob_measure_probs(&alice_state(label), basis).unwrap();
                assert!((p1 + p2 - 1.0).abs() < 1e-6);
                assert!((0.0..=1.0 + 1e-9).contains(&p1));
            }
        }
    }

    #[test]
    fn b92_interference_examples() {
        let alpha = c(0.7, -0.1);
        // Matched phases: constructive, amplitude -i e^{i th} m alpha.
        let amp = b92_sideband_amplitude(0.1, 0.4, 0.1, 0.4, alpha).unwrap();
        let want = c(0.0, -1.0) * Complex64::from_polar(0.1, 0.4) * alpha;
        assert!((amp.lower - want).norm() < 1e-15);
        // Opposite phases: destructive at both sidebands.
        let amp = b92_sideband_amplitude(0.1, 0.4, 0.1, 0.4 + std::f64::consts::PI, alpha).unwrap();
        assert!(amp.lower.norm() < 1e-15);
        assert!(amp.upper.norm() < 1e-15);
        // Bob silent: Alice's lone sideband pair.
        let amp = b92_sideband_amplitude(0.2, 1.3, 0.0, 0.0, alpha).unwrap();
        let want = c(0.0, -0.5) * Complex64::from_polar(0.2, 1.3) * alpha;
        assert!((amp.lower - want).norm() < 1e-15);
        assert!(!amp.regime_warning);
        assert!(
            b92_sideband_amplitude(0.5, 0.0, 0.0, 0.0, alpha)
                .unwrap()
                .regime_warning
        );
    }

    #[test]
    fn forced_basis_two_with_plus_two_gives_clean_keys() {
        let cfg = SessionConfig {
            trials: 20_000,
            rates: [0.0, 0.0, 1.0, 0.0],
            seed: 11,
            forced_bob_basis: Some(2),
        };
        let stats = run_session(&cfg).unwrap();
        assert_eq!(stats.sifted, stats.trials);
        assert_eq!(stats.errors, 0);
        assert_eq!(stats.qber, 0.0);
        assert_eq!(stats.sift_rate, 1.0);
    }

    #[test]
    fn equal_seeds_reproduce_identical_stats() {
        let cfg = SessionConfig::uniform(200_000, 7);
        let a = run_session(&cfg).unwrap();
        let b = run_session(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_tracks_the_exact_probabilities() {
        // All sends |-,1>, basis forced to 1: D2 frequency ~ 0.9529.
        let trials = 400_000u64;
        let cfg = SessionConfig {
            trials,
            rates: [0.0, 1.0, 0.0, 0.0],
            seed: 5,
            forced_bob_basis: Some(1),
        };
        let stats = run_session(&cfg).unwrap();
        let (_, p2) = bob_measure_probs(&alice_state(StateLabel::MinusOne), 1).unwrap();
        let freq = stats.counts[1][1] as f64 / trials as f64;
        let sigma = (p2 * (1.0 - p2) / trials as f64).sqrt();
        assert!(
            (freq - p2).abs() < 4.0 * sigma,
            "freq {freq} vs p {p2} (sigma {sigma})"
        );
    }

    #[test]
    fn uniform_session_qber_stays_below_the_bound() {
        let expected = expected_qber_uniform().unwrap();
        assert!(expected <= 0.012, "analytic qber {expected}");

        let trials = 1_000_000u64;
        let stats = run_session(&SessionConfig::uniform(trials, 42)).unwrap();
        let sigma = (expected * (1.0 - expected) / stats.sifted as f64).sqrt();
        assert!(
            (stats.qber - expected).abs() <= 3.0 * sigma,
            "qber {} vs expected {expected} (sigma {sigma})",
            stats.qber
        );
    }

    #[test]
    fn bad_session_configs_rejected() {
        assert!(matches!(
            run_session(&SessionConfig::uniform(0, 1)),
            Err(Error::ZeroTrials)
        ));
        let cfg = SessionConfig {
            trials: 10,
            rates: [0.5, 0.5, 0.5, 0.0],
            seed: 1,
            forced_bob_basis: None,
        };
        assert!(matches!(run_session(&cfg), Err(Error::InvalidRates { .. })));
    }
}
