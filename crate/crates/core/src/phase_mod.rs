//! Single-tone phase modulation: exact discrete-mode unitary, classical
//! (optical-limit) coefficients, the unitarity-defect bound that separates
//! them, first-order multi-tone operators, and coherent-state propagation.
//!
//! With modulation index `m`, RF phase `theta` and bias phase `phi_b`, the
//! exact one-photon scattering amplitude from mode `q` to mode `k` on the
//! positive-frequency half-line is
//!
//! ```text
//! S_{k,q} = e^{i phi_b} e^{-i theta (k-q)}
//!           [ (-i)^{k-q} J_{k-q}(m) - (-i)^{k+q} J_{k+q}(m) ]
//! ```
//!
//! The first bracket term alone is the classical sideband coefficient
//! C_{k-q}; the second is the boundary correction demanded by unitarity,
//! whose column norm is bounded by `I_0(m) (m/2)^{2q+2} / ((q+1)!)^2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_space::{ModeLattice, OnePhotonMatrix};
use crate::numerics::{bessel_i0, bessel_j, bessel_j_sequence, ln_factorial, neg_i_pow};

/// Practical modulation indices never exceed the order of ten.
pub const MAX_MOD_INDEX: f64 = 12.0;

/// Above this per-tone index the first-order multi-tone expansion is no
/// longer trustworthy and results carry a warning.
pub const PERTURBATIVE_LIMIT: f64 = 0.3;

/// Parameters of one sinusoidally driven phase modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneConfig {
    /// Modulation index m = pi V_m / V_pi.
    pub m: f64,
    /// RF phase (rad).
    pub theta: f64,
    /// Bias phase (rad).
    pub phi_b: f64,
    /// Drive tone as a multiple of the lattice tone; 1 for the fundamental.
    pub omega_index: usize,
}

impl ToneConfig {
    pub fn new(m: f64, theta: f64, phi_b: f64) -> Result<Self> {
        Self::with_omega_index(m, theta, phi_b, 1)
    }

    pub fn with_omega_index(m: f64, theta: f64, phi_b: f64, omega_index: usize) -> Result<Self> {
        if !m.is_finite() || !(0.0..=MAX_MOD_INDEX).contains(&m) {
            return Err(Error::OutOfDomain {
                name: "m",
                value: m,
                domain: "0 <= m <= 12",
            });
        }
        if !theta.is_finite() {
            return Err(Error::NonFinite {
                name: "theta",
                value: theta,
            });
        }
        if !phi_b.is_finite() {
            return Err(Error::NonFinite {
                name: "phi_b",
                value: phi_b,
            });
        }
        if omega_index == 0 {
            return Err(Error::OutOfDomain {
                name: "omega_index",
                value: 0.0,
                domain: ">= 1",
            });
        }
        Ok(ToneConfig {
            m,
            theta,
            phi_b,
            omega_index,
        })
    }

    /// Guard band in absolute lattice modes: Carson's band plus safety,
    /// scaled by the tone's lattice multiple.
    pub fn guard_band(&self) -> usize {
        self.omega_index * (self.m.ceil() as usize + 8)
    }
}

/// Carson's truncation rule: sidebands with |s| > ceil(m) + 1 are
/// negligible.
pub fn carson_band(m: f64) -> usize {
    m.ceil() as usize + 1
}

/// Classical sideband coefficient C_n = e^{i phi_b} (-i e^{-i theta})^n
/// J_n(m); `n` counts multiples of the drive tone.
pub fn classical_coeff(cfg: &ToneConfig, n: i64) -> Complex64 {
    let j = bessel_j(n, cfg.m).expect("m validated at construction");
    Complex64::from_polar(1.0, cfg.phi_b)
        * Complex64::from_polar(1.0, -cfg.theta * n as f64)
        * neg_i_pow(n)
        * j
}

/// Exact one-photon amplitude from absolute mode `q` to mode `k` (both at
/// least 1). Modes couple only within a residue class of the tone's lattice
/// multiple; within a class the half-line solution applies to the class's
/// own sub-indices.
pub fn exact_coeff(cfg: &ToneConfig, k: usize, q: usize) -> Complex64 {
    match sub_indices(cfg, k, q) {
        None => Complex64::new(0.0, 0.0),
        Some((tk, tq)) => {
            let s = tk as i64 - tq as i64;
            let sigma = (tk + tq) as i64;
            let js = bessel_j(s, cfg.m).expect("validated");
            let jsig = bessel_j(sigma, cfg.m).expect("validated");
            Complex64::from_polar(1.0, cfg.phi_b)
                * Complex64::from_polar(1.0, -cfg.theta * s as f64)
                * (neg_i_pow(s) * js - neg_i_pow(sigma) * jsig)
        }
    }
}

/// The classical part of `exact_coeff` (zero when the modes do not couple).
pub fn exact_coeff_classical_part(cfg: &ToneConfig, k: usize, q: usize) -> Complex64 {
    match sub_indices(cfg, k, q) {
        None => Complex64::new(0.0, 0.0),
        Some((tk, tq)) => classical_coeff(cfg, tk as i64 - tq as i64),
    }
}

/// The boundary-correction part: exact = classical - correction.
pub fn exact_coeff_correction(cfg: &ToneConfig, k: usize, q: usize) -> Complex64 {
    match sub_indices(cfg, k, q) {
        None => Complex64::new(0.0, 0.0),
        Some((tk, tq)) => {
            let s = tk as i64 - tq as i64;
            let sigma = (tk + tq) as i64;
            let jsig = bessel_j(sigma, cfg.m).expect("validated");
            Complex64::from_polar(1.0, cfg.phi_b)
                * Complex64::from_polar(1.0, -cfg.theta * s as f64)
                * neg_i_pow(sigma)
                * jsig
        }
    }
}

/// Sub-indices of `k`, `q` within their residue class, or None when the two
/// modes belong to different classes of the drive tone.
fn sub_indices(cfg: &ToneConfig, k: usize, q: usize) -> Option<(usize, usize)> {
    let j = cfg.omega_index;
    if k < 1 || q < 1 || (k % j) != (q % j) {
        return None;
    }
    let r = (q - 1) % j + 1;
    Some(((k - r) / j + 1, (q - r) / j + 1))
}

/// Dense exact scattering matrix over a lattice window. Interior columns
/// (at least one guard band from either edge) are orthonormal to 1e-10.
pub fn exact_matrix(cfg: &ToneConfig, lattice: &ModeLattice) -> Result<OnePhotonMatrix> {
    let guard = cfg.guard_band();
    let (q_lo, q_hi) = (lattice.q_lo(), lattice.q_hi());
    if q_hi - q_lo <= 2 * guard {
        return Err(Error::WindowTooNarrow {
            lo: q_lo,
            hi: q_hi,
            guard,
        });
    }
    let j = cfg.omega_index;
    // Largest sub-index in any residue class, for the J_{t+t'} corrections.
    let t_hi_max = (q_hi - 1) / j + 1;
    let seq = bessel_j_sequence(2 * t_hi_max, cfg.m)?;
    let bias = Complex64::from_polar(1.0, cfg.phi_b);
    let j_of = |n: i64| -> f64 {
        let a = n.unsigned_abs() as usize;
        let v = seq[a];
        if n < 0 && a % 2 == 1 {
            -v
        } else {
            v
        }
    };
    OnePhotonMatrix::from_fn(q_lo, q_hi, guard, |k, q| match sub_indices(cfg, k, q) {
        None => Complex64::new(0.0, 0.0),
        Some((tk, tq)) => {
            let s = tk as i64 - tq as i64;
            let sigma = (tk + tq) as i64;
            bias * Complex64::from_polar(1.0, -cfg.theta * s as f64)
                * (neg_i_pow(s) * j_of(s) - neg_i_pow(sigma) * j_of(sigma))
        }
    })
}

/// Upper bound on the squared norm of the unitarity correction applied to
/// |1_q>: I_0(m) (m/2)^{2q+2} / ((q+1)!)^2, evaluated in the log domain so
/// large factorials cannot overflow.
pub fn unitarity_defect_bound(m: f64, q: usize) -> Result<f64> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::OutOfDomain {
            name: "m",
            value: m,
            domain: "m >= 0",
        });
    }
    if q == 0 {
        return Err(Error::OutOfDomain {
            name: "q",
            value: 0.0,
            domain: ">= 1",
        });
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    let ln_bound = bessel_i0(m)?.ln() + (2 * q + 2) as f64 * (m / 2.0).ln()
        - 2.0 * ln_factorial(q as u64 + 1);
    Ok(ln_bound.exp())
}

/// Apply a per-mode propagation phase diagonally after scattering:
/// `entry(k, q) -> e^{i phases[k]} entry(k, q)`. This models dispersive
/// propagation at the level of the output modes; the scalar-bias
/// factorization is not claimed to survive it.
pub fn with_mode_phases(m: &OnePhotonMatrix, phases: &[f64]) -> Result<OnePhotonMatrix> {
    if phases.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            detail: format!("{} phases on a {}-mode window", phases.len(), m.dim()),
        });
    }
    OnePhotonMatrix::from_fn(m.q_lo(), m.q_hi(), m.guard(), |k, q| {
        Complex64::from_polar(1.0, phases[k - m.q_lo()]) * m.entry(k, q)
    })
}

/// Coefficients of one single-tone sideband spectrum, offsets in multiples
/// of the drive tone.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandSpectrum {
    pub offsets: Vec<i64>,
    pub coeffs: Vec<Complex64>,
}

impl SidebandSpectrum {
    /// C_n for |n| <= n_max.
    pub fn single_tone(cfg: &ToneConfig, n_max: usize) -> Self {
        let offsets: Vec<i64> = (-(n_max as i64)..=n_max as i64).collect();
        let coeffs = offsets.iter().map(|&n| classical_coeff(cfg, n)).collect();
        SidebandSpectrum { offsets, coeffs }
    }

    pub fn total_power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Scatter a coherent amplitude vector through a one-photon matrix:
/// `alpha'_k = sum_q M[k][q] alpha_q`. The input support must sit inside the
/// guarded interior so the truncated matrix conserves energy.
pub fn coherent_scatter(m: &OnePhotonMatrix, alpha: &[Complex64]) -> Result<Vec<Complex64>> {
    if alpha.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            detail: format!("amplitude length {} vs window {}", alpha.len(), m.dim()),
        });
    }
    let (lo, hi) = m.interior();
    for (i, a) in alpha.iter().enumerate() {
        let q = m.q_lo() + i;
        if a.norm_sqr() > 0.0 && !(lo..=hi).contains(&q) {
            return Err(Error::SupportOutsideWindow);
        }
    }
    m.apply_vec(alpha)
}

/// One tone of a multi-tone drive: relative amplitude, RF phase, lattice
/// multiple, and an optional RF-response gain H(Omega) multiplying
/// A e^{-i theta}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub amplitude: f64,
    pub theta: f64,
    pub omega_index: usize,
    pub rf_gain: Complex64,
}

impl Tone {
    pub fn new(amplitude: f64, theta: f64, omega_index: usize) -> Self {
        Tone {
            amplitude,
            theta,
            omega_index,
            rf_gain: Complex64::new(1.0, 0.0),
        }
    }
}

/// First-order multi-tone matrix plus a regime note when some tone exceeds
/// the perturbative limit.
#[derive(Debug, Clone)]
pub struct MultitoneFirstOrder {
    pub matrix: OnePhotonMatrix,
    pub regime_warning: Option<String>,
}

/// First-order multi-tone phase modulation: identity times e^{i phi_b} plus
/// +/-Omega_k shift bands with amplitudes -i m A_k e^{-+i theta_k} / 2.
/// Equals the product of the single-tone operators up to O(m^2).
pub fn multitone_first_order(
    tones: &[Tone],
    m: f64,
    phi_b: f64,
    lattice: &ModeLattice,
) -> Result<MultitoneFirstOrder> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::OutOfDomain {
            name: "m",
            value: m,
            domain: "m >= 0",
        });
    }
    let mut warning = None;
    let mut guard = 1usize;
    for tone in tones {
        if tone.omega_index == 0 {
            return Err(Error::OutOfDomain {
                name: "omega_index",
                value: 0.0,
                domain: ">= 1",
            });
        }
        guard = guard.max(tone.omega_index);
        let idx = m * tone.amplitude;
        if idx > PERTURBATIVE_LIMIT {
            warning = Some(format!(
                "per-tone index m*A = {idx:.3} exceeds the perturbative limit {PERTURBATIVE_LIMIT}"
            ));
        }
    }
    let bias = Complex64::from_polar(1.0, phi_b);
    let dim = lattice.len();
    let q_lo = lattice.q_lo();
    let mut mat = nalgebra::DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for i in 0..dim {
        mat[(i, i)] = bias;
    }
    let half_i = Complex64::new(0.0, -0.5) * m;
    for tone in tones {
        let up = half_i * tone.amplitude * tone.rf_gain * Complex64::from_polar(1.0, -tone.theta);
        let down =
            half_i * tone.amplitude * tone.rf_gain.conj() * Complex64::from_polar(1.0, tone.theta);
        let j = tone.omega_index;
        for qi in 0..dim {
            if qi + j < dim {
                mat[(qi + j, qi)] += bias * up;
            }
            if qi >= j {
                mat[(qi - j, qi)] += bias * down;
            }
        }
    }
    let matrix = OnePhotonMatrix::from_fn(q_lo, lattice.q_hi(), guard, |k, q| {
        mat[(k - q_lo, q - q_lo)]
    })?;
    Ok(MultitoneFirstOrder {
        matrix,
        regime_warning: warning,
    })
}
