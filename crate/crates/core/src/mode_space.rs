//! Frequency-mode lattices, sparse multi-photon states over two ports, and
//! dense one-photon scattering matrices.
//!
//! Mode indices are positive integers: mode `q` sits at frequency
//! `q * tone` above the positivity floor, and the carrier occupies
//! `q0 = ceil(carrier / tone)`. States are sparse maps from canonical
//! occupation keys (sorted `(port, mode, n)` entries, no zeros) to complex
//! amplitudes; the vacuum is the empty key. Operators act through the
//! adjoint action on creation operators, expanded photon by photon, which
//! keeps the bosonic factorial bookkeeping exact.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on total photons per term. Every worked example in the
/// applications uses at most two; four bounds the multinomial expansion.
pub const PHOTON_CAP: u32 = 4;

/// Amplitudes below this are dropped after each operator application.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// One of the two spatial ports of a splitter or modulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

impl Port {
    pub fn index(self) -> u8 {
        match self {
            Port::One => 1,
            Port::Two => 2,
        }
    }

    pub fn other(self) -> Port {
        match self {
            Port::One => Port::Two,
            Port::Two => Port::One,
        }
    }

    pub fn from_index(i: u8) -> Option<Port> {
        match i {
            1 => Some(Port::One),
            2 => Some(Port::Two),
            _ => None,
        }
    }
}

/// Indexed grid of positive optical frequencies `omega_q = q * tone` with a
/// finite window `[q_lo, q_hi]` around the carrier index `q0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLattice {
    carrier_freq: f64,
    tone: f64,
    q0: usize,
    q_lo: usize,
    q_hi: usize,
}

/// Build a lattice from physical frequencies (rad/s).
///
/// The carrier lands on `q0 = ceil(carrier_freq / tone)`; the window spans
/// `q0 +/- half_window` and must stay strictly above mode index zero.
pub fn make_lattice(carrier_freq: f64, tone: f64, half_window: usize) -> Result<ModeLattice> {
    if !carrier_freq.is_finite() || carrier_freq <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "carrier_freq",
            value: carrier_freq,
            domain: "finite and > 0",
        });
    }
    if !tone.is_finite() || tone <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "tone",
            value: tone,
            domain: "finite and > 0",
        });
    }
    let q0 = (carrier_freq / tone).ceil() as usize;
    let lowest = q0 as i64 - half_window as i64;
    if lowest < 1 {
        return Err(Error::WindowBelowFloor {
            lowest,
            carrier_index: q0,
            half_window,
        });
    }
    Ok(ModeLattice {
        carrier_freq,
        tone,
        q0,
        q_lo: q0 - half_window,
        q_hi: q0 + half_window,
    })
}

impl ModeLattice {
    pub fn q0(&self) -> usize {
        self.q0
    }

    pub fn q_lo(&self) -> usize {
        self.q_lo
    }

    pub fn q_hi(&self) -> usize {
        self.q_hi
    }

    pub fn tone(&self) -> f64 {
        self.tone
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn len(&self) -> usize {
        self.q_hi - self.q_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, q: usize) -> bool {
        (self.q_lo..=self.q_hi).contains(&q)
    }

    /// Optical frequency of mode `q` (rad/s): the carrier frequency plus the
    /// lattice offset from `q0`.
    pub fn frequency(&self, q: usize) -> f64 {
        self.carrier_freq + (q as f64 - self.q0 as f64) * self.tone
    }
}

/// One `(port, mode)` cell holding `n` photons in an occupation key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeOcc {
    pub port: Port,
    pub mode: usize,
    pub n: u32,
}

/// Canonical occupation key: sorted by (port, mode), no zero occupations,
/// no duplicate cells. The vacuum is the empty key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OccKey(Vec<ModeOcc>);

impl OccKey {
    pub fn vacuum() -> Self {
        OccKey(Vec::new())
    }

    /// Canonicalize an arbitrary occupation list: merge duplicates, drop
    /// zeros, sort.
    pub fn canonical(mut occs: Vec<ModeOcc>) -> Self {
        occs.sort_unstable();
        let mut merged: Vec<ModeOcc> = Vec::with_capacity(occs.len());
        for occ in occs {
            if occ.n == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.port == occ.port && last.mode == occ.mode => last.n += occ.n,
                _ => merged.push(occ),
            }
        }
        OccKey(merged)
    }

    pub fn entries(&self) -> &[ModeOcc] {
        &self.0
    }

    pub fn total_photons(&self) -> u32 {
        self.0.iter().map(|o| o.n).sum()
    }

    pub fn photons_on(&self, port: Port) -> u32 {
        self.0.iter().filter(|o| o.port == port).map(|o| o.n).sum()
    }

    /// The (mode, n) pairs on one port, in canonical order.
    pub fn port_occupations(&self, port: Port) -> Vec<(usize, u32)> {
        self.0
            .iter()
            .filter(|o| o.port == port)
            .map(|o| (o.mode, o.n))
            .collect()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Sparse multi-photon state over two ports.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortState {
    terms: BTreeMap<OccKey, Complex64>,
}

impl TwoPortState {
    /// The two-port vacuum.
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(OccKey::vacuum(), Complex64::new(1.0, 0.0));
        TwoPortState { terms }
    }

    /// |1_mode> on `port`, vacuum elsewhere.
    pub fn single_photon(port: Port, mode: usize) -> Self {
        let key = OccKey::canonical(vec![ModeOcc { port, mode, n: 1 }]);
        let mut terms = BTreeMap::new();
        terms.insert(key, Complex64::new(1.0, 0.0));
        TwoPortState { terms }
    }

    /// Build a state from explicit terms; enforces the photon cap.
    pub fn from_terms<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<ModeOcc>, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (occs, amp) in terms {
            let key = OccKey::canonical(occs);
            let total = key.total_photons();
            if total > PHOTON_CAP {
                return Err(Error::PhotonCap {
                    total,
                    cap: PHOTON_CAP,
                });
            }
            *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(TwoPortState { terms: map })
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OccKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, key: &OccKey) -> Complex64 {
        self.terms
            .get(key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_photons(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| k.total_photons())
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (k.clone(), a * factor))
            .collect();
        TwoPortState { terms }
    }

    /// Linear combination used when assembling reference states in tests.
    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, a) in &other.terms {
            *terms.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        let mut out = TwoPortState { terms };
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|k, a| {
            a.norm() > PRUNE_THRESHOLD || (k.entries().is_empty() && a.norm() > 0.0)
        });
    }

    fn check_cap(&self) -> Result<()> {
        let total = self.max_photons();
        if total > PHOTON_CAP {
            return Err(Error::PhotonCap {
                total,
                cap: PHOTON_CAP,
            });
        }
        Ok(())
    }

    /// Replace every creation operator on the ports selected by `affects`
    /// with the linear combination returned by `targets`, expanding photon
    /// by photon. Both the splitter action and one-photon matrix action are
    /// instances of this substitution.
    pub(crate) fn substitute<A, F>(&self, affects: A, targets: F) -> Result<TwoPortState>
    where
        A: Fn(Port) -> bool,
        F: Fn(Port, usize) -> Vec<(Port, usize, Complex64)>,
    {
        self.check_cap()?;
        let zero = Complex64::new(0.0, 0.0);
        let mut out: BTreeMap<OccKey, Complex64> = BTreeMap::new();

        for (key, amp) in &self.terms {
            let mut unaffected: Vec<ModeOcc> = Vec::new();
            let mut photons: Vec<(Port, usize)> = Vec::new();
            let mut norm_in = 1.0_f64;
            for occ in key.entries() {
                if affects(occ.port) {
                    for _ in 0..occ.n {
                        photons.push((occ.port, occ.mode));
                    }
                    norm_in /= factorial(occ.n).sqrt();
                } else {
                    unaffected.push(*occ);
                }
            }

            // Monomial accumulation: multiset of output cells -> coefficient.
            let mut monos: BTreeMap<Vec<(Port, usize)>, Complex64> = BTreeMap::new();
            monos.insert(Vec::new(), Complex64::new(1.0, 0.0));
            for (p, q) in photons {
                let subs = targets(p, q);
                let mut next: BTreeMap<Vec<(Port, usize)>, Complex64> = BTreeMap::new();
                for (mono, c) in &monos {
                    for (p2, q2, w) in &subs {
                        if *w == zero {
                            continue;
                        }
                        let mut m2 = mono.clone();
                        let pos = m2.partition_point(|cell| *cell <= (*p2, *q2));
                        m2.insert(pos, (*p2, *q2));
                        *next.entry(m2).or_insert(zero) += c * w;
                    }
                }
                monos = next;
            }

            for (mono, c) in monos {
                if c == zero {
                    continue;
                }
                let mut occs = unaffected.clone();
                let mut fact_out = 1.0_f64;
                let mut i = 0usize;
                while i < mono.len() {
                    let (p, q) = mono[i];
                    let mut n = 0u32;
                    while i < mono.len() && mono[i] == (p, q) {
                        n += 1;
                        i += 1;
                    }
                    fact_out *= factorial(n).sqrt();
                    occs.push(ModeOcc { port: p, mode: q, n });
                }
                let out_key = OccKey::canonical(occs);
                *out.entry(out_key).or_insert(zero) += amp * norm_in * c * fact_out;
            }
        }

        let mut state = TwoPortState { terms: out };
        state.prune();
        Ok(state)
    }

    /// Apply a one-photon scattering matrix to every creation operator on
    /// one port: `a+_q -> sum_k M[k][q] a+_k`, with exact bosonic
    /// recombination. Occupied modes must sit inside the matrix guard band.
    pub fn apply_one_photon_matrix(&self, port: Port, m: &OnePhotonMatrix) -> Result<TwoPortState> {
        let (lo, hi) = m.interior();
        for key in self.terms.keys() {
            for (mode, _) in key.port_occupations(port) {
                if !(m.q_lo()..=m.q_hi()).contains(&mode) {
                    return Err(Error::ModeOutsideWindow {
                        mode,
                        lo: m.q_lo(),
                        hi: m.q_hi(),
                    });
                }
                if !(lo..=hi).contains(&mode) {
                    return Err(Error::GuardBand { mode, lo, hi });
                }
            }
        }
        self.substitute(
            |p| p == port,
            |p, q| {
                debug_assert_eq!(p, port);
                let col = m.column(q);
                (m.q_lo()..=m.q_hi())
                    .zip(col)
                    .map(|(k, w)| (port, k, w))
                    .collect()
            },
        )
    }

    pub fn to_json(&self) -> String {
        let repr = StateRepr {
            terms: self
                .terms
                .iter()
                .map(|(k, a)| TermRepr {
                    ops: k
                        .entries()
                        .iter()
                        .map(|o| OccRepr {
                            port: o.port.index(),
                            mode: o.mode,
                            n: o.n,
                        })
                        .collect(),
                    amp: AmpRepr { re: a.re, im: a.im },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("state serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: StateRepr = serde_json::from_str(s).map_err(|e| Error::Serde(e.to_string()))?;
        let mut terms = Vec::new();
        for t in repr.terms {
            let mut occs = Vec::new();
            for o in t.ops {
                let port = Port::from_index(o.port)
                    .ok_or_else(|| Error::Serde(format!("invalid port index {}", o.port)))?;
                occs.push(ModeOcc {
                    port,
                    mode: o.mode,
                    n: o.n,
                });
            }
            terms.push((occs, Complex64::new(t.amp.re, t.amp.im)));
        }
        TwoPortState::from_terms(terms)
    }
}

/// Hermitian sesquilinear inner product over the canonical occupation basis,
/// conjugate-linear in the first argument.
pub fn inner_product(a: &TwoPortState, b: &TwoPortState) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (key, amp_a) in a.terms() {
        let amp_b = b.amplitude(key);
        acc += amp_a.conj() * amp_b;
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    ops: Vec<OccRepr>,
    amp: AmpRepr,
}

#[derive(Serialize, Deserialize)]
struct OccRepr {
    port: u8,
    mode: usize,
    n: u32,
}

#[derive(Serialize, Deserialize)]
struct AmpRepr {
    re: f64,
    im: f64,
}

/// Dense complex matrix of one-photon scattering amplitudes over a lattice
/// window: `entry(k, q)` is the amplitude from input mode `q` to output
/// mode `k`. Carries the guard band its builder declared.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePhotonMatrix {
    q_lo: usize,
    q_hi: usize,
    guard: usize,
    mat: DMatrix<Complex64>,
}

impl OnePhotonMatrix {
    pub fn from_fn<F>(q_lo: usize, q_hi: usize, guard: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Complex64,
    {
        if q_lo < 1 || q_hi < q_lo {
            return Err(Error::DimensionMismatch {
                detail: format!("invalid window [{q_lo}, {q_hi}]"),
            });
        }
        let dim = q_hi - q_lo + 1;
        if dim <= 2 * guard {
            return Err(Error::WindowTooNarrow {
                lo: q_lo,
                hi: q_hi,
                guard,
            });
        }
        let mat = DMatrix::from_fn(dim, dim, |ki, qi| f(q_lo + ki, q_lo + qi));
        Ok(OnePhotonMatrix {
            q_lo,
            q_hi,
            guard,
            mat,
        })
    }

    pub fn identity(q_lo: usize, q_hi: usize) -> Result<Self> {
        Self::from_fn(q_lo, q_hi, 0, |k, q| {
            if k == q {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn q_lo(&self) -> usize {
        self.q_lo
    }

    pub fn q_hi(&self) -> usize {
        self.q_hi
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    /// Absolute index range at least `guard` away from both window edges.
    pub fn interior(&self) -> (usize, usize) {
        (self.q_lo + self.guard, self.q_hi - self.guard)
    }

    pub fn entry(&self, k: usize, q: usize) -> Complex64 {
        self.mat[(k - self.q_lo, q - self.q_lo)]
    }

    pub fn column(&self, q: usize) -> Vec<Complex64> {
        self.mat.column(q - self.q_lo).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    fn same_window(&self, other: &Self) -> Result<()> {
        if self.q_lo != other.q_lo || self.q_hi != other.q_hi {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "windows [{}, {}] vs [{}, {}]",
                    self.q_lo, self.q_hi, other.q_lo, other.q_hi
                ),
            });
        }
        Ok(())
    }

    /// `self` applied after `rhs`; guard bands add because scattering bands
    /// do.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.same_window(rhs)?;
        Ok(OnePhotonMatrix {
            q_lo: self.q_lo,
            q_hi: self.q_hi,
            guard: self.guard + rhs.guard,
            mat: &self.mat * &rhs.mat,
        })
    }

    /// `a * ma + b * mb` over a shared window; guard is the larger of the
    /// two.
    pub fn linear_combination(
        a: Complex64,
        ma: &Self,
        b: Complex64,
        mb: &Self,
    ) -> Result<Self> {
        ma.same_window(mb)?;
        Ok(OnePhotonMatrix {
            q_lo: ma.q_lo,
            q_hi: ma.q_hi,
            guard: ma.guard.max(mb.guard),
            mat: &ma.mat * a + &mb.mat * b,
        })
    }

    pub fn adjoint(&self) -> Self {
        OnePhotonMatrix {
            q_lo: self.q_lo,
            q_hi: self.q_hi,
            guard: self.guard,
            mat: self.mat.adjoint(),
        }
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                detail: format!("vector length {} vs window {}", v.len(), self.dim()),
            });
        }
        let x = nalgebra::DVector::from_column_slice(v);
        Ok((&self.mat * x).iter().copied().collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest excess of any column norm above 1; truncation of a unitary
    /// can only lose amplitude, so this should stay at rounding level.
    pub fn max_column_norm_excess(&self) -> f64 {
        (0..self.dim())
            .map(|c| self.mat.column(c).norm() - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
