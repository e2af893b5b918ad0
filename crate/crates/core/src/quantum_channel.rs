//! Amplitude modulation as a trace-preserving quantum operation.
//!
//! Feeding port 1 and tracing out the radiative port turns the modulator
//! unitary into a channel. For one-photon inputs the channel is carried by
//! two operators read off the route coefficients,
//!
//! ```text
//! V = (1 -> arm1 -> 1) S_PM1 + (1 -> arm2 -> 1) S_PM2
//! W = (1 -> arm1 -> 2) S_PM1 + (1 -> arm2 -> 2) S_PM2
//! ```
//!
//! with V+V + W+W = 1 on the window interior. The Kraus family is K_0 = V
//! plus one vacuum-producing operator per lattice mode, K(omega_k) =
//! |vac><1_k| W. For n-photon inputs the output commutes with the port
//! photon number and decomposes into blocks with at most n photons.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::amp_mod::{arm_matrices, EomConfig};
use crate::error::{Error, Result};
use crate::mode_space::{ModeLattice, OnePhotonMatrix, Port, TwoPortState};

/// Hermitian positive semidefinite unit-trace matrix over a lattice window,
/// one photon on one port.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePhotonDensity {
    q_lo: usize,
    q_hi: usize,
    mat: DMatrix<Complex64>,
}

impl OnePhotonDensity {
    pub fn new(q_lo: usize, q_hi: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        let dim = q_hi - q_lo + 1;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::InvalidDensity {
                detail: format!("matrix is {}x{}, window wants {dim}", mat.nrows(), mat.ncols()),
            });
        }
        let herm = (&mat - mat.adjoint()).map(|v| v.norm()).max();
        if herm > 1e-12 {
            return Err(Error::InvalidDensity {
                detail: format!("hermiticity defect {herm:.3e}"),
            });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-12 {
            return Err(Error::InvalidDensity {
                detail: format!("trace {trace} is not 1"),
            });
        }
        let min_eig = min_eigenvalue(&mat);
        if min_eig < -1e-10 {
            return Err(Error::InvalidDensity {
                detail: format!("negative eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(OnePhotonDensity { q_lo, q_hi, mat })
    }

    /// Pure state |psi><psi| from amplitudes over the window; the vector is
    /// normalized first.
    pub fn from_pure(q_lo: usize, q_hi: usize, psi: &[Complex64]) -> Result<Self> {
        let dim = q_hi - q_lo + 1;
        if psi.len() != dim {
            return Err(Error::InvalidDensity {
                detail: format!("{} amplitudes on a {dim}-mode window", psi.len()),
            });
        }
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidDensity {
                detail: "zero state vector".into(),
            });
        }
        let v = nalgebra::DVector::from_iterator(dim, psi.iter().map(|a| a / norm));
        let mat = &v * v.adjoint();
        OnePhotonDensity::new(q_lo, q_hi, mat)
    }

    /// Equal mixture of single photons at the given absolute modes.
    pub fn mixed_over_modes(q_lo: usize, q_hi: usize, modes: &[usize]) -> Result<Self> {
        let dim = q_hi - q_lo + 1;
        let mut mat = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        let w = 1.0 / modes.len() as f64;
        for &m in modes {
            if !(q_lo..=q_hi).contains(&m) {
                return Err(Error::ModeOutsideWindow {
                    mode: m,
                    lo: q_lo,
                    hi: q_hi,
                });
            }
            let i = m - q_lo;
            mat[(i, i)] += Complex64::new(w, 0.0);
        }
        OnePhotonDensity::new(q_lo, q_hi, mat)
    }

    pub fn q_lo(&self) -> usize {
        self.q_lo
    }

    pub fn q_hi(&self) -> usize {
        self.q_hi
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.mat)
    }
}

fn min_eigenvalue(mat: &DMatrix<Complex64>) -> f64 {
    if mat.nrows() == 0 {
        return 0.0;
    }
    // Symmetrize against rounding before the Hermitian eigensolver.
    let h = (mat + mat.adjoint()).scale(0.5);
    nalgebra::SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Exit probabilities and the conditional one-photon output of the channel.
#[derive(Debug, Clone)]
pub struct ChannelResult {
    /// Probability that the photon is radiated (vacuum at the output port).
    pub p0: f64,
    /// Probability that the photon exits the physical port.
    pub p1: f64,
    /// Conditional output state; absent when p1 is numerically zero.
    pub conditional: Option<OnePhotonDensity>,
}

/// The V/W pair over a lattice window. V+V + W+W deviates from the identity
/// only by window truncation, which the guard band keeps below 1e-10 on the
/// interior.
pub fn vw_operators(
    cfg: &EomConfig,
    lattice: &ModeLattice,
) -> Result<(OnePhotonMatrix, OnePhotonMatrix)> {
    let (s1, s2) = arm_matrices(cfg, lattice)?;
    let v = OnePhotonMatrix::linear_combination(
        cfg.route(Port::One, 1, Port::One),
        &s1,
        cfg.route(Port::One, 2, Port::One),
        &s2,
    )?;
    let w = OnePhotonMatrix::linear_combination(
        cfg.route(Port::One, 1, Port::Two),
        &s1,
        cfg.route(Port::One, 2, Port::Two),
        &s2,
    )?;
    Ok((v, w))
}

/// Apply the one-photon channel: p1 = tr[V rho V+], p0 = tr[W rho W+],
/// conditional output V rho V+ / p1.
pub fn apply_channel(
    rho: &OnePhotonDensity,
    cfg: &EomConfig,
    lattice: &ModeLattice,
) -> Result<ChannelResult> {
    if rho.q_lo() != lattice.q_lo() || rho.q_hi() != lattice.q_hi() {
        return Err(Error::DimensionMismatch {
            detail: "density window differs from the lattice window".into(),
        });
    }
    let (v, w) = vw_operators(cfg, lattice)?;
    let out1 = v.matrix() * rho.matrix() * v.matrix().adjoint();
    let out0 = w.matrix() * rho.matrix() * w.matrix().adjoint();
    let p1 = out1.trace().re;
    let p0 = out0.trace().re;
    let conditional = if p1 > 1e-12 {
        Some(OnePhotonDensity::new(
            rho.q_lo(),
            rho.q_hi(),
            out1.unscale(p1),
        )?)
    } else {
        None
    };
    Ok(ChannelResult {
        p0,
        p1,
        conditional,
    })
}

/// Agreement figures between the direct channel application and its
/// operator-sum (Kraus) reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct KrausReport {
    /// Max elementwise difference between V rho V+ and K_0 rho K_0+.
    pub one_photon_block_diff: f64,
    /// |p0 - sum_k <1_k| W rho W+ |1_k>|.
    pub vacuum_weight_diff: f64,
    /// Max elementwise deviation of K_0+K_0 + sum_k K(w_k)+K(w_k) from the
    /// identity on the guarded interior.
    pub completeness_defect: f64,
}

/// Rebuild the channel from K_0 = V and the discretized family
/// K(omega_k) = |vac><1_k| W, and compare against `apply_channel`.
pub fn kraus_consistency(
    rho: &OnePhotonDensity,
    cfg: &EomConfig,
    lattice: &ModeLattice,
) -> Result<KrausReport> {
    let direct = apply_channel(rho, cfg, lattice)?;
    let (v, w) = vw_operators(cfg, lattice)?;

    // K_0 route.
    let k0_block = v.matrix() * rho.matrix() * v.matrix().adjoint();
    let direct_block = match &direct.conditional {
        Some(cond) => cond.matrix().scale(direct.p1),
        None => DMatrix::from_element(v.dim(), v.dim(), Complex64::new(0.0, 0.0)),
    };
    let one_photon_block_diff = (&k0_block - &direct_block).map(|x| x.norm()).max();

    // K(omega_k) route: each operator contributes the diagonal element
    // (W rho W+)_{kk} to the vacuum weight.
    let wrw = w.matrix() * rho.matrix() * w.matrix().adjoint();
    let vacuum_weight: f64 = (0..w.dim()).map(|k| wrw[(k, k)].re).sum();
    let vacuum_weight_diff = (vacuum_weight - direct.p0).abs();

    // Completeness: V+V + sum_k W+|1_k><1_k|W = V+V + W+W.
    let sum = v.matrix().adjoint() * v.matrix() + w.matrix().adjoint() * w.matrix();
    let guard = v.guard().max(w.guard());
    let lo = guard;
    let hi = v.dim() - guard;
    let mut completeness_defect = 0.0_f64;
    for i in lo..hi {
        for j in lo..hi {
            let want = if i == j { 1.0 } else { 0.0 };
            completeness_defect =
                completeness_defect.max((sum[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }

    Ok(KrausReport {
        one_photon_block_diff,
        vacuum_weight_diff,
        completeness_defect,
    })
}

/// Canonical single-port occupation: sorted (mode, n) pairs.
pub type PortKey = Vec<(usize, u32)>;

/// Reduced density matrix of one port of an ensemble of two-port pure
/// states, expressed over the port occupation keys that actually occur.
#[derive(Debug, Clone)]
pub struct PortDensity {
    pub keys: Vec<PortKey>,
    pub mat: DMatrix<Complex64>,
}

/// Trace out the complement of `keep` from a weighted ensemble of pure
/// two-port states.
pub fn partial_trace(ensemble: &[(f64, TwoPortState)], keep: Port) -> PortDensity {
    use std::collections::BTreeMap;
    let other = keep.other();

    // Collect every kept-port key that occurs, in canonical order.
    let mut key_index: BTreeMap<PortKey, usize> = BTreeMap::new();
    for (_, state) in ensemble {
        for (key, _) in state.terms() {
            key_index.entry(key.port_occupations(keep)).or_insert(0);
        }
    }
    for (i, v) in key_index.values_mut().enumerate() {
        *v = i;
    }
    let keys: Vec<PortKey> = key_index.keys().cloned().collect();
    let dim = keys.len();
    let mut mat = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));

    for (weight, state) in ensemble {
        // Group amplitudes by the traced-out key.
        let mut groups: BTreeMap<PortKey, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (key, amp) in state.terms() {
            let kept = key.port_occupations(keep);
            let traced = key.port_occupations(other);
            groups
                .entry(traced)
                .or_default()
                .push((key_index[&kept], *amp));
        }
        for members in groups.values() {
            for (i, ai) in members {
                for (j, aj) in members {
                    mat[(*i, *j)] += Complex64::new(*weight, 0.0) * ai * aj.conj();
                }
            }
        }
    }
    PortDensity { keys, mat }
}

/// One photon-number block of a reduced port density.
#[derive(Debug, Clone)]
pub struct NumberBlock {
    pub photons: u32,
    pub weight: f64,
    pub keys: Vec<PortKey>,
    pub mat: DMatrix<Complex64>,
    pub min_eigenvalue: f64,
}

/// Photon-number block decomposition of a reduced port density.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub blocks: Vec<NumberBlock>,
    /// Largest off-block element; must vanish for a number-conserving
    /// evolution.
    pub commutator_defect: f64,
}

fn key_photons(key: &PortKey) -> u32 {
    key.iter().map(|(_, n)| n).sum()
}

/// Decompose the reduced density of `keep` into photon-number blocks
/// Lambda_k, k = 0..=expected_n: verifies the block structure, positivity
/// of every block, and that the weights sum to one.
pub fn block_decompose(
    ensemble: &[(f64, TwoPortState)],
    keep: Port,
    expected_n: u32,
) -> Result<BlockDecomposition> {
    let rho = partial_trace(ensemble, keep);
    let dim = rho.keys.len();

    let mut commutator_defect = 0.0_f64;
    for i in 0..dim {
        for j in 0..dim {
            if key_photons(&rho.keys[i]) != key_photons(&rho.keys[j]) {
                commutator_defect = commutator_defect.max(rho.mat[(i, j)].norm());
            }
        }
    }
    if commutator_defect > 1e-10 {
        return Err(Error::NumberBlockViolation {
            defect: commutator_defect,
        });
    }

    let max_photons = rho.keys.iter().map(key_photons).max().unwrap_or(0);
    let mut blocks = Vec::new();
    let mut total_weight = 0.0_f64;
    for k in 0..=max_photons.max(expected_n) {
        let idx: Vec<usize> = (0..dim)
            .filter(|i| key_photons(&rho.keys[*i]) == k)
            .collect();
        let bdim = idx.len();
        let mut mat = DMatrix::from_element(bdim, bdim, Complex64::new(0.0, 0.0));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                mat[(a, b)] = rho.mat[(i, j)];
            }
        }
        let weight = mat.trace().re;
        if k > expected_n && weight > 1e-12 {
            return Err(Error::BlockBeyondInput { k, weight });
        }
        if weight < -1e-12 {
            return Err(Error::InvalidDensity {
                detail: format!("block {k} has negative weight {weight:.3e}"),
            });
        }
        let min_eigenvalue = min_eigenvalue(&mat);
        if min_eigenvalue < -1e-10 {
            return Err(Error::InvalidDensity {
                detail: format!("block {k} has negative eigenvalue {min_eigenvalue:.3e}"),
            });
        }
        total_weight += weight;
        if k <= expected_n {
            blocks.push(NumberBlock {
                photons: k,
                weight,
                keys: idx.iter().map(|&i| rho.keys[i].clone()).collect(),
                mat,
                min_eigenvalue,
            });
        }
    }
    if (total_weight - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidDensity {
            detail: format!("block weights sum to {total_weight}, not 1"),
        });
    }
    Ok(BlockDecomposition {
        blocks,
        commutator_defect,
    })
}
