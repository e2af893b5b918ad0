//! Quantum scattering models of electro-optic phase and amplitude modulators.
//!
//! The crate represents optical frequency content on a lattice of discrete
//! modes spaced by the RF drive tone, builds the exact single-tone
//! phase-modulation unitary together with its classical (optical-limit)
//! approximation, composes amplitude modulators out of two splitters and two
//! modulated arms, and layers the applications on top: sideband presets,
//! frequency-coded QKD, two-photon entanglement switching, wavepacket-level
//! modulation, Hong-Ou-Mandel coincidences, and the quantum-operation
//! (Kraus) view of lossy amplitude modulation.

pub mod amp_mod;
pub mod error;
pub mod mode_space;
pub mod numerics;
pub mod phase_mod;
pub mod qkd;
pub mod quantum_channel;
pub mod splitters;
pub mod wavepacket;

pub use error::{Error, Result};
