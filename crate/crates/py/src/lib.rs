//! Python bindings: the main types and operations exposed as a small
//! extension module named `qeom`.
//!
//! Build with `cargo build -p qeom-py --release`, then import the produced
//! `libqeom.so` as `qeom.so` (see `python/smoke_test.py`).

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qeom_core::amp_mod::{self, EomPreset};
use qeom_core::mode_space::{make_lattice, ModeOcc, OccKey, Port};
use qeom_core::phase_mod::{self, SidebandSpectrum, ToneConfig};
use qeom_core::qkd::{self, SessionConfig, StateLabel};
use qeom_core::quantum_channel::{apply_channel, OnePhotonDensity};
use qeom_core::wavepacket::{self, DriveSignal, TimeGrid};

fn err(e: qeom_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_preset(name: &str) -> PyResult<EomPreset> {
    match name {
        "dsb_quadrature" => Ok(EomPreset::DsbQuadrature),
        "ssb_lower_suppressed" => Ok(EomPreset::SsbLowerSuppressed),
        "ssb_upper_suppressed" => Ok(EomPreset::SsbUpperSuppressed),
        other => Err(PyValueError::new_err(format!("unknown preset `{other}`"))),
    }
}

fn parse_label(name: &str) -> PyResult<StateLabel> {
    StateLabel::parse(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown state label `{name}`")))
}

/// Bessel function of the first kind J_n(x).
#[pyfunction]
fn bessel_j(n: i64, x: f64) -> PyResult<f64> {
    qeom_core::numerics::bessel_j(n, x).map_err(err)
}

/// Modified Bessel function I_0(x).
#[pyfunction]
fn bessel_i0(x: f64) -> PyResult<f64> {
    qeom_core::numerics::bessel_i0(x).map_err(err)
}

/// Carson truncation band ceil(m) + 1.
#[pyfunction]
fn carson_band(m: f64) -> usize {
    phase_mod::carson_band(m)
}

/// Classical sideband rows (offset, re, im, power) for |n| <= n_max.
#[pyfunction]
#[pyo3(signature = (m, theta=0.0, phi_b=0.0, n_max=None))]
fn sideband_spectrum(
    m: f64,
    theta: f64,
    phi_b: f64,
    n_max: Option<usize>,
) -> PyResult<Vec<(i64, f64, f64, f64)>> {
    let cfg = ToneConfig::new(m, theta, phi_b).map_err(err)?;
    let n_max = n_max.unwrap_or(phase_mod::carson_band(m) + 2);
    let spec = SidebandSpectrum::single_tone(&cfg, n_max);
    Ok(spec
        .offsets
        .iter()
        .zip(&spec.coeffs)
        .map(|(n, c)| (*n, c.re, c.im, c.norm_sqr()))
        .collect())
}

/// Port-resolved sideband powers (port, offset, power) of a preset
/// modulator driven at index m, single photon on the carrier.
#[pyfunction]
#[pyo3(signature = (preset, m, offset_max=None))]
fn eom_sideband_table(
    preset: &str,
    m: f64,
    offset_max: Option<usize>,
) -> PyResult<Vec<(u8, i64, f64)>> {
    let cfg = amp_mod::preset(parse_preset(preset)?, m).map_err(err)?;
    let offset_max = offset_max.unwrap_or(phase_mod::carson_band(m) + 2);
    let half = cfg.guard_band() + offset_max + 1;
    let lattice = make_lattice(4.0 * half as f64, 1.0, half).map_err(err)?;
    let q0 = lattice.q0();
    let out = amp_mod::eom_one_photon(&cfg, Port::One, q0, &lattice).map_err(err)?;
    let mut rows = Vec::new();
    for port in [Port::One, Port::Two] {
        for s in -(offset_max as i64)..=offset_max as i64 {
            let key = OccKey::canonical(vec![ModeOcc {
                port,
                mode: (q0 as i64 + s) as usize,
                n: 1,
            }]);
            rows.push((port.index(), s, out.amplitude(&key).norm_sqr()));
        }
    }
    Ok(rows)
}

/// (p_D1, p_D2) when Bob measures the given BB84 state ("+1", "-1", "+2",
/// "-2") in basis 1 or 2.
#[pyfunction]
fn bob_measure_probs(label: &str, basis: u8) -> PyResult<(f64, f64)> {
    let state = qkd::alice_state(parse_label(label)?);
    qkd::bob_measure_probs(&state, basis).map_err(err)
}

/// The two modulation indices solved at startup: (basis-1 index ~1.161,
/// carrier-null index ~2.405).
#[pyfunction]
fn qkd_indices() -> (f64, f64) {
    (qkd::basis_one_index(), qkd::carrier_null_index())
}

/// Run a Monte Carlo QKD session; returns a dict of counts and rates.
#[pyfunction]
#[pyo3(signature = (trials, seed, rates=None, force_basis=None))]
fn qkd_session(
    py: Python<'_>,
    trials: u64,
    seed: u64,
    rates: Option<[f64; 4]>,
    force_basis: Option<u8>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let cfg = SessionConfig {
        trials,
        rates: rates.unwrap_or([0.25; 4]),
        seed,
        forced_bob_basis: force_basis,
    };
    let stats = qkd::run_session(&cfg).map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("counts", stats.counts.to_vec())?;
    dict.set_item("trials", stats.trials)?;
    dict.set_item("sifted", stats.sifted)?;
    dict.set_item("errors", stats.errors)?;
    dict.set_item("sift_rate", stats.sift_rate)?;
    dict.set_item("qber", stats.qber)?;
    dict.set_item("seed", stats.seed)?;
    Ok(dict.unbind())
}

/// Structure coefficients of the two-photon switch at bias difference
/// `delta_phi_b`: ((re, im) of the cross term, (re, im) of the same-port
/// term).
#[pyfunction]
fn switch_coefficients(delta_phi_b: f64) -> ((f64, f64), (f64, f64)) {
    let (cross, same) = amp_mod::switch_coefficients(delta_phi_b);
    ((cross.re, cross.im), (same.re, same.im))
}

/// (p0, p1) of the one-photon modulation channel for a carrier input.
#[pyfunction]
fn channel_probs(preset: &str, m: f64) -> PyResult<(f64, f64)> {
    let cfg = amp_mod::preset(parse_preset(preset)?, m).map_err(err)?;
    let half = cfg.guard_band() + 4;
    let lattice = make_lattice(4.0 * half as f64, 1.0, half).map_err(err)?;
    let rho = OnePhotonDensity::mixed_over_modes(lattice.q_lo(), lattice.q_hi(), &[lattice.q0()])
        .map_err(err)?;
    let out = apply_channel(&rho, &cfg, &lattice).map_err(err)?;
    Ok((out.p0, out.p1))
}

/// Hong-Ou-Mandel densities (same_1, same_2, cross) for a Gaussian packet
/// with a phase step.
#[pyfunction]
fn hom_probabilities(
    sigma: f64,
    alpha_step: f64,
    step_time: f64,
    t1: f64,
    t2: f64,
) -> PyResult<(f64, f64, f64)> {
    let n = 256usize;
    let span = 16.0 * sigma;
    let grid = TimeGrid::new(-span / 2.0, span / n as f64, n).map_err(err)?;
    let packet = wavepacket::Wavepacket::gaussian(grid, 0.0, sigma, 0.0).map_err(err)?;
    let alpha: Vec<f64> = grid
        .times()
        .map(|t| if t < step_time { 0.0 } else { alpha_step })
        .collect();
    let p = wavepacket::hom_coincidences(&packet, &alpha, t1, t2).map_err(err)?;
    Ok((p.same_port_1, p.same_port_2, p.cross_port))
}

/// A sampled single-photon envelope on a uniform grid.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Wavepacket {
    inner: wavepacket::Wavepacket,
}

#[pymethods]
impl Wavepacket {
    /// Normalized Gaussian packet on an n-point grid starting at t0.
    #[staticmethod]
    #[pyo3(signature = (t0, dt, n, t_center=0.0, sigma=1.0, carrier=0.0))]
    fn gaussian(
        t0: f64,
        dt: f64,
        n: usize,
        t_center: f64,
        sigma: f64,
        carrier: f64,
    ) -> PyResult<Self> {
        let grid = TimeGrid::new(t0, dt, n).map_err(err)?;
        let inner =
            wavepacket::Wavepacket::gaussian(grid, t_center, sigma, carrier).map_err(err)?;
        Ok(Wavepacket { inner })
    }

    fn norm_sq(&self) -> f64 {
        self.inner.norm_sq()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.grid.times().collect()
    }

    fn samples(&self) -> Vec<(f64, f64)> {
        self.inner.samples.iter().map(|s| (s.re, s.im)).collect()
    }

    /// Amplitude-modulate through a preset; returns (output, radiated).
    #[pyo3(signature = (preset, m, tone_bins=8))]
    fn modulate(&self, preset: &str, m: f64, tone_bins: usize) -> PyResult<(Self, Self)> {
        let cfg = amp_mod::preset(parse_preset(preset)?, m).map_err(err)?;
        let grid = self.inner.grid;
        let omega = tone_bins as f64 * grid.omega_bin();
        let d1 = DriveSignal::single_tone(grid, omega, cfg.arm1.theta).map_err(err)?;
        let d2 = DriveSignal::single_tone(grid, omega, cfg.arm2.theta).map_err(err)?;
        let (out, rad) =
            wavepacket::modulate_wavepacket(&cfg, &self.inner, &d1, &d2).map_err(err)?;
        Ok((Wavepacket { inner: out }, Wavepacket { inner: rad }))
    }

    /// Pointwise phase modulation by a single tone of index m.
    #[pyo3(signature = (phi_b, m, theta=0.0, tone_bins=8))]
    fn phase_modulate(&self, phi_b: f64, m: f64, theta: f64, tone_bins: usize) -> PyResult<Self> {
        let grid = self.inner.grid;
        let omega = tone_bins as f64 * grid.omega_bin();
        let drive = DriveSignal::single_tone(grid, omega, theta).map_err(err)?;
        let inner =
            wavepacket::phase_modulate_wavepacket(&self.inner, phi_b, m, &drive).map_err(err)?;
        Ok(Wavepacket { inner })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

/// Exact one-photon scattering amplitude S_{k,q} of a single-tone phase
/// modulator; returns (re, im).
#[pyfunction]
fn exact_coeff(m: f64, theta: f64, phi_b: f64, k: usize, q: usize) -> PyResult<(f64, f64)> {
    let cfg = ToneConfig::new(m, theta, phi_b).map_err(err)?;
    let v: Complex64 = phase_mod::exact_coeff(&cfg, k, q);
    Ok((v.re, v.im))
}

#[pymodule]
fn qeom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_i0, m)?)?;
    m.add_function(wrap_pyfunction!(carson_band, m)?)?;
    m.add_function(wrap_pyfunction!(sideband_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(eom_sideband_table, m)?)?;
    m.add_function(wrap_pyfunction!(bob_measure_probs, m)?)?;
    m.add_function(wrap_pyfunction!(qkd_indices, m)?)?;
    m.add_function(wrap_pyfunction!(qkd_session, m)?)?;
    m.add_function(wrap_pyfunction!(switch_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(channel_probs, m)?)?;
    m.add_function(wrap_pyfunction!(hom_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(exact_coeff, m)?)?;
    m.add_class::<Wavepacket>()?;
    Ok(())
}
