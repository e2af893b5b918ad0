//! Composed electro-optic amplitude modulator: a Mach-Zehnder interferometer
//! with one phase modulator per arm between two splitters.
//!
//! Route coefficients follow from the splitter convention fixed in
//! `splitters`: from input port 1 the arms are entered with (t'_i, r'_i),
//! from port 2 with (r_i, t_i); arm 1 exits toward (t'_o, r'_o) and arm 2
//! toward (r_o, t_o). Arm 1 is the path fed by the t-route of the input
//! splitter. The classical modulation matrix, the quantum one- and
//! two-photon responses, and the V/W channel operators all read their
//! coefficients off this one map, so the quantum and classical descriptions
//! stay consistent by construction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_space::{ModeLattice, OnePhotonMatrix, Port, TwoPortState};
use crate::phase_mod::{exact_matrix, ToneConfig};
use crate::splitters::{make_splitter, split_one_photon, SplitterCoeffs, SplitterKind};
use crate::wavepacket::DriveSignal;

/// Full parameter bundle of one amplitude modulator.
#[derive(Debug, Clone, PartialEq)]
pub struct EomConfig {
    pub input: SplitterCoeffs,
    pub output: SplitterCoeffs,
    pub arm1: ToneConfig,
    pub arm2: ToneConfig,
    /// Single-drive (asymmetric) modulator: arm 1 is the identity.
    pub asymmetric: bool,
}

impl EomConfig {
    pub fn new(
        input: SplitterCoeffs,
        output: SplitterCoeffs,
        arm1: ToneConfig,
        arm2: ToneConfig,
    ) -> Result<Self> {
        for s in [&input, &output] {
            let defect = s.unitarity_defect();
            if defect > crate::splitters::UNITARITY_TOL {
                return Err(Error::InvalidSplitter { defect });
            }
        }
        Ok(EomConfig {
            input,
            output,
            arm1,
            arm2,
            asymmetric: false,
        })
    }

    pub fn asymmetric(mut self) -> Self {
        self.asymmetric = true;
        self
    }

    /// Coefficients with which `port` feeds (arm 1, arm 2).
    pub fn into_arms(&self, port: Port) -> (Complex64, Complex64) {
        match port {
            Port::One => (self.input.t_prime, self.input.r_prime),
            Port::Two => (self.input.r, self.input.t),
        }
    }

    /// Coefficients with which an arm feeds (output port 1, output port 2).
    pub fn out_of_arm(&self, arm: usize) -> (Complex64, Complex64) {
        match arm {
            1 => (self.output.t_prime, self.output.r_prime),
            2 => (self.output.r, self.output.t),
            _ => unreachable!("arms are 1 and 2"),
        }
    }

    /// Route coefficient input `port` -> `arm` -> output `out`.
    pub fn route(&self, port: Port, arm: usize, out: Port) -> Complex64 {
        let (a1, a2) = self.into_arms(port);
        let enter = if arm == 1 { a1 } else { a2 };
        let (o1, o2) = self.out_of_arm(arm);
        let exit = match out {
            Port::One => o1,
            Port::Two => o2,
        };
        enter * exit
    }

    /// Largest guard band of the two arms.
    pub fn guard_band(&self) -> usize {
        if self.asymmetric {
            self.arm2.guard_band()
        } else {
            self.arm1.guard_band().max(self.arm2.guard_band())
        }
    }
}

/// Standard settings of the dual-drive Y-branch modulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EomPreset {
    /// Quadrature-biased double sideband: even harmonics vanish at the
    /// output port.
    DsbQuadrature,
    /// Single sideband with the lower first-order sideband cancelled.
    SsbLowerSuppressed,
    /// Single sideband with the upper first-order sideband cancelled.
    SsbUpperSuppressed,
}

/// Build a preset configuration with balanced y-branch splitters.
///
/// DSB in quadrature uses m1 = m2 = m, theta1 = 0, theta2 = pi,
/// phi_B1 = -phi_B2 = pi/2. The SSB settings use phi_B1 = pi/2, phi_B2 = 0
/// and put arm 2 in RF quadrature; with the sign convention of
/// `phase_mod::exact_coeff` (`e^{-i theta (k-q)}`), theta2 = -pi/2 cancels
/// the lower sideband and theta2 = +pi/2 the upper one, reproducing
/// S-bar_{n-1,n} = -S_{n-1,n} exactly.
pub fn preset(kind: EomPreset, m: f64) -> Result<EomConfig> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let input = make_splitter(SplitterKind::YBranchSplit, 0.5)?;
    let output = make_splitter(SplitterKind::YBranchCombine, 0.5)?;
    let (theta2, phi_b1, phi_b2) = match kind {
        EomPreset::DsbQuadrature => (PI, FRAC_PI_2, -FRAC_PI_2),
        EomPreset::SsbLowerSuppressed => (-FRAC_PI_2, FRAC_PI_2, 0.0),
        EomPreset::SsbUpperSuppressed => (FRAC_PI_2, FRAC_PI_2, 0.0),
    };
    EomConfig::new(
        input,
        output,
        ToneConfig::new(m, 0.0, phi_b1)?,
        ToneConfig::new(m, theta2, phi_b2)?,
    )
}

/// The two arm scattering matrices over a lattice window (arm 1 is the
/// identity for asymmetric modulators).
pub fn arm_matrices(
    cfg: &EomConfig,
    lattice: &ModeLattice,
) -> Result<(OnePhotonMatrix, OnePhotonMatrix)> {
    let s2 = exact_matrix(&cfg.arm2, lattice)?;
    let s1 = if cfg.asymmetric {
        OnePhotonMatrix::identity(lattice.q_lo(), lattice.q_hi())?
    } else {
        exact_matrix(&cfg.arm1, lattice)?
    };
    Ok((s1, s2))
}

/// Scatter an arbitrary (capped) two-port state through the modulator:
/// input splitter, per-arm phase modulation, output splitter.
pub fn eom_apply(
    cfg: &EomConfig,
    state: &TwoPortState,
    lattice: &ModeLattice,
) -> Result<TwoPortState> {
    let (s1, s2) = arm_matrices(cfg, lattice)?;
    let split_in = split_one_photon(&cfg.input, state)?;
    let arm1_done = split_in.apply_one_photon_matrix(Port::One, &s1)?;
    let arm2_done = arm1_done.apply_one_photon_matrix(Port::Two, &s2)?;
    split_one_photon(&cfg.output, &arm2_done)
}

/// Response to a single photon in mode `q` of `input_port`.
pub fn eom_one_photon(
    cfg: &EomConfig,
    input_port: Port,
    mode: usize,
    lattice: &ModeLattice,
) -> Result<TwoPortState> {
    eom_apply(cfg, &TwoPortState::single_photon(input_port, mode), lattice)
}

/// Structure coefficients of the two-photon switch output
/// e^{i d} sin(d)/2 [b+b+ x 1 - 1 x b+b+] - e^{i d} cos(d) [b+ x b+]:
/// returns (cross term, same-port magnitude term).
pub fn switch_coefficients(delta_phi_b: f64) -> (Complex64, Complex64) {
    let phase = Complex64::from_polar(1.0, delta_phi_b);
    (
        -phase * delta_phi_b.cos(),
        phase * delta_phi_b.sin() * 0.5,
    )
}

/// Two photons (one per port, same mode) through a directional-coupler
/// modulator with equal arm drives and bias difference `delta_phi_b`.
/// At 0 the output is a product state; at pi/2 it is the entangled
/// difference of double occupations.
pub fn eom_two_photon_switch(
    delta_phi_b: f64,
    m: f64,
    theta: f64,
    mode: usize,
    lattice: &ModeLattice,
) -> Result<TwoPortState> {
    let cfg = EomConfig::new(
        make_splitter(SplitterKind::DirectionalCoupler, 0.5)?,
        make_splitter(SplitterKind::DirectionalCoupler, 0.5)?,
        ToneConfig::new(m, theta, 0.0)?,
        ToneConfig::new(m, theta, delta_phi_b)?,
    )?;
    let input = TwoPortState::from_terms(vec![(
        vec![
            crate::mode_space::ModeOcc {
                port: Port::One,
                mode,
                n: 1,
            },
            crate::mode_space::ModeOcc {
                port: Port::Two,
                mode,
                n: 1,
            },
        ],
        Complex64::new(1.0, 0.0),
    )])?;
    eom_apply(&cfg, &input, lattice)
}

/// Sampled classical modulation matrix m_ab(t) on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EomClassicalMatrix {
    pub m11: Vec<Complex64>,
    pub m12: Vec<Complex64>,
    pub m21: Vec<Complex64>,
    pub m22: Vec<Complex64>,
}

impl EomClassicalMatrix {
    /// Largest pointwise violation of the unitarity identities
    /// |m11|^2 + |m21|^2 = 1 and m11 m12* + m21 m22* = 0.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.m11.len() {
            let col1 = (self.m11[j].norm_sqr() + self.m21[j].norm_sqr() - 1.0).abs();
            let col2 = (self.m12[j].norm_sqr() + self.m22[j].norm_sqr() - 1.0).abs();
            let orth = (self.m11[j] * self.m12[j].conj() + self.m21[j] * self.m22[j].conj()).norm();
            worst = worst.max(col1).max(col2).max(orth);
        }
        worst
    }
}

/// Pointwise product of output splitter, diagonal arm phases
/// e_k(t) = exp(i phi_Bk - i m_k x_k(t)) and input splitter.
pub fn classical_matrix(
    cfg: &EomConfig,
    drive1: &DriveSignal,
    drive2: &DriveSignal,
) -> Result<EomClassicalMatrix> {
    if drive1.grid != drive2.grid {
        return Err(Error::GridMismatch {
            detail: "arm drives live on different grids".into(),
        });
    }
    let n = drive1.grid.len();
    let mut m11 = Vec::with_capacity(n);
    let mut m12 = Vec::with_capacity(n);
    let mut m21 = Vec::with_capacity(n);
    let mut m22 = Vec::with_capacity(n);
    let (in1_arm1, in1_arm2) = cfg.into_arms(Port::One);
    let (in2_arm1, in2_arm2) = cfg.into_arms(Port::Two);
    let (arm1_out1, arm1_out2) = cfg.out_of_arm(1);
    let (arm2_out1, arm2_out2) = cfg.out_of_arm(2);
    for j in 0..n {
        let e1 = if cfg.asymmetric {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, cfg.arm1.phi_b - cfg.arm1.m * drive1.samples[j])
        };
        let e2 = Complex64::from_polar(1.0, cfg.arm2.phi_b - cfg.arm2.m * drive2.samples[j]);
        m11.push(in1_arm1 * e1 * arm1_out1 + in1_arm2 * e2 * arm2_out1);
        m12.push(in2_arm1 * e1 * arm1_out1 + in2_arm2 * e2 * arm2_out1);
        m21.push(in1_arm1 * e1 * arm1_out2 + in1_arm2 * e2 * arm2_out2);
        m22.push(in2_arm1 * e1 * arm1_out2 + in2_arm2 * e2 * arm2_out2);
    }
    Ok(EomClassicalMatrix { m11, m12, m21, m22 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_space::{inner_product, make_lattice, ModeOcc, OccKey};
    use crate::wavepacket::TimeGrid;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;
    const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn yb_config(arm1: ToneConfig, arm2: ToneConfig) -> EomConfig {
        EomConfig::new(
            make_splitter(SplitterKind::YBranchSplit, 0.5).unwrap(),
            make_splitter(SplitterKind::YBranchCombine, 0.5).unwrap(),
            arm1,
            arm2,
        )
        .unwrap()
    }

    fn tone_grid() -> (TimeGrid, DriveSignal, DriveSignal, f64) {
        let grid = TimeGrid::new(0.0, 1.0 / 256.0, 256).unwrap();
        let omega = 4.0 * grid.omega_bin();
        let d1 = DriveSignal::single_tone(grid, omega, 0.0).unwrap();
        let d2 = DriveSignal::single_tone(grid, omega, PI).unwrap();
        (grid, d1, d2, omega)
    }

    #[test]
    fn lossless_pass_with_identity_arms() {
        let cfg = yb_config(
            ToneConfig::new(0.0, 0.0, 0.0).unwrap(),
            ToneConfig::new(0.0, 0.0, 0.0).unwrap(),
        );
        let (_, d1, d2, _) = tone_grid();
        let m = classical_matrix(&cfg, &d1, &d2).unwrap();
        for j in 0..m.m11.len() {
            assert!((m.m11[j] - c(1.0, 0.0)).norm() < 1e-14);
            assert!(m.m21[j].norm() < 1e-14);
        }
        assert!(m.unitarity_defect() < 1e-12);
    }

    #[test]
    fn pi_bias_extinguishes_the_output() {
        let cfg = yb_config(
            ToneConfig::new(0.0, 0.0, FRAC_PI_2).unwrap(),
            ToneConfig::new(0.0, 0.0, -FRAC_PI_2).unwrap(),
        );
        let (_, d1, d2, _) = tone_grid();
        let m = classical_matrix(&cfg, &d1, &d2).unwrap();
        for j in 0..m.m11.len() {
            assert!(m.m11[j].norm() < 1e-14);
            assert!((m.m21[j].norm() - 1.0).abs() < 1e-14);
        }
    }

    /// m11(t) reproduced symbolically on samples, for a dual-drive and an
    /// asymmetric modulator.
    #[test]
    fn classical_matrix_matches_symbolic_form() {
        let cfg = yb_config(
            ToneConfig::new(0.9, 0.0, 0.4).unwrap(),
            ToneConfig::new(1.4, PI, -0.2).unwrap(),
        );
        let (grid, d1, d2, _) = tone_grid();
        let m = classical_matrix(&cfg, &d1, &d2).unwrap();
        let k1 = cfg.route(Port::One, 1, Port::One);
        let k2 = cfg.route(Port::One, 2, Port::One);
        for j in (0..grid.len()).step_by(13) {
            let e1 = Complex64::from_polar(1.0, 0.4 - 0.9 * d1.samples[j]);
            let e2 = Complex64::from_polar(1.0, -0.2 - 1.4 * d2.samples[j]);
            let want = k1 * e1 + k2 * e2;
            assert!((m.m11[j] - want).norm() < 1e-14);
        }

        let asym = yb_config(
            ToneConfig::new(0.0, 0.0, 0.0).unwrap(),
            ToneConfig::new(1.1, 0.3, 0.6).unwrap(),
        )
        .asymmetric();
        let m = classical_matrix(&asym, &d1, &d2).unwrap();
        for j in (0..grid.len()).step_by(17) {
            let e2 = Complex64::from_polar(1.0, 0.6 - 1.1 * d2.samples[j]);
            let want = k1 * c(1.0, 0.0) + k2 * e2;
            assert!((m.m11[j] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn preset_parameters_and_constant_matrix_at_zero_index() {
        let cfg = preset(EomPreset::DsbQuadrature, 1.0).unwrap();
        assert_eq!(cfg.arm1.theta, 0.0);
        assert_eq!(cfg.arm2.theta, PI);
        assert_eq!(cfg.arm1.phi_b, FRAC_PI_2);
        assert_eq!(cfg.arm2.phi_b, -FRAC_PI_2);

        let cfg = preset(EomPreset::SsbLowerSuppressed, 0.8).unwrap();
        assert_eq!(cfg.arm2.theta, -FRAC_PI_2);
        assert_eq!((cfg.arm1.phi_b, cfg.arm2.phi_b), (FRAC_PI_2, 0.0));

        let cfg = preset(EomPreset::SsbUpperSuppressed, 0.0).unwrap();
        let (_, d1, d2, _) = tone_grid();
        let m = classical_matrix(&cfg, &d1, &d2).unwrap();
        for j in 1..m.m11.len() {
            assert!((m.m11[j] - m.m11[0]).norm() < 1e-14);
            assert!((m.m21[j] - m.m21[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn equal_arms_leave_the_radiative_port_empty() {
        let lattice = make_lattice(40.0, 1.0, 16).unwrap();
        let tone = ToneConfig::new(0.9, 0.7, 0.3).unwrap();
        let cfg = yb_config(tone, tone);
        let out = eom_one_photon(&cfg, Port::One, lattice.q0(), &lattice).unwrap();
        for (key, amp) in out.terms() {
            if key.photons_on(Port::Two) > 0 {
                assert!(amp.norm() < 1e-12, "radiative leakage {amp}");
            }
        }
        assert!((out.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dsb_suppresses_even_offsets_on_port_one() {
        let lattice = make_lattice(60.0, 1.0, 25).unwrap();
        let cfg = preset(EomPreset::DsbQuadrature, 1.0).unwrap();
        let q0 = lattice.q0();
        let out = eom_one_photon(&cfg, Port::One, q0, &lattice).unwrap();
        for (key, amp) in out.terms() {
            if key.photons_on(Port::One) == 1 {
                let (mode, _) = key.port_occupations(Port::One)[0];
                let offset = mode as i64 - q0 as i64;
                if offset.rem_euclid(2) == 0 {
                    assert!(
                        amp.norm_sqr() < 1e-12,
                        "even offset {offset} leaked {}",
                        amp.norm_sqr()
                    );
                }
            }
        }
    }

    #[test]
    fn ssb_cancels_one_first_order_sideband() {
        let lattice = make_lattice(60.0, 1.0, 25).unwrap();
        let q0 = lattice.q0();
        let lower_key = OccKey::canonical(vec![ModeOcc {
            port: Port::One,
            mode: q0 - 1,
            n: 1,
        }]);
        let upper_key = OccKey::canonical(vec![ModeOcc {
            port: Port::One,
            mode: q0 + 1,
            n: 1,
        }]);

        let cfg = preset(EomPreset::SsbLowerSuppressed, 0.8).unwrap();
        let out = eom_one_photon(&cfg, Port::One, q0, &lattice).unwrap();
        assert!(out.amplitude(&lower_key).norm_sqr() < 1e-12);
        assert!(out.amplitude(&upper_key).norm_sqr() > 1e-3);

        let cfg = preset(EomPreset::SsbUpperSuppressed, 0.8).unwrap();
        let out = eom_one_photon(&cfg, Port::One, q0, &lattice).unwrap();
        assert!(out.amplitude(&upper_key).norm_sqr() < 1e-12);
        assert!(out.amplitude(&lower_key).norm_sqr() > 1e-3);
    }

    /// The six prefactors of the two-photon expansion at balanced couplers,
    /// checked against a state assembled directly from the arm columns with
    /// unequal arms so every operator monomial is distinguishable.
    #[test]
    fn two_photon_prefactors_match_direct_construction() {
        let lattice = make_lattice(40.0, 1.0, 16).unwrap();
        let q0 = lattice.q0();
        let cfg = EomConfig::new(
            make_splitter(SplitterKind::DirectionalCoupler, 0.5).unwrap(),
            make_splitter(SplitterKind::DirectionalCoupler, 0.5).unwrap(),
            ToneConfig::new(0.4, 0.2, 0.0).unwrap(),
            ToneConfig::new(0.9, 1.1, 0.5).unwrap(),
        )
        .unwrap();
        let input = TwoPortState::from_terms(vec![(
            vec![
                ModeOcc {
                    port: Port::One,
                    mode: q0,
                    n: 1,
                },
                ModeOcc {
                    port: Port::Two,
                    mode: q0,
                    n: 1,
                },
            ],
            c(1.0, 0.0),
        )])
        .unwrap();
        let got = eom_apply(&cfg, &input, &lattice).unwrap();

        let (s1, s2) = arm_matrices(&cfg, &lattice).unwrap();
        let two = |port: Port| {
            TwoPortState::from_terms(vec![(
                vec![ModeOcc {
                    port,
                    mode: q0,
                    n: 2,
                }],
                c(1.0, 0.0),
            )])
            .unwrap()
        };
        let cross = TwoPortState::from_terms(vec![(
            vec![
                ModeOcc {
                    port: Port::One,
                    mode: q0,
                    n: 1,
                },
                ModeOcc {
                    port: Port::Two,
                    mode: q0,
                    n: 1,
                },
            ],
            c(1.0, 0.0),
        )])
        .unwrap();
        let sqrt2 = c(2.0_f64.sqrt(), 0.0);
        // b+b+ x 1 |vac> = sqrt(2) * (image of |2_q0> on port 1), etc.
        let bb_1 = two(Port::One)
            .apply_one_photon_matrix(Port::One, &s1)
            .unwrap()
            .scaled(sqrt2);
        let bb_2 = two(Port::Two)
            .apply_one_photon_matrix(Port::Two, &s1)
            .unwrap()
            .scaled(sqrt2);
        let cc_1 = two(Port::One)
            .apply_one_photon_matrix(Port::One, &s2)
            .unwrap()
            .scaled(sqrt2);
        let cc_2 = two(Port::Two)
            .apply_one_photon_matrix(Port::Two, &s2)
            .unwrap()
            .scaled(sqrt2);
        let b_b = cross
            .apply_one_photon_matrix(Port::One, &s1)
            .unwrap()
            .apply_one_photon_matrix(Port::Two, &s1)
            .unwrap();
        let c_c = cross
            .apply_one_photon_matrix(Port::One, &s2)
            .unwrap()
            .apply_one_photon_matrix(Port::Two, &s2)
            .unwrap();

        let quarter_i = c(0.0, 0.25);
        let want = bb_1
            .scaled(quarter_i)
            .add(&b_b.scaled(c(-0.5, 0.0)))
            .add(&bb_2.scaled(-quarter_i))
            .add(&cc_1.scaled(-quarter_i))
            .add(&c_c.scaled(c(-0.5, 0.0)))
            .add(&cc_2.scaled(quarter_i));

        let diff = got.add(&want.scaled(c(-1.0, 0.0)));
        assert!(diff.norm_sq() < 1e-24);
    }

    #[test]
    fn switch_structure_at_selected_biases() {
        let lattice = make_lattice(40.0, 1.0, 16).unwrap();
        let q0 = lattice.q0();
        let (m, theta) = (0.7, 0.4);

        // Reference states built from the arm-1 matrix (phi_b = 0).
        let cfg0 = ToneConfig::new(m, theta, 0.0).unwrap();
        let s = exact_matrix(&cfg0, &lattice).unwrap();
        let sqrt2 = c(2.0_f64.sqrt(), 0.0);
        let same1 = TwoPortState::from_terms(vec![(
            vec![ModeOcc {
                port: Port::One,
                mode: q0,
                n: 2,
            }],
            c(1.0, 0.0),
        )])
        .unwrap()
        .apply_one_photon_matrix(Port::One, &s)
        .unwrap();
        let same2 = TwoPortState::from_terms(vec![(
            vec![ModeOcc {
                port: Port::Two,
                mode: q0,
                n: 2,
            }],
            c(1.0, 0.0),
        )])
        .unwrap()
        .apply_one_photon_matrix(Port::Two, &s)
        .unwrap();
        let cross = TwoPortState::from_terms(vec![(
            vec![
                ModeOcc {
                    port: Port::One,
                    mode: q0,
                    n: 1,
                },
                ModeOcc {
                    port: Port::Two,
                    mode: q0,
                    n: 1,
                },
            ],
            c(1.0, 0.0),
        )])
        .unwrap()
        .apply_one_photon_matrix(Port::One, &s)
        .unwrap()
        .apply_one_photon_matrix(Port::Two, &s)
        .unwrap();

        for delta in [0.0, PI / 4.0, FRAC_PI_2] {
            let out = eom_two_photon_switch(delta, m, theta, q0, &lattice).unwrap();
            let (want_cross, want_same) = switch_coefficients(delta);
            // Projections: <cross|out> and <same_k|out>/sqrt(2).
            let got_cross = inner_product(&cross, &out);
            let got_same1 = inner_product(&same1, &out) / sqrt2;
            let got_same2 = inner_product(&same2, &out) / sqrt2;
            assert!((got_cross - want_cross).norm() < 1e-12, "delta={delta}");
            assert!((got_same1 - want_same).norm() < 1e-12, "delta={delta}");
            assert!((got_same2 + want_same).norm() < 1e-12, "delta={delta}");
            assert!((out.norm_sq() - 1.0).abs() < 1e-10);
        }

        // delta = 0: a pure product state b+ x b+.
        let out = eom_two_photon_switch(0.0, m, theta, q0, &lattice).unwrap();
        let overlap = inner_product(&cross, &out);
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn switch_reduces_to_bare_interferometer_at_zero_index() {
        let lattice = make_lattice(40.0, 1.0, 16).unwrap();
        let q0 = lattice.q0();
        let delta = 0.9;
        let got = eom_two_photon_switch(delta, 0.0, 0.0, q0, &lattice).unwrap();

        // Direct composition from the splitters module: two balanced
        // couplers with a phase e^{i delta} on arm 2.
        let dc = make_splitter(SplitterKind::DirectionalCoupler, 0.5).unwrap();
        let input = TwoPortState::from_terms(vec![(
            vec![
                ModeOcc {
                    port: Port::One,
                    mode: q0,
                    n: 1,
                },
                ModeOcc {
                    port: Port::Two,
                    mode: q0,
                    n: 1,
                },
            ],
            c(1.0, 0.0),
        )])
        .unwrap();
        let mid = split_one_photon(&dc, &input).unwrap();
        let phase = SplitterCoeffs::custom(
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Complex64::from_polar(1.0, delta),
        )
        .unwrap();
        let phased = split_one_photon(&phase, &mid).unwrap();
        let want = split_one_photon(&dc, &phased).unwrap();

        let diff = got.add(&want.scaled(c(-1.0, 0.0)));
        assert!(diff.norm_sq() < 1e-20);
    }

    proptest! {
        /// Pointwise unitarity identities of the classical matrix for random
        /// tones, and unit output norm of the one-photon response.
        #[test]
        fn random_configs_stay_unitary(
            m1 in 0.0f64..2.0,
            m2 in 0.0f64..2.0,
            th1 in 0.0f64..6.2,
            th2 in 0.0f64..6.2,
            p1 in 0.0f64..6.2,
            p2 in 0.0f64..6.2,
        ) {
            let cfg = yb_config(
                ToneConfig::new(m1, th1, p1).unwrap(),
                ToneConfig::new(m2, th2, p2).unwrap(),
            );
            let (_, d1, d2, _) = tone_grid();
            let m = classical_matrix(&cfg, &d1, &d2).unwrap();
            prop_assert!(m.unitarity_defect() < 1e-12);

            let lattice = make_lattice(40.0, 1.0, 19).unwrap();
            let out = eom_one_photon(&cfg, Port::One, lattice.q0(), &lattice).unwrap();
            prop_assert!((out.norm_sq() - 1.0).abs() < 1e-10);
        }
    }

    /// Single-photon carrier sideband amplitudes equal the discrete Fourier
    /// coefficients of m11 sampled over one RF period.
    #[test]
    fn quantum_amplitudes_match_classical_fourier_coefficients() {
        let lattice = make_lattice(200.0, 1.0, 30).unwrap();
        let q0 = lattice.q0();
        let n = 256usize;
        let grid = TimeGrid::new(0.0, 1.0 / n as f64, n).unwrap();
        let omega = grid.omega_bin(); // one RF period across the grid

        for kind in [
            EomPreset::DsbQuadrature,
            EomPreset::SsbLowerSuppressed,
            EomPreset::SsbUpperSuppressed,
        ] {
            let cfg = preset(kind, 1.0).unwrap();
            let d1 = DriveSignal::single_tone(grid, omega, cfg.arm1.theta).unwrap();
            let d2 = DriveSignal::single_tone(grid, omega, cfg.arm2.theta).unwrap();
            let m = classical_matrix(&cfg, &d1, &d2).unwrap();
            let out = eom_one_photon(&cfg, Port::One, q0, &lattice).unwrap();
            for s in -6i64..=6 {
                // Coefficient of e^{-i s omega t} in m11(t).
                let mut acc = c(0.0, 0.0);
                for j in 0..n {
                    acc += m.m11[j] * Complex64::from_polar(1.0, s as f64 * omega * grid.t(j));
                }
                acc /= n as f64;
                let key = OccKey::canonical(vec![ModeOcc {
                    port: Port::One,
                    mode: (q0 as i64 + s) as usize,
                    n: 1,
                }]);
                let amp = out.amplitude(&key);
                assert!(
                    (amp.norm_sqr() - acc.norm_sqr()).abs() < 1e-8,
                    "{kind:?} offset {s}: quantum {} vs classical {}",
                    amp.norm_sqr(),
                    acc.norm_sqr()
                );
            }
        }
    }
}
