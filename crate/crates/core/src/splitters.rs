//! 2x2 splitter algebra: generic beamsplitter coefficients, directional
//! coupler, Y-branch with its radiative port, and their action on states.
//!
//! The matrix convention is fixed once for the whole crate: creation
//! operators transform as
//!
//! ```text
//! a+_1 -> t' a+_1 + r' a+_2        a+_2 -> r a+_1 + t a+_2
//! ```
//!
//! i.e. rows are outputs (1', 2') and the arrangement is (t', r'; r, t).
//! The Y-branch radiative port is an ordinary second port here; that it is
//! physically inaccessible is a reporting-layer concern, the algebra needs
//! it to carry vacuum and rejected light.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_space::{Port, TwoPortState};

/// Tolerance on the unitarity relations when validating user-supplied
/// coefficients.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Field transmission/reflection coefficients of a 2x2 splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterCoeffs {
    pub t: Complex64,
    pub t_prime: Complex64,
    pub r: Complex64,
    pub r_prime: Complex64,
}

/// Built-in splitter kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitterKind {
    /// Directional coupler: t = t' = sqrt(1-k), r = r' = i sqrt(k).
    DirectionalCoupler,
    /// Y-branch as a power splitter, with the radiative port as port 2.
    YBranchSplit,
    /// Y-branch as a combiner: the transpose of the splitter matrix.
    YBranchCombine,
}

impl SplitterCoeffs {
    /// User-supplied beamsplitter coefficients, validated against the
    /// energy-conservation and reciprocity relations.
    pub fn custom(
        t_prime: Complex64,
        r_prime: Complex64,
        r: Complex64,
        t: Complex64,
    ) -> Result<Self> {
        let coeffs = SplitterCoeffs {
            t,
            t_prime,
            r,
            r_prime,
        };
        let defect = coeffs.unitarity_defect();
        if defect > UNITARITY_TOL {
            return Err(Error::InvalidSplitter { defect });
        }
        Ok(coeffs)
    }

    /// Largest violation among |t'|^2+|r'|^2 = 1, |t|^2+|r|^2 = 1 and the
    /// two reciprocity relations.
    pub fn unitarity_defect(&self) -> f64 {
        let rows = (self.t_prime.norm_sqr() + self.r_prime.norm_sqr() - 1.0).abs();
        let cols = (self.t.norm_sqr() + self.r.norm_sqr() - 1.0).abs();
        let rec1 = (self.r.conj() * self.t_prime + self.r_prime * self.t.conj()).norm();
        let rec2 = (self.t_prime.conj() * self.r_prime + self.r.conj() * self.t).norm();
        rows.max(cols).max(rec1).max(rec2)
    }

    pub fn identity() -> Self {
        SplitterCoeffs {
            t: Complex64::new(1.0, 0.0),
            t_prime: Complex64::new(1.0, 0.0),
            r: Complex64::new(0.0, 0.0),
            r_prime: Complex64::new(0.0, 0.0),
        }
    }

    /// 2x2 matrix in the (t', r'; r, t) arrangement.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.t_prime, self.r_prime], [self.r, self.t]]
    }
}

/// Build one of the standard guided-wave splitters with power coupling `k`.
pub fn make_splitter(kind: SplitterKind, k: f64) -> Result<SplitterCoeffs> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::OutOfDomain {
            name: "k",
            value: k,
            domain: "0 <= k <= 1",
        });
    }
    let c = (1.0 - k).sqrt();
    let s = k.sqrt();
    let coeffs = match kind {
        SplitterKind::DirectionalCoupler => SplitterCoeffs {
            t: Complex64::new(c, 0.0),
            t_prime: Complex64::new(c, 0.0),
            r: Complex64::new(0.0, s),
            r_prime: Complex64::new(0.0, s),
        },
        // Splitter matrix (sqrt(1-k), sqrt(k); -sqrt(k), sqrt(1-k)).
        SplitterKind::YBranchSplit => SplitterCoeffs {
            t_prime: Complex64::new(c, 0.0),
            r_prime: Complex64::new(s, 0.0),
            r: Complex64::new(-s, 0.0),
            t: Complex64::new(c, 0.0),
        },
        // Combiner: transpose of the splitter matrix.
        SplitterKind::YBranchCombine => SplitterCoeffs {
            t_prime: Complex64::new(c, 0.0),
            r_prime: Complex64::new(-s, 0.0),
            r: Complex64::new(s, 0.0),
            t: Complex64::new(c, 0.0),
        },
    };
    debug_assert!(coeffs.unitarity_defect() < 1e-14);
    Ok(coeffs)
}

/// Apply the splitter's one-photon relation to every creation operator of a
/// state: port 1 operators pick up (t', r'), port 2 operators (r, t). Mode
/// indices are untouched; the splitter does not mix frequencies.
pub fn split_one_photon(coeffs: &SplitterCoeffs, state: &TwoPortState) -> Result<TwoPortState> {
    state.substitute(
        |_| true,
        |p, q| match p {
            Port::One => vec![
                (Port::One, q, coeffs.t_prime),
                (Port::Two, q, coeffs.r_prime),
            ],
            Port::Two => vec![(Port::One, q, coeffs.r), (Port::Two, q, coeffs.t)],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_space::{inner_product, ModeOcc, OccKey};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn balanced_coupler_coefficients() {
        let dc = make_splitter(SplitterKind::DirectionalCoupler, 0.5).unwrap();
        assert!((dc.t - c(INV_SQRT2, 0.0)).norm() < 1e-15);
        assert!((dc.t_prime - c(INV_SQRT2, 0.0)).norm() < 1e-15);
        assert!((dc.r - c(0.0, INV_SQRT2)).norm() < 1e-15);
        assert!((dc.r_prime - c(0.0, INV_SQRT2)).norm() < 1e-15);
    }

    #[test]
    fn y_branch_coefficients() {
        let yb = make_splitter(SplitterKind::YBranchSplit, 0.5).unwrap();
        assert_eq!(yb.matrix()[0], [c(INV_SQRT2, 0.0), c(INV_SQRT2, 0.0)]);
        assert_eq!(yb.matrix()[1], [c(-INV_SQRT2, 0.0), c(INV_SQRT2, 0.0)]);
        let comb = make_splitter(SplitterKind::YBranchCombine, 0.5).unwrap();
        assert_eq!(comb.t_prime, yb.t_prime);
        assert_eq!(comb.r_prime, yb.r);
        assert_eq!(comb.r, yb.r_prime);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let dc = make_splitter(SplitterKind::DirectionalCoupler, 0.0).unwrap();
        assert_eq!(dc, SplitterCoeffs::identity());
        let psi = TwoPortState::single_photon(Port::Two, 9);
        assert_eq!(split_one_photon(&dc, &psi).unwrap(), psi);
    }

    #[test]
    fn invalid_coefficients_rejected() {
        let err = SplitterCoeffs::custom(c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidSplitter { .. })));
    }

    #[test]
    fn single_photon_splits_per_the_coefficient_rule() {
        let dc = make_splitter(SplitterKind::DirectionalCoupler, 0.5).unwrap();
        let psi = TwoPortState::single_photon(Port::One, 4);
        let out = split_one_photon(&dc, &psi).unwrap();
        let k1 = OccKey::canonical(vec![ModeOcc {
            port: Port::One,
            mode: 4,
            n: 1,
        }]);
        let k2 = OccKey::canonical(vec![ModeOcc {
            port: Port::Two,
            mode: 4,
            n: 1,
        }]);
        assert!((out.amplitude(&k1) - c(INV_SQRT2, 0.0)).norm() < 1e-15);
        assert!((out.amplitude(&k2) - c(0.0, INV_SQRT2)).norm() < 1e-15);
    }

    /// Hand oracle: (a+ + i b+)(i a+ + b+)/2 = i/2 (a+^2 + b+^2); the cross
    /// term cancels (Hong-Ou-Mandel coalescence) and each doubled term has
    /// amplitude i/sqrt(2) on the normalized two-photon ket.
    #[test]
    fn hom_coalescence_at_balanced_coupler() {
        let dc = make_splitter(SplitterKind::DirectionalCoupler, 0.5).unwrap();
        let psi = TwoPortState::from_terms(vec![(
            vec![
                ModeOcc {
                    port: Port::One,
                    mode: 4,
                    n: 1,
                },
                ModeOcc {
                    port: Port::Two,
                    mode: 4,
                    n: 1,
                },
            ],
            c(1.0, 0.0),
        )])
        .unwrap();
        let out = split_one_photon(&dc, &psi).unwrap();
        let cross = OccKey::canonical(vec![
            ModeOcc {
                port: Port::One,
                mode: 4,
                n: 1,
            },
            ModeOcc {
                port: Port::Two,
                mode: 4,
                n: 1,
            },
        ]);
        assert!(out.amplitude(&cross).norm() < 1e-15);
        let both1 = OccKey::canonical(vec![ModeOcc {
            port: Port::One,
            mode: 4,
            n: 2,
        }]);
        // Operator coefficient i/2 on a+^2 puts i/2*sqrt(2) on |2>.
        let want = c(0.0, INV_SQRT2);
        assert!((out.amplitude(&both1) - want).norm() < 1e-15);
        assert!((out.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_branch_reassembles_losslessly() {
        let yb_split = make_splitter(SplitterKind::YBranchSplit, 0.5).unwrap();
        let yb_comb = make_splitter(SplitterKind::YBranchCombine, 0.5).unwrap();
        let psi = TwoPortState::single_photon(Port::One, 7);
        let mid = split_one_photon(&yb_split, &psi).unwrap();
        let out = split_one_photon(&yb_comb, &mid).unwrap();
        let back = inner_product(&psi, &out);
        assert!((back - c(1.0, 0.0)).norm() < 1e-12);
    }

    fn random_unitary_coeffs(tau: f64, a: f64, b: f64, d: f64) -> SplitterCoeffs {
        // General U(2) in the (t', r'; r, t) arrangement.
        let (ct, st) = (tau.cos(), tau.sin());
        let phase = Complex64::from_polar(1.0, d);
        SplitterCoeffs {
            t_prime: phase * Complex64::from_polar(ct, a),
            r_prime: phase * Complex64::from_polar(st, b),
            r: phase * Complex64::from_polar(-st, -b),
            t: phase * Complex64::from_polar(ct, -a),
        }
    }

    proptest! {
        #[test]
        fn norm_is_preserved(
            tau in 0.0f64..std::f64::consts::FRAC_PI_2,
            a in 0.0f64..std::f64::consts::TAU,
            b in 0.0f64..std::f64::consts::TAU,
            d in 0.0f64..std::f64::consts::TAU,
            re in -1.0f64..1.0,
            im in -1.0f64..1.0,
        ) {
            let coeffs = random_unitary_coeffs(tau, a, b, d);
            prop_assert!(coeffs.unitarity_defect() < 1e-12);
            let psi = TwoPortState::from_terms(vec![
                (vec![ModeOcc { port: Port::One, mode: 3, n: 2 }], c(re, im)),
                (vec![
                    ModeOcc { port: Port::One, mode: 5, n: 1 },
                    ModeOcc { port: Port::Two, mode: 3, n: 1 },
                ], c(0.3, -0.4)),
            ]).unwrap();
            let out = split_one_photon(&coeffs, &psi).unwrap();
            prop_assert!((out.norm_sq() - psi.norm_sq()).abs() < 1e-12);
        }

        /// Splitting with C1 then C2 equals one split with the matrix
        /// product C2 * C1.
        #[test]
        fn composition_matches_matrix_product(
            tau1 in 0.05f64..1.5, a1 in 0.0f64..6.0, b1 in 0.0f64..6.0,
            tau2 in 0.05f64..1.5, a2 in 0.0f64..6.0, b2 in 0.0f64..6.0,
        ) {
            let c1 = random_unitary_coeffs(tau1, a1, b1, 0.0);
            let c2 = random_unitary_coeffs(tau2, a2, b2, 0.0);
            let m1 = c1.matrix();
            let m2 = c2.matrix();
            // Row-image matrices compose as M1 * M2; in the classical
            // column (transfer) convention this is exactly C2 * C1.
            let mut prod = [[c(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        prod[i][j] += m1[i][k] * m2[k][j];
                    }
                }
            }
            let combined = SplitterCoeffs {
                t_prime: prod[0][0],
                r_prime: prod[0][1],
                r: prod[1][0],
                t: prod[1][1],
            };

            let psi = TwoPortState::from_terms(vec![
                (vec![ModeOcc { port: Port::One, mode: 2, n: 1 },
                      ModeOcc { port: Port::Two, mode: 2, n: 1 }], c(0.6, 0.0)),
                (vec![ModeOcc { port: Port::Two, mode: 4, n: 2 }], c(0.0, 0.8)),
            ]).unwrap();
            let seq = split_one_photon(&c2, &split_one_photon(&c1, &psi).unwrap()).unwrap();
            let joined = split_one_photon(&combined, &psi).unwrap();
            let diff = inner_product(&seq, &seq).re + inner_product(&joined, &joined).re
                - 2.0 * inner_product(&seq, &joined).re;
            prop_assert!(diff.abs() < 1e-12);
        }
    }
}
