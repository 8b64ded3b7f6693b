//! Receiver-side analyzer optics for two-photon polarization states.
//!
//! Two setups are modeled. Setup (a) sends both photons through a strongly
//! birefringent element that delays V relative to H, so pairs with support
//! in {HV, VH} arrive time-separated, then analyzes each photon at a
//! polarizing beam splitter. Setup (b) overlaps both photons on one 50:50
//! non-polarizing beam splitter and records whether they exit through
//! different ports.
//!
//! Distinguishability is reduced to a scalar visibility v in [0, 1]. The
//! different-port probability obeys
//!
//! ```text
//! P(diff) = (1 − v)/2 + v · ⟨Ψ⁻|ρ|Ψ⁻⟩
//! ```
//!
//! which interpolates between the fully distinguishable limit (coin flip at
//! v = 0) and two-photon interference at v = 1, where only the singlet
//! fraction exits through different ports. At v = 1 equal-polarization
//! product pairs never split (the Hong-Ou-Mandel dip).

use crate::quantum::{JointState, PolarizationOutcome};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OpticsError {
    #[error("expected a two-photon state, got {0} photons")]
    WrongDimension(usize),
    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),
    #[error("analyzer angle must be finite")]
    NonFiniteAngle,
}

/// Which of the two analyzer arrangements is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzerSetup {
    /// Birefringent time-tagging followed by per-photon PBS analysis.
    BirefringentPbs,
    /// Single 50:50 non-polarizing beam splitter.
    NonPolarizingBs,
}

/// Validated analyzer parameters. `pbs_angles` matter only for
/// [`AnalyzerSetup::BirefringentPbs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerConfig {
    pub setup: AnalyzerSetup,
    pub visibility: f64,
    pub pbs_angles: (f64, f64),
}

impl AnalyzerConfig {
    pub fn non_polarizing_bs(visibility: f64) -> Result<Self, OpticsError> {
        let config = Self {
            setup: AnalyzerSetup::NonPolarizingBs,
            visibility,
            pbs_angles: (0.0, 0.0),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn birefringent_pbs(visibility: f64, pbs_angles: (f64, f64)) -> Result<Self, OpticsError> {
        let config = Self {
            setup: AnalyzerSetup::BirefringentPbs,
            visibility,
            pbs_angles,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        check_visibility(self.visibility)?;
        if !self.pbs_angles.0.is_finite() || !self.pbs_angles.1.is_finite() {
            return Err(OpticsError::NonFiniteAngle);
        }
        Ok(())
    }
}

/// Exit pattern at the non-polarizing beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortPattern {
    DifferentPorts,
    SamePort,
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyzerEvent {
    /// Setup (b): both photons on the 50:50 splitter.
    BeamSplitter { pattern: PortPattern },
    /// Setup (a): per-photon PBS outcomes, plus whether the pair arrived
    /// time-separated after the birefringent element.
    PolarizingBs {
        outcomes: (PolarizationOutcome, PolarizationOutcome),
        time_separated: bool,
    },
}

fn check_visibility(v: f64) -> Result<(), OpticsError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(OpticsError::VisibilityOutOfRange(v));
    }
    Ok(())
}

fn check_two_photon(rho: &JointState) -> Result<(), OpticsError> {
    if rho.num_qubits() != 2 {
        return Err(OpticsError::WrongDimension(rho.num_qubits()));
    }
    Ok(())
}

/// Singlet fraction w = ⟨Ψ⁻|ρ|Ψ⁻⟩ of a two-photon state.
pub fn antisymmetric_overlap(rho: &JointState) -> Result<f64, OpticsError> {
    check_two_photon(rho)?;
    // ⟨Ψ⁻|ρ|Ψ⁻⟩ over basis {HH,HV,VH,VV} with Ψ⁻ = (0,1,−1,0)/√2
    let w = 0.5
        * (rho.entry(1, 1) - rho.entry(1, 2) - rho.entry(2, 1) + rho.entry(2, 2)).re;
    Ok(w.clamp(0.0, 1.0))
}

/// P(DifferentPorts) at the 50:50 splitter with visibility v.
pub fn bs_different_port_probability(rho: &JointState, v: f64) -> Result<f64, OpticsError> {
    check_visibility(v)?;
    let w = antisymmetric_overlap(rho)?;
    Ok((1.0 - v) / 2.0 + v * w)
}

/// Bernoulli sample of the beam-splitter exit pattern.
pub fn sample_bs_event<R: Rng + ?Sized>(
    rho: &JointState,
    v: f64,
    rng: &mut R,
) -> Result<AnalyzerEvent, OpticsError> {
    let p_diff = bs_different_port_probability(rho, v)?;
    let pattern = if rng.gen::<f64>() < p_diff {
        PortPattern::DifferentPorts
    } else {
        PortPattern::SamePort
    };
    Ok(AnalyzerEvent::BeamSplitter { pattern })
}

/// Probability that the pair arrives time-separated after the birefringent
/// element: the population in the {HV, VH} subspace.
pub fn time_separation_probability(rho: &JointState) -> Result<f64, OpticsError> {
    check_two_photon(rho)?;
    Ok((rho.entry(1, 1) + rho.entry(2, 2)).re.clamp(0.0, 1.0))
}

/// Samples the birefringent time tag and collapses the pair onto the
/// corresponding subspace: {HV, VH} when time-separated, {HH, VV} when
/// coincident.
pub fn birefringent_time_tag<R: Rng + ?Sized>(
    rho: &JointState,
    rng: &mut R,
) -> Result<(bool, JointState), OpticsError> {
    let p_sep = time_separation_probability(rho)?;
    let separated = rng.gen::<f64>() < p_sep;
    let (kept, p) = if separated {
        ([1usize, 2], p_sep)
    } else {
        ([0usize, 3], 1.0 - p_sep)
    };
    let mut matrix = nalgebra::DMatrix::from_element(4, 4, Complex64::ZERO);
    for &i in &kept {
        for &j in &kept {
            matrix[(i, j)] = rho.entry(i, j) / p;
        }
    }
    let projected = JointState::from_matrix(matrix, rho.labels().to_vec())
        .expect("subspace projection of a density matrix is a density matrix");
    Ok((separated, projected))
}

fn analyzer_axis(theta: f64, outcome: PolarizationOutcome) -> [Complex64; 2] {
    let (c, s) = (theta.cos(), theta.sin());
    match outcome {
        PolarizationOutcome::Plus => [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        PolarizationOutcome::Minus => [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
    }
}

/// Exact joint probability of a PBS outcome pair at angles (θ₁, θ₂).
pub fn pbs_joint_probability(
    rho: &JointState,
    angles: (f64, f64),
    outcomes: (PolarizationOutcome, PolarizationOutcome),
) -> Result<f64, OpticsError> {
    check_two_photon(rho)?;
    if !angles.0.is_finite() || !angles.1.is_finite() {
        return Err(OpticsError::NonFiniteAngle);
    }
    let a = analyzer_axis(angles.0, outcomes.0);
    let b = analyzer_axis(angles.1, outcomes.1);
    let amps = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut acc = Complex64::ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += amps[i].conj() * rho.entry(i, j) * amps[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Polarization correlation E = P(same outcome) − P(different outcome) with
/// photon 1 analyzed at θ₁ and photon 2 at θ₂.
pub fn pbs_correlation(rho: &JointState, theta1: f64, theta2: f64) -> Result<f64, OpticsError> {
    use PolarizationOutcome::{Minus, Plus};
    let pp = pbs_joint_probability(rho, (theta1, theta2), (Plus, Plus))?;
    let mm = pbs_joint_probability(rho, (theta1, theta2), (Minus, Minus))?;
    let pm = pbs_joint_probability(rho, (theta1, theta2), (Plus, Minus))?;
    let mp = pbs_joint_probability(rho, (theta1, theta2), (Minus, Plus))?;
    Ok(pp + mm - pm - mp)
}

/// Samples a full setup-(a) event: time tag, collapse, then one PBS
/// measurement per photon on the collapsed state.
pub fn sample_pbs_event<R: Rng + ?Sized>(
    rho: &JointState,
    angles: (f64, f64),
    rng: &mut R,
) -> Result<AnalyzerEvent, OpticsError> {
    if !angles.0.is_finite() || !angles.1.is_finite() {
        return Err(OpticsError::NonFiniteAngle);
    }
    let (time_separated, tagged) = birefringent_time_tag(rho, rng)?;
    let first = tagged.labels()[0];
    let second = tagged.labels()[1];
    let (o1, after_first) = tagged
        .ssm(first, angles.0, rng)
        .expect("photon label comes from the state itself");
    let (o2, _) = after_first
        .ssm(second, angles.1, rng)
        .expect("photon label comes from the state itself");
    Ok(AnalyzerEvent::PolarizingBs {
        outcomes: (o1, o2),
        time_separated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell_state, BellKind, PhotonId};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::FRAC_PI_4;

    const TOL: f64 = 1e-12;

    fn mixture(parts: &[(f64, JointState)]) -> JointState {
        let mut matrix = DMatrix::from_element(4, 4, Complex64::ZERO);
        for (weight, state) in parts {
            matrix += state.matrix() * Complex64::new(*weight, 0.0);
        }
        JointState::from_matrix(matrix, vec![PhotonId(0), PhotonId(1)]).unwrap()
    }

    fn uniform_bell_mixture() -> JointState {
        mixture(&BellKind::ALL.map(|k| (0.25, bell_state(k))))
    }

    /// ρ = G†G / tr(G†G) for an arbitrary complex 4×4 G: always a valid
    /// density matrix, and dense in the state space.
    fn density_from_entries(parts: [f64; 32]) -> JointState {
        let g = DMatrix::from_fn(4, 4, |i, j| {
            Complex64::new(parts[8 * i + 2 * j], parts[8 * i + 2 * j + 1])
        });
        let h = g.adjoint() * &g;
        let tr = h.trace().re.max(1e-9);
        JointState::from_matrix(h / Complex64::new(tr, 0.0), vec![PhotonId(0), PhotonId(1)])
            .unwrap()
    }

    fn arb_density() -> impl Strategy<Value = JointState> {
        proptest::array::uniform32(-1.0f64..1.0).prop_map(density_from_entries)
    }

    #[test]
    fn overlap_matches_bell_expansion() {
        assert_abs_diff_eq!(
            antisymmetric_overlap(&bell_state(BellKind::PsiMinus)).unwrap(),
            1.0,
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            antisymmetric_overlap(&bell_state(BellKind::PhiPlus)).unwrap(),
            0.0,
            epsilon = TOL
        );
        let mixed =
            JointState::maximally_mixed(vec![PhotonId(0), PhotonId(1)]).unwrap();
        assert_abs_diff_eq!(antisymmetric_overlap(&mixed).unwrap(), 0.25, epsilon = TOL);
    }

    #[test]
    fn overlap_rejects_wrong_dimension() {
        let single = JointState::maximally_mixed(vec![PhotonId(0)]).unwrap();
        assert_eq!(
            antisymmetric_overlap(&single).unwrap_err(),
            OpticsError::WrongDimension(1)
        );
    }

    #[test]
    fn different_port_probability_reproduces_matrix_cases() {
        // uniform mixture of swapped Bell states: one quarter splits
        assert_abs_diff_eq!(
            bs_different_port_probability(&uniform_bell_mixture(), 1.0).unwrap(),
            0.25,
            epsilon = TOL
        );
        // equal-polarization product pair: perfect HOM dip
        let hh = JointState::linear_polarized_pair(0.0, 0.0);
        assert_abs_diff_eq!(
            bs_different_port_probability(&hh, 1.0).unwrap(),
            0.0,
            epsilon = TOL
        );
        // orthogonal product pair holds half a singlet
        let hv = JointState::linear_polarized_pair(0.0, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(
            bs_different_port_probability(&hv, 1.0).unwrap(),
            0.5,
            epsilon = TOL
        );
        // fully distinguishable photons split half the time, any state
        assert_abs_diff_eq!(
            bs_different_port_probability(&hh, 0.0).unwrap(),
            0.5,
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            bs_different_port_probability(&hh, 0.5).unwrap(),
            0.25,
            epsilon = TOL
        );
    }

    #[test]
    fn visibility_is_range_checked() {
        let hh = JointState::linear_polarized_pair(0.0, 0.0);
        assert_eq!(
            bs_different_port_probability(&hh, 1.5).unwrap_err(),
            OpticsError::VisibilityOutOfRange(1.5)
        );
        assert_eq!(
            AnalyzerConfig::non_polarizing_bs(-0.1).unwrap_err(),
            OpticsError::VisibilityOutOfRange(-0.1)
        );
        assert!(AnalyzerConfig::birefringent_pbs(1.0, (0.0, f64::NAN)).is_err());
    }

    #[test]
    fn extreme_states_sample_deterministically() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let singlet = bell_state(BellKind::PsiMinus);
        let phi = bell_state(BellKind::PhiPlus);
        for _ in 0..32 {
            assert_eq!(
                sample_bs_event(&singlet, 1.0, &mut rng).unwrap(),
                AnalyzerEvent::BeamSplitter {
                    pattern: PortPattern::DifferentPorts
                }
            );
            assert_eq!(
                sample_bs_event(&phi, 1.0, &mut rng).unwrap(),
                AnalyzerEvent::BeamSplitter {
                    pattern: PortPattern::SamePort
                }
            );
        }
    }

    #[test]
    fn sampled_split_fraction_tracks_exact_probability() {
        // 4σ binomial agreement at N = 10⁵, away from the extremes
        let rho = mixture(&[
            (0.55, bell_state(BellKind::PsiMinus)),
            (0.45, bell_state(BellKind::PhiMinus)),
        ]);
        let v = 0.7;
        let exact = bs_different_port_probability(&rho, v).unwrap();
        let n = 100_000u32;
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        let mut diff = 0u32;
        for _ in 0..n {
            if sample_bs_event(&rho, v, &mut rng).unwrap()
                == (AnalyzerEvent::BeamSplitter {
                    pattern: PortPattern::DifferentPorts,
                })
            {
                diff += 1;
            }
        }
        let freq = f64::from(diff) / f64::from(n);
        let bound = 4.0 * (exact * (1.0 - exact) / f64::from(n)).sqrt();
        assert!(
            (freq - exact).abs() < bound,
            "{freq} vs {exact}, bound {bound}"
        );
    }

    #[test]
    fn time_tag_splits_bell_families() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        assert_abs_diff_eq!(
            time_separation_probability(&bell_state(BellKind::PhiPlus)).unwrap(),
            0.0,
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            time_separation_probability(&bell_state(BellKind::PsiMinus)).unwrap(),
            1.0,
            epsilon = TOL
        );
        let mixed = JointState::maximally_mixed(vec![PhotonId(0), PhotonId(1)]).unwrap();
        assert_abs_diff_eq!(
            time_separation_probability(&mixed).unwrap(),
            0.5,
            epsilon = TOL
        );

        let (sep, post) = birefringent_time_tag(&bell_state(BellKind::PsiMinus), &mut rng).unwrap();
        assert!(sep);
        // collapse keeps the singlet intact: it already lives in {HV, VH}
        assert_abs_diff_eq!(antisymmetric_overlap(&post).unwrap(), 1.0, epsilon = TOL);

        let (sep, post) = birefringent_time_tag(&bell_state(BellKind::PhiPlus), &mut rng).unwrap();
        assert!(!sep);
        assert_abs_diff_eq!(
            post.fidelity_with_pure(&BellKind::PhiPlus.amplitudes()).unwrap(),
            1.0,
            epsilon = TOL
        );

        // mixed input collapses onto one subspace with unit total weight
        let (sep, post) = birefringent_time_tag(&mixed, &mut rng).unwrap();
        let expected = if sep { 0.5 } else { 0.0 };
        assert_abs_diff_eq!(
            antisymmetric_overlap(&post).unwrap(),
            expected,
            epsilon = TOL
        );
        post.validate().unwrap();
    }

    #[test]
    fn correlation_matches_known_states() {
        assert_abs_diff_eq!(
            pbs_correlation(&bell_state(BellKind::PhiPlus), 0.0, 0.0).unwrap(),
            1.0,
            epsilon = TOL
        );
        for theta in [0.0, 0.4, FRAC_PI_4, 1.3] {
            assert_abs_diff_eq!(
                pbs_correlation(&bell_state(BellKind::PsiMinus), theta, theta).unwrap(),
                -1.0,
                epsilon = TOL
            );
        }
        let mixed = JointState::maximally_mixed(vec![PhotonId(0), PhotonId(1)]).unwrap();
        assert_abs_diff_eq!(pbs_correlation(&mixed, 0.3, 1.1).unwrap(), 0.0, epsilon = TOL);

        // classical HH/VV mixture: perfectly correlated in H/V, flat at 45°;
        // Φ⁺ keeps full correlation at 45°. Same diagonal, different physics.
        let classical = mixture(&[
            (0.5, JointState::linear_polarized_pair(0.0, 0.0)),
            (
                0.5,
                JointState::linear_polarized_pair(
                    std::f64::consts::FRAC_PI_2,
                    std::f64::consts::FRAC_PI_2,
                ),
            ),
        ]);
        assert_abs_diff_eq!(pbs_correlation(&classical, 0.0, 0.0).unwrap(), 1.0, epsilon = TOL);
        assert_abs_diff_eq!(
            pbs_correlation(&classical, FRAC_PI_4, FRAC_PI_4).unwrap(),
            0.0,
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            pbs_correlation(&bell_state(BellKind::PhiPlus), FRAC_PI_4, FRAC_PI_4).unwrap(),
            1.0,
            epsilon = TOL
        );
    }

    #[test]
    fn pbs_events_follow_singlet_anticorrelation() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let singlet = bell_state(BellKind::PsiMinus);
        for _ in 0..64 {
            match sample_pbs_event(&singlet, (0.9, 0.9), &mut rng).unwrap() {
                AnalyzerEvent::PolarizingBs {
                    outcomes,
                    time_separated,
                } => {
                    assert!(time_separated);
                    assert_ne!(outcomes.0, outcomes.1);
                }
                other => panic!("unexpected event {other:?}"),
            }
        }
    }

    #[test]
    fn sampled_pbs_correlation_tracks_exact_value() {
        let rho = mixture(&[
            (0.7, bell_state(BellKind::PhiPlus)),
            (0.3, bell_state(BellKind::PsiPlus)),
        ]);
        let angles = (0.3, 1.1);
        let exact = pbs_correlation(&rho, angles.0, angles.1).unwrap();
        let p_same_exact = (1.0 + exact) / 2.0;
        let n = 100_000u32;
        let mut same = 0u32;
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..n {
            if let AnalyzerEvent::PolarizingBs { outcomes, .. } =
                sample_pbs_event(&rho, angles, &mut rng).unwrap()
            {
                if outcomes.0 == outcomes.1 {
                    same += 1;
                }
            }
        }
        let freq = f64::from(same) / f64::from(n);
        let bound = 4.0 * (p_same_exact * (1.0 - p_same_exact) / f64::from(n)).sqrt();
        assert!(
            (freq - p_same_exact).abs() < bound,
            "{freq} vs {p_same_exact}, bound {bound}"
        );
    }

    proptest! {
        /// P(diff) is affine in v: exact midpoint between the endpoints.
        #[test]
        fn affine_in_visibility(rho in arb_density(), v in 0.0f64..=1.0) {
            let p0 = bs_different_port_probability(&rho, 0.0).unwrap();
            let p1 = bs_different_port_probability(&rho, 1.0).unwrap();
            let pv = bs_different_port_probability(&rho, v).unwrap();
            prop_assert!((pv - ((1.0 - v) * p0 + v * p1)).abs() < 1e-12);
        }

        /// P(diff) is linear over mixtures of states.
        #[test]
        fn linear_in_state(
            w in proptest::array::uniform4(0.01f64..1.0),
            v in 0.0f64..=1.0,
        ) {
            let total: f64 = w.iter().sum();
            let weights = w.map(|x| x / total);
            let parts: Vec<(f64, JointState)> = BellKind::ALL
                .iter()
                .zip(weights)
                .map(|(&k, wk)| (wk, bell_state(k)))
                .collect();
            let mixed = mixture(&parts);
            let direct = bs_different_port_probability(&mixed, v).unwrap();
            let averaged: f64 = parts
                .iter()
                .map(|(wk, s)| wk * bs_different_port_probability(s, v).unwrap())
                .sum();
            prop_assert!((direct - averaged).abs() < 1e-12);
        }

        /// Equal-polarization product pairs never split at v = 1, any angle.
        #[test]
        fn hom_dip_for_equal_polarizations(theta in 0.0f64..std::f64::consts::PI) {
            let rho = JointState::linear_polarized_pair(theta, theta);
            let p = bs_different_port_probability(&rho, 1.0).unwrap();
            prop_assert!(p.abs() < 1e-12);
        }

        /// Fully distinguishable photons split half the time, whatever the
        /// state: the "entangled but distinguishable" quadrant cannot occur.
        #[test]
        fn v_zero_flattens_everything(rho in arb_density()) {
            let p = bs_different_port_probability(&rho, 0.0).unwrap();
            prop_assert!((p - 0.5).abs() < 1e-12);
        }

        /// Correlations are bounded and the overlap stays in [0, 1].
        #[test]
        fn correlation_bounded(
            rho in arb_density(),
            t1 in -2.0f64..2.0,
            t2 in -2.0f64..2.0,
        ) {
            let e = pbs_correlation(&rho, t1, t2).unwrap();
            prop_assert!(e.abs() <= 1.0 + 1e-12);
            let w = antisymmetric_overlap(&rho).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
        }
    }
}
