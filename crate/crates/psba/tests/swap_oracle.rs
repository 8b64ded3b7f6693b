//! Independent verification of the entanglement-swapping identity.
//!
//! The oracle here works on raw four-photon state vectors with its own
//! frozen amplitude tables and contracts the middle-pair projection by
//! hand. The production code path (density matrices, projection
//! operators, partial traces) must agree with it on every source
//! combination and measurement outcome, as must the closed-form XOR
//! composition law.

use psba::quantum::{BellKind, Complex64, JointState, PhotonId};

const SQ: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Frozen Bell amplitudes over basis HH, HV, VH, VV.
fn bell_amps(kind: BellKind) -> [Complex64; 4] {
    match kind {
        BellKind::PhiPlus => [c(SQ), c(0.0), c(0.0), c(SQ)],
        BellKind::PhiMinus => [c(SQ), c(0.0), c(0.0), c(-SQ)],
        BellKind::PsiPlus => [c(0.0), c(SQ), c(SQ), c(0.0)],
        BellKind::PsiMinus => [c(0.0), c(SQ), c(-SQ), c(0.0)],
    }
}

/// Frozen Pauli-frame encoding: Φ⁺=(0,0), Φ⁻=(1,0), Ψ⁺=(0,1), Ψ⁻=(1,1).
fn bits(kind: BellKind) -> (bool, bool) {
    match kind {
        BellKind::PhiPlus => (false, false),
        BellKind::PhiMinus => (true, false),
        BellKind::PsiPlus => (false, true),
        BellKind::PsiMinus => (true, true),
    }
}

fn kind_from_bits(z: bool, x: bool) -> BellKind {
    match (z, x) {
        (false, false) => BellKind::PhiPlus,
        (true, false) => BellKind::PhiMinus,
        (false, true) => BellKind::PsiPlus,
        (true, true) => BellKind::PsiMinus,
    }
}

/// The composition law under test: measuring (2,3) of b_j ⊗ b_k in the
/// Bell basis with outcome m leaves (1,4) in the XOR of the three frames.
fn xor_kind(j: BellKind, k: BellKind, m: BellKind) -> BellKind {
    let (zj, xj) = bits(j);
    let (zk, xk) = bits(k);
    let (zm, xm) = bits(m);
    kind_from_bits(zj ^ zk ^ zm, xj ^ xk ^ xm)
}

/// Brute-force contraction: start from the product vector
/// v[i1 i2 i3 i4] = b_j[i1 i2] · b_k[i3 i4], project photons (2,3) onto
/// outcome m, return the outcome probability and the normalized (1,4)
/// vector.
fn oracle_projection(j: BellKind, k: BellKind, m: BellKind) -> (f64, [Complex64; 4]) {
    let bj = bell_amps(j);
    let bk = bell_amps(k);
    let cm = bell_amps(m);
    let mut w = [Complex64::new(0.0, 0.0); 4];
    for i1 in 0..2 {
        for i4 in 0..2 {
            let mut amp = Complex64::new(0.0, 0.0);
            for i2 in 0..2 {
                for i3 in 0..2 {
                    amp += cm[2 * i2 + i3].conj() * bj[2 * i1 + i2] * bk[2 * i3 + i4];
                }
            }
            w[2 * i1 + i4] = amp;
        }
    }
    let prob: f64 = w.iter().map(|a| a.norm_sqr()).sum();
    if prob > 0.0 {
        let scale = prob.sqrt();
        for a in &mut w {
            *a /= scale;
        }
    }
    (prob, w)
}

fn overlap_sq(a: &[Complex64; 4], b: &[Complex64; 4]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

#[test]
fn oracle_agrees_with_xor_law_on_all_64_cases() {
    for j in BellKind::ALL {
        for k in BellKind::ALL {
            for m in BellKind::ALL {
                let (prob, w) = oracle_projection(j, k, m);
                assert!(
                    (prob - 0.25).abs() < 1e-12,
                    "outcome probability for ({j}, {k}, {m})"
                );
                let predicted = bell_amps(xor_kind(j, k, m));
                let fidelity = overlap_sq(&w, &predicted);
                assert!(
                    (fidelity - 1.0).abs() < 1e-12,
                    "XOR law at ({j}, {k}, {m}): fidelity {fidelity}"
                );
            }
        }
    }
}

#[test]
fn production_swap_matches_oracle_on_all_64_cases() {
    let (p1, p2, p3, p4) = (PhotonId(0), PhotonId(1), PhotonId(2), PhotonId(3));
    for j in BellKind::ALL {
        for k in BellKind::ALL {
            let full = JointState::bell(j, (p1, p2))
                .tensor(&JointState::bell(k, (p3, p4)))
                .unwrap();
            let branches = full.bsm_outcome_distribution((p2, p3)).unwrap();
            assert_eq!(branches.len(), 4);
            for (m, prob, post) in branches {
                let (oracle_prob, oracle_w) = oracle_projection(j, k, m);
                assert!(
                    (prob - oracle_prob).abs() < 1e-12,
                    "branch probability at ({j}, {k}, {m})"
                );
                let reduced = post.partial_trace(&[p1, p4]).unwrap();
                let fidelity = reduced.fidelity_with_pure(&oracle_w).unwrap();
                assert!(
                    (fidelity - 1.0).abs() < 1e-10,
                    "reduced (1,4) state at ({j}, {k}, {m}): fidelity {fidelity}"
                );
                assert!((reduced.purity() - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn untouched_partners_reduce_to_the_maximally_mixed_state() {
    let (p1, p2, p3, p4) = (PhotonId(0), PhotonId(1), PhotonId(2), PhotonId(3));
    let mixed = JointState::maximally_mixed(vec![p1, p4]).unwrap();
    for j in BellKind::ALL {
        for k in BellKind::ALL {
            let full = JointState::bell(j, (p1, p2))
                .tensor(&JointState::bell(k, (p3, p4)))
                .unwrap();
            let reduced = full.partial_trace(&[p1, p4]).unwrap();
            let gap = reduced.max_entrywise_distance(&mixed).unwrap();
            assert!(gap < 1e-12, "fresh reduction at ({j}, {k}): gap {gap}");
        }
    }
}
