//! The sorting analysis: why swapped correlations only appear in
//! hindsight.
//!
//! Per trial, two fresh source pairs are created and Victor chooses
//! uniformly at random to measure the inner photons (2, 3) jointly in the
//! Bell basis or individually in H/V. The outer pair (1, 4) is then
//! grouped by his choice and outcome, and each group's exact polarization
//! correlations are computed from its ensemble-average state.
//!
//! BSM-sorted groups show Bell-state correlations in every basis;
//! SSM-sorted groups correlate only in H/V; the unsorted union shows
//! nothing. This module is the one place where measurement outcomes cross
//! party lines, and that is the point: the sorting key is classical side
//! information, so none of this structure is visible to Bob alone.

use super::ProtocolError;
use crate::optics::pbs_correlation;
use crate::quantum::{BellKind, JointState, PhotonId, PolarizationOutcome};
use crate::rng::{SeedContext, StreamParty};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_PI_4;

/// Exact correlations of one event group at the three analyzer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub subset: String,
    pub count: u64,
    /// E at (0, 0): the H/V basis.
    pub e_hv: f64,
    /// E at (π/4, π/4): the diagonal basis.
    pub e_diag: f64,
    /// E at (0, π/4): mixed settings.
    pub e_mixed: f64,
}

/// The two sorted tables plus the unsorted union.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedDiagrams {
    pub n_trials: u64,
    /// One row per Bell outcome of Victor's BSM.
    pub bsm_rows: Vec<CorrelationRow>,
    /// One row per (photon 2, photon 3) H/V outcome pair of Victor's SSM.
    pub ssm_rows: Vec<CorrelationRow>,
    pub union_row: CorrelationRow,
}

struct Accumulator {
    count: u64,
    sum: DMatrix<Complex64>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            count: 0,
            sum: DMatrix::from_element(4, 4, Complex64::ZERO),
        }
    }

    fn add(&mut self, state: &JointState) {
        self.count += 1;
        self.sum += state.matrix();
    }

    /// Row of exact correlations of the mean state. Empty groups report
    /// zero correlations so every cell stays finite.
    fn row(&self, subset: String) -> CorrelationRow {
        if self.count == 0 {
            return CorrelationRow {
                subset,
                count: 0,
                e_hv: 0.0,
                e_diag: 0.0,
                e_mixed: 0.0,
            };
        }
        let mean = JointState::from_matrix(
            &self.sum / Complex64::new(self.count as f64, 0.0),
            vec![PhotonId(0), PhotonId(1)],
        )
        .expect("average of density matrices is a density matrix");
        let e = |t1: f64, t2: f64| {
            pbs_correlation(&mean, t1, t2).expect("mean state is two-photon")
        };
        CorrelationRow {
            subset,
            count: self.count,
            e_hv: e(0.0, 0.0),
            e_diag: e(FRAC_PI_4, FRAC_PI_4),
            e_mixed: e(0.0, FRAC_PI_4),
        }
    }
}

fn hv_label(o: PolarizationOutcome) -> &'static str {
    // at analyzer angle 0, Plus projects onto H
    match o {
        PolarizationOutcome::Plus => "h",
        PolarizationOutcome::Minus => "v",
    }
}

/// Runs `n_trials` delayed-choice trials with both sources emitting
/// `source`, sorting outer-pair states by Victor's choice and outcome.
pub fn sorted_diagrams(
    n_trials: u64,
    source: BellKind,
    seeds: SeedContext,
) -> Result<SortedDiagrams, ProtocolError> {
    if n_trials == 0 {
        return Err(ProtocolError::ZeroTrials);
    }
    let (p1, p2, p3, p4) = (PhotonId(0), PhotonId(1), PhotonId(2), PhotonId(3));
    let fresh = JointState::bell(source, (p1, p2)).tensor(&JointState::bell(source, (p3, p4)))?;
    let outer = [p1, p4];

    let mut bsm_acc: Vec<Accumulator> = (0..4).map(|_| Accumulator::new()).collect();
    let mut ssm_acc: Vec<Accumulator> = (0..4).map(|_| Accumulator::new()).collect();
    let mut union_acc = Accumulator::new();

    for trial in 0..n_trials {
        let mut rng = seeds.stream(StreamParty::Victor, trial, 0);
        if rng.gen_bool(0.5) {
            let (outcome, post) = fresh.bsm((p2, p3), &mut rng)?;
            let reduced = post.partial_trace(&outer)?;
            let slot = BellKind::ALL
                .iter()
                .position(|&k| k == outcome)
                .expect("outcome is a Bell kind");
            bsm_acc[slot].add(&reduced);
            union_acc.add(&reduced);
        } else {
            let (o2, post) = fresh.ssm(p2, 0.0, &mut rng)?;
            let (o3, post) = post.ssm(p3, 0.0, &mut rng)?;
            let reduced = post.partial_trace(&outer)?;
            let slot = 2 * usize::from(o2 == PolarizationOutcome::Minus)
                + usize::from(o3 == PolarizationOutcome::Minus);
            ssm_acc[slot].add(&reduced);
            union_acc.add(&reduced);
        }
    }

    let bsm_rows = BellKind::ALL
        .iter()
        .zip(&bsm_acc)
        .map(|(kind, acc)| acc.row(format!("bsm:{kind}")))
        .collect();
    use PolarizationOutcome::{Minus, Plus};
    let ssm_rows = [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)]
        .iter()
        .zip(&ssm_acc)
        .map(|((o2, o3), acc)| acc.row(format!("ssm:{}{}", hv_label(*o2), hv_label(*o3))))
        .collect();
    Ok(SortedDiagrams {
        n_trials,
        bsm_rows,
        ssm_rows,
        union_row: union_acc.row("all".to_string()),
    })
}
