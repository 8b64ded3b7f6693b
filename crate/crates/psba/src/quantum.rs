//! Exact few-qubit polarization states and measurements.
//!
//! [`JointState`] is a density matrix over up to four polarization qubits
//! and is the single source of truth for quantum state in the simulator.
//! States are immutable; every operation returns a fresh state. Sampling
//! operations take an explicit `Rng` so there is no hidden global state.
//!
//! Basis conventions: |H⟩ = index 0, |V⟩ = index 1; multi-photon basis
//! indices put the first photon in the label list on the most significant
//! bit, so a two-photon basis reads {HH, HV, VH, VV}. Bell states carry the
//! standard signs:
//!
//! ```text
//! Φ⁺ = (|HH⟩ + |VV⟩)/√2    Ψ⁺ = (|HV⟩ + |VH⟩)/√2
//! Φ⁻ = (|HH⟩ − |VV⟩)/√2    Ψ⁻ = (|HV⟩ − |VH⟩)/√2
//! ```

use nalgebra::DMatrix;
pub use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// Largest supported register. Four photons (two sources) is all the
/// protocol ever holds in one joint state.
pub const MAX_QUBITS: usize = 4;

/// Entrywise tolerance for Hermiticity and trace checks.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Slack on the minimum eigenvalue when checking positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("joint state would hold {0} qubits, at most {MAX_QUBITS} supported")]
    DimensionOverflow(usize),
    #[error("photon {0} is not part of this state")]
    UnknownPhoton(PhotonId),
    #[error("photon {0} appears more than once")]
    DuplicatePhoton(PhotonId),
    #[error("measurement targets must be distinct")]
    TargetsEqual,
    #[error("expected a state over {expected} qubits, got {got}")]
    WrongQubitCount { expected: usize, got: usize },
    #[error("state vector length {0} is not a power of two matching its labels")]
    BadAmplitudeLength(usize),
    #[error("state is not a valid density matrix: {0}")]
    InvalidDensity(String),
}

/// Opaque photon identifier. Fresh ids come from a [`PhotonAllocator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonId(pub u64);

impl std::fmt::Display for PhotonId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Hands out photon identifiers, never repeating one.
#[derive(Debug, Default)]
pub struct PhotonAllocator {
    next: u64,
}

impl PhotonAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> PhotonId {
        let id = PhotonId(self.next);
        self.next += 1;
        id
    }
}

/// The four maximally entangled two-photon polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    /// Amplitudes over {HH, HV, VH, VV}.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellKind::PhiPlus => [s, z, z, s],
            BellKind::PhiMinus => [s, z, z, -s],
            BellKind::PsiPlus => [z, s, s, z],
            BellKind::PsiMinus => [z, s, -s, z],
        }
    }

    /// (z, x) Pauli-frame bits: which of Z and X connects this state to Φ⁺.
    /// Entanglement swapping composes by XOR in this encoding.
    pub fn pauli_bits(self) -> (bool, bool) {
        match self {
            BellKind::PhiPlus => (false, false),
            BellKind::PhiMinus => (true, false),
            BellKind::PsiPlus => (false, true),
            BellKind::PsiMinus => (true, true),
        }
    }

    pub fn from_pauli_bits(z: bool, x: bool) -> Self {
        match (z, x) {
            (false, false) => BellKind::PhiPlus,
            (true, false) => BellKind::PhiMinus,
            (false, true) => BellKind::PsiPlus,
            (true, true) => BellKind::PsiMinus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi_plus",
            BellKind::PhiMinus => "phi_minus",
            BellKind::PsiPlus => "psi_plus",
            BellKind::PsiMinus => "psi_minus",
        }
    }
}

impl std::fmt::Display for BellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of a single-photon polarization measurement: projection onto the
/// analyzer axis (`Plus`) or onto its orthogonal complement (`Minus`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolarizationOutcome {
    Plus,
    Minus,
}

impl PolarizationOutcome {
    pub fn sign(self) -> i8 {
        match self {
            PolarizationOutcome::Plus => 1,
            PolarizationOutcome::Minus => -1,
        }
    }
}

/// Measurement actors of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Alice,
    Bob,
    Victor,
}

/// What a measurement did and what came out. Outcomes stay local to the
/// actor that produced them; the decoder never sees these.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordKind {
    Bsm {
        photons: (PhotonId, PhotonId),
        outcome: BellKind,
    },
    Ssm {
        photon: PhotonId,
        basis_angle: f64,
        outcome: PolarizationOutcome,
    },
}

/// One logged measurement. `sequence` increases strictly per actor.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub actor: Actor,
    pub sequence: u64,
    pub kind: RecordKind,
}

/// Density matrix over an ordered list of labeled photons.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dim: usize,
    matrix: DMatrix<Complex64>,
    labels: Vec<PhotonId>,
}

impl JointState {
    /// Pure state ρ = |ψ⟩⟨ψ| from amplitudes over the computational basis.
    /// The vector is normalized; it must not be (numerically) zero.
    pub fn from_pure(amplitudes: &[Complex64], labels: Vec<PhotonId>) -> Result<Self, QuantumError> {
        let n = labels.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(QuantumError::DimensionOverflow(n));
        }
        check_distinct(&labels)?;
        let dim = 1usize << n;
        if amplitudes.len() != dim {
            return Err(QuantumError::BadAmplitudeLength(amplitudes.len()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq < 1e-300 {
            return Err(QuantumError::InvalidDensity("zero state vector".into()));
        }
        let scale = norm_sq.sqrt();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            (amplitudes[i] / scale) * (amplitudes[j] / scale).conj()
        });
        Ok(Self { dim, matrix, labels })
    }

    /// Density matrix built directly from entries. Validates the result.
    pub fn from_matrix(
        matrix: DMatrix<Complex64>,
        labels: Vec<PhotonId>,
    ) -> Result<Self, QuantumError> {
        let n = labels.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(QuantumError::DimensionOverflow(n));
        }
        check_distinct(&labels)?;
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QuantumError::BadAmplitudeLength(matrix.nrows()));
        }
        let state = Self { dim, matrix, labels };
        state.validate()?;
        Ok(state)
    }

    /// The requested Bell state on two labeled photons.
    pub fn bell(kind: BellKind, labels: (PhotonId, PhotonId)) -> Self {
        Self::from_pure(&kind.amplitudes(), vec![labels.0, labels.1])
            .expect("Bell amplitudes are a valid pure state")
    }

    /// Product of two linearly polarized photons at the given analyzer
    /// angles (0 = |H⟩, π/2 = |V⟩).
    pub fn linear_polarized_pair(theta1: f64, theta2: f64) -> Self {
        let (c1, s1) = (theta1.cos(), theta1.sin());
        let (c2, s2) = (theta2.cos(), theta2.sin());
        let amps = [
            Complex64::new(c1 * c2, 0.0),
            Complex64::new(c1 * s2, 0.0),
            Complex64::new(s1 * c2, 0.0),
            Complex64::new(s1 * s2, 0.0),
        ];
        Self::from_pure(&amps, vec![PhotonId(0), PhotonId(1)])
            .expect("product amplitudes are a valid pure state")
    }

    /// Maximally mixed state I/2ⁿ over the given photons.
    pub fn maximally_mixed(labels: Vec<PhotonId>) -> Result<Self, QuantumError> {
        let n = labels.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(QuantumError::DimensionOverflow(n));
        }
        check_distinct(&labels)?;
        let dim = 1usize << n;
        let w = Complex64::new(1.0 / dim as f64, 0.0);
        let matrix = DMatrix::from_fn(dim, dim, |i, j| if i == j { w } else { Complex64::ZERO });
        Ok(Self { dim, matrix, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[PhotonId] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    fn position_of(&self, photon: PhotonId) -> Result<usize, QuantumError> {
        self.labels
            .iter()
            .position(|&p| p == photon)
            .ok_or(QuantumError::UnknownPhoton(photon))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// tr(ρ²); 1 for pure states.
    pub fn purity(&self) -> f64 {
        // Hermitian ρ: tr(ρ²) = Σ |ρ_ij|².
        self.matrix.iter().map(|e| e.norm_sqr()).sum()
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure state given by amplitudes in this state's basis.
    pub fn fidelity_with_pure(&self, amplitudes: &[Complex64]) -> Result<f64, QuantumError> {
        if amplitudes.len() != self.dim {
            return Err(QuantumError::BadAmplitudeLength(amplitudes.len()));
        }
        let mut acc = Complex64::ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += amplitudes[i].conj() * self.matrix[(i, j)] * amplitudes[j];
            }
        }
        Ok(acc.re)
    }

    /// Smallest eigenvalue; the PSD check is `min_eigenvalue() > -PSD_TOL`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Von Neumann entropy −Σ λ log₂ λ in bits.
    pub fn von_neumann_entropy_bits(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&l| l > 1e-15)
            .map(|&l| -l * l.log2())
            .sum()
    }

    /// Checks the density-matrix invariants: Hermitian and unit trace within
    /// 1e-12 entrywise, minimum eigenvalue above −1e-10.
    pub fn validate(&self) -> Result<(), QuantumError> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                if d.norm() > ALGEBRA_TOL {
                    return Err(QuantumError::InvalidDensity(format!(
                        "not Hermitian at ({i},{j}): residual {}",
                        d.norm()
                    )));
                }
            }
        }
        let tr = self.matrix.trace();
        if (tr - Complex64::ONE).norm() > ALGEBRA_TOL {
            return Err(QuantumError::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min <= -PSD_TOL {
            return Err(QuantumError::InvalidDensity(format!(
                "negative eigenvalue {min}"
            )));
        }
        Ok(())
    }

    /// Largest |Δ| over entries against another state with identical labels.
    pub fn max_entrywise_distance(&self, other: &JointState) -> Result<f64, QuantumError> {
        if self.labels != other.labels {
            return Err(QuantumError::WrongQubitCount {
                expected: self.num_qubits(),
                got: other.num_qubits(),
            });
        }
        let mut max = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                max = max.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        Ok(max)
    }

    /// Kronecker product; labels concatenate.
    pub fn tensor(&self, other: &JointState) -> Result<JointState, QuantumError> {
        let n = self.num_qubits() + other.num_qubits();
        if n > MAX_QUBITS {
            return Err(QuantumError::DimensionOverflow(n));
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        check_distinct(&labels)?;
        Ok(JointState {
            dim: self.dim * other.dim,
            matrix: self.matrix.kronecker(&other.matrix),
            labels,
        })
    }

    /// Reduced density operator over `keep`, in the photon order of this
    /// state's label list.
    pub fn partial_trace(&self, keep: &[PhotonId]) -> Result<JointState, QuantumError> {
        check_distinct(keep)?;
        let mut keep_positions: Vec<usize> = keep
            .iter()
            .map(|&p| self.position_of(p))
            .collect::<Result<_, _>>()?;
        keep_positions.sort_unstable();
        if keep_positions.is_empty() || keep_positions.len() == self.num_qubits() {
            if keep_positions.len() == self.num_qubits() {
                return Ok(self.clone());
            }
            return Err(QuantumError::WrongQubitCount {
                expected: 1,
                got: 0,
            });
        }
        let idx = SubsystemIndex::new(self.num_qubits(), &keep_positions);
        let kept_dim = idx.sub_dim;
        let mut reduced = DMatrix::from_element(kept_dim, kept_dim, Complex64::ZERO);
        for a in 0..kept_dim {
            for b in 0..kept_dim {
                let mut acc = Complex64::ZERO;
                for r in 0..idx.rest_dim {
                    acc += self.matrix[(idx.full(a, r), idx.full(b, r))];
                }
                reduced[(a, b)] = acc;
            }
        }
        let labels = keep_positions.iter().map(|&p| self.labels[p]).collect();
        Ok(JointState {
            dim: kept_dim,
            matrix: reduced,
            labels,
        })
    }

    /// Projects the listed photons onto the pure state with the given
    /// amplitudes. Returns the outcome probability and the normalized
    /// post-measurement state, or `None` when the probability vanishes.
    fn project_onto(
        &self,
        positions: &[usize],
        amps: &[Complex64],
    ) -> Option<(f64, JointState)> {
        let idx = SubsystemIndex::new(self.num_qubits(), positions);
        debug_assert_eq!(amps.len(), idx.sub_dim);
        // cross[r, r'] = ⟨ψ; r| ρ |ψ; r'⟩
        let mut cross = DMatrix::from_element(idx.rest_dim, idx.rest_dim, Complex64::ZERO);
        for r in 0..idx.rest_dim {
            for rp in 0..idx.rest_dim {
                let mut acc = Complex64::ZERO;
                for s in 0..idx.sub_dim {
                    for sp in 0..idx.sub_dim {
                        acc += amps[s].conj()
                            * self.matrix[(idx.full(s, r), idx.full(sp, rp))]
                            * amps[sp];
                    }
                }
                cross[(r, rp)] = acc;
            }
        }
        let prob: f64 = (0..idx.rest_dim).map(|r| cross[(r, r)].re).sum();
        if prob < 1e-15 {
            return None;
        }
        let mut post = DMatrix::from_element(self.dim, self.dim, Complex64::ZERO);
        for s in 0..idx.sub_dim {
            for sp in 0..idx.sub_dim {
                let weight = amps[s] * amps[sp].conj() / prob;
                if weight == Complex64::ZERO {
                    continue;
                }
                for r in 0..idx.rest_dim {
                    for rp in 0..idx.rest_dim {
                        post[(idx.full(s, r), idx.full(sp, rp))] = weight * cross[(r, rp)];
                    }
                }
            }
        }
        Some((
            prob,
            JointState {
                dim: self.dim,
                matrix: post,
                labels: self.labels.clone(),
            },
        ))
    }

    /// Exact Bell-basis measurement statistics on two photons: outcome
    /// probability and normalized post-measurement state per [`BellKind`].
    /// Zero-probability branches carry the unchanged state.
    pub fn bsm_outcome_distribution(
        &self,
        targets: (PhotonId, PhotonId),
    ) -> Result<Vec<(BellKind, f64, JointState)>, QuantumError> {
        if targets.0 == targets.1 {
            return Err(QuantumError::TargetsEqual);
        }
        let positions = [self.position_of(targets.0)?, self.position_of(targets.1)?];
        let mut out = Vec::with_capacity(4);
        for kind in BellKind::ALL {
            match self.project_onto(&positions, &kind.amplitudes()) {
                Some((p, state)) => out.push((kind, p, state)),
                None => out.push((kind, 0.0, self.clone())),
            }
        }
        Ok(out)
    }

    /// Bell-state measurement on two photons with Born-rule sampling.
    pub fn bsm<R: Rng + ?Sized>(
        &self,
        targets: (PhotonId, PhotonId),
        rng: &mut R,
    ) -> Result<(BellKind, JointState), QuantumError> {
        let branches = self.bsm_outcome_distribution(targets)?;
        let picked = sample_branch(branches.iter().map(|(_, p, _)| *p), rng);
        let (kind, _, state) = branches.into_iter().nth(picked).expect("branch index");
        Ok((kind, state))
    }

    /// Exact single-photon measurement statistics in the linear basis
    /// rotated by `basis_angle` (0 = H/V).
    pub fn ssm_outcome_distribution(
        &self,
        target: PhotonId,
        basis_angle: f64,
    ) -> Result<Vec<(PolarizationOutcome, f64, JointState)>, QuantumError> {
        let position = [self.position_of(target)?];
        let (c, s) = (basis_angle.cos(), basis_angle.sin());
        let axes = [
            (
                PolarizationOutcome::Plus,
                [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
            ),
            (
                PolarizationOutcome::Minus,
                [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
            ),
        ];
        let mut out = Vec::with_capacity(2);
        for (outcome, amps) in axes {
            match self.project_onto(&position, &amps) {
                Some((p, state)) => out.push((outcome, p, state)),
                None => out.push((outcome, 0.0, self.clone())),
            }
        }
        Ok(out)
    }

    /// Projective single-photon polarization measurement with sampling.
    pub fn ssm<R: Rng + ?Sized>(
        &self,
        target: PhotonId,
        basis_angle: f64,
        rng: &mut R,
    ) -> Result<(PolarizationOutcome, JointState), QuantumError> {
        let branches = self.ssm_outcome_distribution(target, basis_angle)?;
        let picked = sample_branch(branches.iter().map(|(_, p, _)| *p), rng);
        let (outcome, _, state) = branches.into_iter().nth(picked).expect("branch index");
        Ok((outcome, state))
    }
}

/// The Bell state a fresh pair source emits, on two freshly allocated
/// photons.
pub fn spdc_pair_source(kind: BellKind, alloc: &mut PhotonAllocator) -> JointState {
    let a = alloc.fresh();
    let b = alloc.fresh();
    JointState::bell(kind, (a, b))
}

/// Convenience constructor with anonymous labels 0 and 1.
pub fn bell_state(kind: BellKind) -> JointState {
    JointState::bell(kind, (PhotonId(0), PhotonId(1)))
}

fn check_distinct(labels: &[PhotonId]) -> Result<(), QuantumError> {
    for (i, &a) in labels.iter().enumerate() {
        if labels[i + 1..].contains(&a) {
            return Err(QuantumError::DuplicatePhoton(a));
        }
    }
    Ok(())
}

/// Index bookkeeping for a subsystem at fixed qubit positions: composes a
/// full basis index from a subsystem index and a rest index. Qubit at label
/// position `i` sits on bit `n-1-i`.
struct SubsystemIndex {
    sub_dim: usize,
    rest_dim: usize,
    /// full_index[s * rest_dim + r]
    table: Vec<usize>,
}

impl SubsystemIndex {
    fn new(n: usize, positions: &[usize]) -> Self {
        let k = positions.len();
        let sub_dim = 1usize << k;
        let rest_dim = 1usize << (n - k);
        let dim = 1usize << n;
        let mut table = vec![0usize; dim];
        for x in 0..dim {
            let mut s = 0usize;
            for &p in positions {
                s = (s << 1) | ((x >> (n - 1 - p)) & 1);
            }
            let mut r = 0usize;
            for p in 0..n {
                if !positions.contains(&p) {
                    r = (r << 1) | ((x >> (n - 1 - p)) & 1);
                }
            }
            table[s * rest_dim + r] = x;
        }
        Self {
            sub_dim,
            rest_dim,
            table,
        }
    }

    fn full(&self, sub: usize, rest: usize) -> usize {
        self.table[sub * self.rest_dim + rest]
    }
}

/// Cumulative Born sampling over branch probabilities. Tiny negative
/// probabilities from roundoff are clamped to zero.
fn sample_branch<I, R>(probs: I, rng: &mut R) -> usize
where
    I: Iterator<Item = f64>,
    R: Rng + ?Sized,
{
    let clamped: Vec<f64> = probs.map(|p| p.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    debug_assert!(total > 0.0, "all branches have zero probability");
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in clamped.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    clamped.len() - 1
}
