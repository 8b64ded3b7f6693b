//! The signaling protocol proper: entanglement groups, statistical
//! correction groups, Alice's BSM/SSM bit encoding, Bob's beam-splitter
//! block decoding, block-length calibration, message framing, and channel
//! polling.
//!
//! Terminology. An entanglement group (EG) is two photon pairs from
//! independent sources; Alice holds the inner photons (2, 3), Bob the
//! outer ones (1, 4). A statistical correction group (SCG) is an ordered
//! block of `r_c` EGs carrying one bit: to send 1 Alice swap-entangles
//! every EG by a Bell-state measurement on (2, 3); to send 0 she measures
//! her photons individually. Bob sends each of his pairs through a 50:50
//! beam splitter and thresholds the different-port fraction.
//!
//! Physics modes. `Physical` evaluates Bob's statistics on the true
//! reduced (1, 4) state at the analyzer's visibility; the different-port
//! probability is then 1/4 no matter what Alice did, so no information
//! crosses. `PaperIdealized` grants the conjecture under test: pairs from
//! SSM-measured (or untouched) EGs are treated as fully distinguishable
//! (effective visibility 0, coin-flip ports), so Alice's choice shifts the
//! fraction between 1/4 and 1/2 and the channel works.
//!
//! Nothing on the decode path reads Alice's measurement outcomes; her
//! records exist only for transcripts. The one deliberate exception is
//! [`sorted::sorted_diagrams`], which reproduces the known sorting
//! analysis where outcomes are shared after the fact.

mod frame;
pub mod sorted;

pub use frame::{
    bits_from_bytes, bytes_from_bits, decode_frame, encode_frame, frame_bits, message_from_bits,
    FrameError,
};

use crate::optics::{sample_bs_event, AnalyzerConfig, AnalyzerEvent, OpticsError, PortPattern};
use crate::quantum::{
    Actor, BellKind, JointState, MeasurementRecord, PhotonAllocator, PhotonId,
    PolarizationOutcome, QuantumError, RecordKind,
};
use crate::rng::{SeedContext, StreamParty};
use std::str::FromStr;
use thiserror::Error;

/// Hard cap on entanglement groups per pool, keeping provisioning honest
/// about memory.
pub const MAX_POOL_EGS: u64 = 8_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("pool of {requested} entanglement groups exceeds the cap of {max}")]
    PoolTooLarge { requested: u64, max: u64 },
    #[error("r_c must be at least 1")]
    ZeroRc,
    #[error("a pool needs at least one SCG")]
    ZeroScgs,
    #[error("SCG {0} was already encoded")]
    ScgAlreadyEncoded(u64),
    #[error("SCG {0} was already analyzed")]
    ScgAlreadyAnalyzed(u64),
    #[error("SCG index {index} out of range for a pool of {len}")]
    ScgOutOfRange { index: u64, len: u64 },
    #[error("pool exhausted: needed {needed} unconsumed SCGs, have {available}")]
    PoolExhausted { needed: u64, available: u64 },
    #[error("invalid probability ordering: need 0 < p1 < p0 < 1, got p1={p1}, p0={p0}")]
    BadProbabilityOrder { p1: f64, p0: f64 },
    #[error("certainty target {0} outside (0.5, 1)")]
    BadCertainty(f64),
    #[error("threshold {0} outside (0, 1)")]
    BadThreshold(f64),
    #[error("poll interval must be positive and finite, got {0}")]
    BadPollInterval(f64),
    #[error("need at least one trial")]
    ZeroTrials,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Which physics governs Bob's analyzer statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhysicsMode {
    /// The distinguishability assumption the protocol's signaling claim
    /// rests on: SSM-measured and untouched pairs reach the beam splitter
    /// fully distinguishable.
    PaperIdealized,
    /// Standard quantum mechanics: the analyzer sees the true reduced
    /// state at the configured visibility, whatever Alice measured.
    Physical,
}

impl PhysicsMode {
    pub fn label(self) -> &'static str {
        match self {
            PhysicsMode::PaperIdealized => "paper",
            PhysicsMode::Physical => "physical",
        }
    }
}

impl std::fmt::Display for PhysicsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown physics mode {0:?}, expected \"paper\" or \"physical\"")]
pub struct ParsePhysicsModeError(pub String);

impl FromStr for PhysicsMode {
    type Err = ParsePhysicsModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(PhysicsMode::PaperIdealized),
            "physical" => Ok(PhysicsMode::Physical),
            other => Err(ParsePhysicsModeError(other.to_string())),
        }
    }
}

/// How an EG's (1, 4) pair state came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeKind {
    Bsm,
    Ssm,
}

/// Quantum bookkeeping of one EG. The fresh four-photon state is implied
/// by the source kind and materialized only at encode time; afterwards
/// only the 4x4 reduced pair state survives, and analysis drops even that.
#[derive(Debug, Clone, PartialEq)]
enum EgQuantum {
    Fresh,
    Encoded { pair: JointState, kind: EncodeKind },
    Consumed { kind: Option<EncodeKind> },
}

/// One entanglement group: photons 1 and 4 at Bob, 2 and 3 at Alice,
/// pairwise entangled (1,2) and (3,4) at birth.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementGroup {
    index: u64,
    source: BellKind,
    alice_photons: (PhotonId, PhotonId),
    bob_photons: (PhotonId, PhotonId),
    state: EgQuantum,
}

impl EntanglementGroup {
    pub(crate) fn fresh(index: u64, source: BellKind, alloc: &mut PhotonAllocator) -> Self {
        // allocation order fixes the roles: 1, 2, 3, 4
        let p1 = alloc.fresh();
        let p2 = alloc.fresh();
        let p3 = alloc.fresh();
        let p4 = alloc.fresh();
        Self {
            index,
            source,
            alice_photons: (p2, p3),
            bob_photons: (p1, p4),
            state: EgQuantum::Fresh,
        }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn source(&self) -> BellKind {
        self.source
    }

    pub fn alice_photons(&self) -> (PhotonId, PhotonId) {
        self.alice_photons
    }

    pub fn bob_photons(&self) -> (PhotonId, PhotonId) {
        self.bob_photons
    }

    pub fn is_encoded(&self) -> bool {
        matches!(self.state, EgQuantum::Encoded { .. })
    }

    pub fn is_consumed(&self) -> bool {
        matches!(self.state, EgQuantum::Consumed { .. })
    }

    /// The full four-photon state of a fresh EG, labels ordered 1, 2, 3, 4.
    fn full_fresh_state(&self) -> JointState {
        let first = JointState::bell(self.source, (self.bob_photons.0, self.alice_photons.0));
        let second = JointState::bell(self.source, (self.alice_photons.1, self.bob_photons.1));
        first
            .tensor(&second)
            .expect("four distinct photons fit the register")
    }

    /// Bob's current (1, 4) state; `None` once analyzed. Fresh EGs carry
    /// I/4 exactly: each of Bob's photons is half of a maximally entangled
    /// pair whose partner is untouched.
    pub fn pair_state(&self) -> Option<JointState> {
        match &self.state {
            EgQuantum::Fresh => Some(
                JointState::maximally_mixed(vec![self.bob_photons.0, self.bob_photons.1])
                    .expect("two distinct photons"),
            ),
            EgQuantum::Encoded { pair, .. } => Some(pair.clone()),
            EgQuantum::Consumed { .. } => None,
        }
    }

    fn encode_kind(&self) -> Option<EncodeKind> {
        match &self.state {
            EgQuantum::Fresh => None,
            EgQuantum::Encoded { kind, .. } => Some(*kind),
            EgQuantum::Consumed { kind } => *kind,
        }
    }

    pub(crate) fn encode_bsm(&mut self, rng: &mut impl rand::Rng) -> Result<BellKind, ProtocolError> {
        let full = self.full_fresh_state();
        let (outcome, post) = full.bsm((self.alice_photons.0, self.alice_photons.1), rng)?;
        let pair = post.partial_trace(&[self.bob_photons.0, self.bob_photons.1])?;
        self.state = EgQuantum::Encoded {
            pair,
            kind: EncodeKind::Bsm,
        };
        Ok(outcome)
    }

    pub(crate) fn encode_ssm(
        &mut self,
        rng: &mut impl rand::Rng,
    ) -> Result<(PolarizationOutcome, PolarizationOutcome), ProtocolError> {
        let full = self.full_fresh_state();
        let (o2, after) = full.ssm(self.alice_photons.0, 0.0, rng)?;
        let (o3, after) = after.ssm(self.alice_photons.1, 0.0, rng)?;
        let pair = after.partial_trace(&[self.bob_photons.0, self.bob_photons.1])?;
        self.state = EgQuantum::Encoded {
            pair,
            kind: EncodeKind::Ssm,
        };
        Ok((o2, o3))
    }

    /// The visibility Bob's beam splitter sees for this EG under `mode`.
    fn effective_visibility(&self, analyzer: &AnalyzerConfig, mode: PhysicsMode) -> f64 {
        match (mode, self.encode_kind()) {
            (PhysicsMode::Physical, _) => analyzer.visibility,
            (PhysicsMode::PaperIdealized, Some(EncodeKind::Bsm)) => analyzer.visibility,
            // the conjecture's case: separable or untouched pairs arrive
            // fully distinguishable
            (PhysicsMode::PaperIdealized, Some(EncodeKind::Ssm) | None) => 0.0,
        }
    }

    pub(crate) fn analyze(
        &mut self,
        analyzer: &AnalyzerConfig,
        mode: PhysicsMode,
        rng: &mut impl rand::Rng,
    ) -> Result<PortPattern, ProtocolError> {
        let pair = self
            .pair_state()
            .ok_or(ProtocolError::ScgAlreadyAnalyzed(self.index))?;
        let v_eff = self.effective_visibility(analyzer, mode);
        let event = sample_bs_event(&pair, v_eff, rng)?;
        self.state = EgQuantum::Consumed {
            kind: self.encode_kind(),
        };
        match event {
            AnalyzerEvent::BeamSplitter { pattern } => Ok(pattern),
            AnalyzerEvent::PolarizingBs { .. } => unreachable!("sample_bs_event is setup (b)"),
        }
    }
}

/// An ordered block of `r_c` EGs carrying one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalCorrectionGroup {
    index: u64,
    egs: Vec<EntanglementGroup>,
    encoded_bit: Option<bool>,
    analyzed: bool,
}

impl StatisticalCorrectionGroup {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn egs(&self) -> &[EntanglementGroup] {
        &self.egs
    }

    /// The bit Alice encoded here, if she has.
    pub fn encoded_bit(&self) -> Option<bool> {
        self.encoded_bit
    }

    pub fn is_analyzed(&self) -> bool {
        self.analyzed
    }
}

/// Hard threshold on the observed different-port fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRule {
    pub threshold: f64,
    pub certainty: f64,
}

impl DecisionRule {
    pub fn new(threshold: f64, certainty: f64) -> Result<Self, ProtocolError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ProtocolError::BadThreshold(threshold));
        }
        if !(certainty > 0.5 && certainty < 1.0) {
            return Err(ProtocolError::BadCertainty(certainty));
        }
        Ok(Self {
            threshold,
            certainty,
        })
    }

    /// fraction < t reads 1 (the low-fraction, swap-entangled symbol);
    /// fraction ≥ t reads 0. A fraction exactly at t therefore reads 0.
    pub fn decide(&self, fraction: f64) -> bool {
        fraction < self.threshold
    }
}

/// Block length and threshold meeting a per-bit certainty target, from the
/// Hoeffding bound exp(−2 r ((p0−p1)/2)²) ≤ 1 − p_target at the midpoint
/// threshold.
pub fn calibrate_rc(
    p_target: f64,
    p1: f64,
    p0: f64,
) -> Result<(u32, DecisionRule), ProtocolError> {
    if !(p1 > 0.0 && p0 > p1 && p0 < 1.0) {
        return Err(ProtocolError::BadProbabilityOrder { p1, p0 });
    }
    if !(p_target > 0.5 && p_target < 1.0) {
        return Err(ProtocolError::BadCertainty(p_target));
    }
    let threshold = (p1 + p0) / 2.0;
    let eps = (p0 - p1) / 2.0;
    let r = ((1.0 / (1.0 - p_target)).ln() / (2.0 * eps * eps)).ceil();
    let r_c = (r.max(1.0)) as u32;
    Ok((r_c, DecisionRule::new(threshold, p_target)?))
}

/// Result of analyzing one SCG at Bob's beam splitter.
#[derive(Debug, Clone, PartialEq)]
pub struct BitDecode {
    pub scg_index: u64,
    pub bit: bool,
    pub n_diff: u32,
    pub n_same: u32,
    pub fraction: f64,
}

/// Per-bit sending record: which SCG carried it and what Alice measured.
/// The records never leave Alice's side of the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct BitTranscript {
    pub scg_index: u64,
    pub bit: bool,
    pub records: Vec<MeasurementRecord>,
}

/// Alice's side of one framed transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub frame_bits: Vec<bool>,
    pub per_bit: Vec<BitTranscript>,
}

/// Bob's side of one framed reception.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedMessage {
    /// Length byte as decoded off the channel.
    pub claimed_len: u8,
    /// Payload bytes as decoded.
    pub bytes: Vec<u8>,
    pub decodes: Vec<BitDecode>,
}

/// A provisioned, ordered supply of SCGs shared by Alice and Bob. Both
/// parties hold cursors into the same ordering, which is what "pay
/// attention to the same order" buys: no classical coordination during
/// use.
#[derive(Debug)]
pub struct ScgPool {
    scgs: Vec<StatisticalCorrectionGroup>,
    r_c: u32,
    source: BellKind,
    seeds: SeedContext,
    next_encode: u64,
    next_decode: u64,
    alice_sequence: u64,
}

impl ScgPool {
    /// Provisions `n_scg` SCGs of `r_c` fresh EGs each. `seeds` scopes all
    /// randomness drawn while using this pool.
    pub fn provision(
        n_scg: u64,
        r_c: u32,
        source: BellKind,
        seeds: SeedContext,
    ) -> Result<Self, ProtocolError> {
        if n_scg == 0 {
            return Err(ProtocolError::ZeroScgs);
        }
        if r_c == 0 {
            return Err(ProtocolError::ZeroRc);
        }
        n_scg
            .checked_mul(u64::from(r_c))
            .filter(|&total| total <= MAX_POOL_EGS)
            .ok_or(ProtocolError::PoolTooLarge {
                requested: n_scg.saturating_mul(u64::from(r_c)),
                max: MAX_POOL_EGS,
            })?;
        let mut alloc = PhotonAllocator::new();
        let mut scgs = Vec::with_capacity(n_scg as usize);
        let mut eg_index = 0u64;
        for scg_index in 0..n_scg {
            let egs = (0..r_c)
                .map(|_| {
                    let eg = EntanglementGroup::fresh(eg_index, source, &mut alloc);
                    eg_index += 1;
                    eg
                })
                .collect();
            scgs.push(StatisticalCorrectionGroup {
                index: scg_index,
                egs,
                encoded_bit: None,
                analyzed: false,
            });
        }
        Ok(Self {
            scgs,
            r_c,
            source,
            seeds,
            next_encode: 0,
            next_decode: 0,
            alice_sequence: 0,
        })
    }

    pub fn len(&self) -> u64 {
        self.scgs.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.scgs.is_empty()
    }

    pub fn r_c(&self) -> u32 {
        self.r_c
    }

    pub fn source(&self) -> BellKind {
        self.source
    }

    pub fn scg(&self, index: u64) -> Option<&StatisticalCorrectionGroup> {
        self.scgs.get(index as usize)
    }

    pub fn remaining_to_encode(&self) -> u64 {
        self.len() - self.next_encode
    }

    pub fn remaining_to_decode(&self) -> u64 {
        self.len() - self.next_decode
    }

    /// Alice encodes `bit` into the next SCG in order.
    pub fn encode_bit(&mut self, bit: bool) -> Result<Vec<MeasurementRecord>, ProtocolError> {
        if self.next_encode >= self.len() {
            return Err(ProtocolError::PoolExhausted {
                needed: 1,
                available: 0,
            });
        }
        let index = self.next_encode;
        let records = self.encode_bit_at(index, bit)?;
        self.next_encode = index + 1;
        Ok(records)
    }

    /// Alice encodes `bit` into a specific SCG. Does not move the cursor.
    pub fn encode_bit_at(
        &mut self,
        scg_index: u64,
        bit: bool,
    ) -> Result<Vec<MeasurementRecord>, ProtocolError> {
        let len = self.len();
        let seeds = self.seeds;
        let mut sequence = self.alice_sequence;
        let scg = self
            .scgs
            .get_mut(scg_index as usize)
            .ok_or(ProtocolError::ScgOutOfRange {
                index: scg_index,
                len,
            })?;
        if scg.encoded_bit.is_some() {
            return Err(ProtocolError::ScgAlreadyEncoded(scg_index));
        }
        if scg.analyzed {
            return Err(ProtocolError::ScgAlreadyAnalyzed(scg_index));
        }
        let mut records = Vec::with_capacity(if bit { scg.egs.len() } else { 2 * scg.egs.len() });
        for eg in &mut scg.egs {
            let mut rng = seeds.stream(StreamParty::Alice, eg.index, 0);
            if bit {
                let outcome = eg.encode_bsm(&mut rng)?;
                records.push(MeasurementRecord {
                    actor: Actor::Alice,
                    sequence,
                    kind: RecordKind::Bsm {
                        photons: eg.alice_photons,
                        outcome,
                    },
                });
                sequence += 1;
            } else {
                let (o2, o3) = eg.encode_ssm(&mut rng)?;
                for (photon, outcome) in [(eg.alice_photons.0, o2), (eg.alice_photons.1, o3)] {
                    records.push(MeasurementRecord {
                        actor: Actor::Alice,
                        sequence,
                        kind: RecordKind::Ssm {
                            photon,
                            basis_angle: 0.0,
                            outcome,
                        },
                    });
                    sequence += 1;
                }
            }
        }
        scg.encoded_bit = Some(bit);
        self.alice_sequence = sequence;
        Ok(records)
    }

    /// Bob analyzes the next SCG in order.
    pub fn decode_bit(
        &mut self,
        analyzer: &AnalyzerConfig,
        rule: &DecisionRule,
        mode: PhysicsMode,
    ) -> Result<BitDecode, ProtocolError> {
        if self.next_decode >= self.len() {
            return Err(ProtocolError::PoolExhausted {
                needed: 1,
                available: 0,
            });
        }
        let index = self.next_decode;
        let decode = self.decode_bit_at(index, analyzer, rule, mode)?;
        self.next_decode = index + 1;
        Ok(decode)
    }

    /// Bob analyzes a specific SCG. Does not move the cursor.
    pub fn decode_bit_at(
        &mut self,
        scg_index: u64,
        analyzer: &AnalyzerConfig,
        rule: &DecisionRule,
        mode: PhysicsMode,
    ) -> Result<BitDecode, ProtocolError> {
        analyzer.validate()?;
        let len = self.len();
        let seeds = self.seeds;
        let scg = self
            .scgs
            .get_mut(scg_index as usize)
            .ok_or(ProtocolError::ScgOutOfRange {
                index: scg_index,
                len,
            })?;
        if scg.analyzed {
            return Err(ProtocolError::ScgAlreadyAnalyzed(scg_index));
        }
        let mut n_diff = 0u32;
        let mut n_same = 0u32;
        for eg in &mut scg.egs {
            let mut rng = seeds.stream(StreamParty::Bob, eg.index, 0);
            match eg.analyze(analyzer, mode, &mut rng)? {
                PortPattern::DifferentPorts => n_diff += 1,
                PortPattern::SamePort => n_same += 1,
            }
        }
        scg.analyzed = true;
        let fraction = f64::from(n_diff) / f64::from(n_diff + n_same);
        Ok(BitDecode {
            scg_index,
            bit: rule.decide(fraction),
            n_diff,
            n_same,
            fraction,
        })
    }
}

/// Alice frames `text` as [length byte][payload] and encodes it bit by
/// bit, most significant first, one SCG per bit.
pub fn send_message(text: &[u8], pool: &mut ScgPool) -> Result<Transcript, ProtocolError> {
    let frame_bits = frame_bits(text)?;
    let needed = frame_bits.len() as u64;
    let available = pool.remaining_to_encode();
    if needed > available {
        return Err(ProtocolError::PoolExhausted { needed, available });
    }
    let mut per_bit = Vec::with_capacity(frame_bits.len());
    for &bit in &frame_bits {
        let scg_index = pool.next_encode;
        let records = pool.encode_bit(bit)?;
        per_bit.push(BitTranscript {
            scg_index,
            bit,
            records,
        });
    }
    Ok(Transcript {
        frame_bits,
        per_bit,
    })
}

fn decode_byte(
    pool: &mut ScgPool,
    analyzer: &AnalyzerConfig,
    rule: &DecisionRule,
    mode: PhysicsMode,
    decodes: &mut Vec<BitDecode>,
) -> Result<u8, ProtocolError> {
    let mut bits = [false; 8];
    for bit in &mut bits {
        let d = pool.decode_bit(analyzer, rule, mode)?;
        *bit = d.bit;
        decodes.push(d);
    }
    Ok(bytes_from_bits(&bits)[0])
}

/// Bob decodes a framed message, trusting the decoded length byte for the
/// payload size. Fails if the pool runs out mid-message.
pub fn receive_message(
    pool: &mut ScgPool,
    analyzer: &AnalyzerConfig,
    rule: &DecisionRule,
    mode: PhysicsMode,
) -> Result<ReceivedMessage, ProtocolError> {
    let mut decodes = Vec::new();
    let claimed_len = decode_byte(pool, analyzer, rule, mode, &mut decodes)?;
    let needed = 8 * u64::from(claimed_len);
    let available = pool.remaining_to_decode();
    if needed > available {
        return Err(ProtocolError::PoolExhausted { needed, available });
    }
    let mut bytes = Vec::with_capacity(claimed_len as usize);
    for _ in 0..claimed_len {
        bytes.push(decode_byte(pool, analyzer, rule, mode, &mut decodes)?);
    }
    Ok(ReceivedMessage {
        claimed_len,
        bytes,
        decodes,
    })
}

/// Bob decodes a framed message of known payload length (the protocol
/// assumes he knows how many SCGs to analyze), so reception terminates
/// even when the decoded length byte is garbage.
pub fn receive_message_known_length(
    pool: &mut ScgPool,
    analyzer: &AnalyzerConfig,
    rule: &DecisionRule,
    mode: PhysicsMode,
    payload_len: u8,
) -> Result<ReceivedMessage, ProtocolError> {
    let needed = 8 * (1 + u64::from(payload_len));
    let available = pool.remaining_to_decode();
    if needed > available {
        return Err(ProtocolError::PoolExhausted { needed, available });
    }
    let mut decodes = Vec::new();
    let claimed_len = decode_byte(pool, analyzer, rule, mode, &mut decodes)?;
    let mut bytes = Vec::with_capacity(payload_len as usize);
    for _ in 0..payload_len {
        bytes.push(decode_byte(pool, analyzer, rule, mode, &mut decodes)?);
    }
    Ok(ReceivedMessage {
        claimed_len,
        bytes,
        decodes,
    })
}

/// One scheduled channel read.
#[derive(Debug, Clone, PartialEq)]
pub struct PollSlot {
    pub time_s: f64,
    pub scg_index: u64,
}

/// A performed channel read: a decoded 1 flags "message data follows in
/// the next SCGs".
#[derive(Debug, Clone, PartialEq)]
pub struct PollEvent {
    pub time_s: f64,
    pub scg_index: u64,
    pub bit: bool,
    pub starts_message: bool,
}

/// Deterministic schedule: Bob reads one SCG per interval, in pool order,
/// starting one interval from now, covering the SCGs he has not analyzed.
pub fn polling_schedule(interval_s: f64, pool: &ScgPool) -> Result<Vec<PollSlot>, ProtocolError> {
    if !(interval_s > 0.0 && interval_s.is_finite()) {
        return Err(ProtocolError::BadPollInterval(interval_s));
    }
    Ok((pool.next_decode..pool.len())
        .enumerate()
        .map(|(k, scg_index)| PollSlot {
            time_s: (k + 1) as f64 * interval_s,
            scg_index,
        })
        .collect())
}

/// Executes the polling schedule over the whole remaining pool.
pub fn poll_channel(
    pool: &mut ScgPool,
    analyzer: &AnalyzerConfig,
    rule: &DecisionRule,
    mode: PhysicsMode,
    interval_s: f64,
) -> Result<Vec<PollEvent>, ProtocolError> {
    let schedule = polling_schedule(interval_s, pool)?;
    let mut events = Vec::with_capacity(schedule.len());
    for slot in schedule {
        let decode = pool.decode_bit(analyzer, rule, mode)?;
        debug_assert_eq!(decode.scg_index, slot.scg_index);
        events.push(PollEvent {
            time_s: slot.time_s,
            scg_index: slot.scg_index,
            bit: decode.bit,
            starts_message: decode.bit,
        });
    }
    Ok(events)
}

/// Exact ensemble-averaged (1, 4) state after Alice encodes `bit` into one
/// fresh EG: the probability-weighted average over her outcomes. This is
/// what Bob holds when he does not know the outcomes, i.e. always.
pub fn ensemble_pair_state(source: BellKind, bit: bool) -> JointState {
    let alloc = &mut PhotonAllocator::new();
    let eg = EntanglementGroup::fresh(0, source, alloc);
    let full = eg.full_fresh_state();
    let bob = [eg.bob_photons.0, eg.bob_photons.1];
    let mut acc = nalgebra::DMatrix::from_element(4, 4, num_complex::Complex64::ZERO);
    if bit {
        for (_, p, post) in full
            .bsm_outcome_distribution((eg.alice_photons.0, eg.alice_photons.1))
            .expect("alice photons are in the state")
        {
            let reduced = post.partial_trace(&bob).expect("bob photons are in the state");
            acc += reduced.matrix() * num_complex::Complex64::new(p, 0.0);
        }
    } else {
        for (_, p2, post2) in full
            .ssm_outcome_distribution(eg.alice_photons.0, 0.0)
            .expect("alice photon 2 is in the state")
        {
            for (_, p3, post3) in post2
                .ssm_outcome_distribution(eg.alice_photons.1, 0.0)
                .expect("alice photon 3 is in the state")
            {
                let reduced = post3.partial_trace(&bob).expect("bob photons are in the state");
                acc += reduced.matrix() * num_complex::Complex64::new(p2 * p3, 0.0);
            }
        }
    }
    JointState::from_matrix(acc, bob.to_vec()).expect("mixture of density matrices")
}

/// Exact per-EG different-port probability Bob sees when Alice encodes
/// `bit`, under the given mode: the outcome-weighted average of the
/// beam-splitter law over Alice's measurement branches.
pub fn exact_diff_probability(
    source: BellKind,
    bit: bool,
    analyzer: &AnalyzerConfig,
    mode: PhysicsMode,
) -> Result<f64, ProtocolError> {
    analyzer.validate()?;
    let v_eff = match (mode, bit) {
        (PhysicsMode::Physical, _) => analyzer.visibility,
        (PhysicsMode::PaperIdealized, true) => analyzer.visibility,
        (PhysicsMode::PaperIdealized, false) => 0.0,
    };
    let alloc = &mut PhotonAllocator::new();
    let eg = EntanglementGroup::fresh(0, source, alloc);
    let full = eg.full_fresh_state();
    let bob = [eg.bob_photons.0, eg.bob_photons.1];
    let mut acc = 0.0;
    if bit {
        for (_, p, post) in full.bsm_outcome_distribution((eg.alice_photons.0, eg.alice_photons.1))? {
            if p == 0.0 {
                continue;
            }
            let reduced = post.partial_trace(&bob)?;
            acc += p * crate::optics::bs_different_port_probability(&reduced, v_eff)?;
        }
    } else {
        for (_, p2, post2) in full.ssm_outcome_distribution(eg.alice_photons.0, 0.0)? {
            for (_, p3, post3) in post2.ssm_outcome_distribution(eg.alice_photons.1, 0.0)? {
                let p = p2 * p3;
                if p == 0.0 {
                    continue;
                }
                let reduced = post3.partial_trace(&bob)?;
                acc += p * crate::optics::bs_different_port_probability(&reduced, v_eff)?;
            }
        }
    }
    Ok(acc)
}
