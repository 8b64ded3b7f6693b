//! Decode-and-forward chains: each intermediate node decodes the incoming
//! SCG, carries the bit across the node classically, and re-encodes it
//! into the next segment's SCG. The interesting output is the latency
//! ledger: per-node decode delays are all the chain pays, against a
//! classical light-time that grows with distance. In physical mode the
//! bookkeeping is moot, of course: each hop already delivers noise.

use crate::optics::AnalyzerConfig;
use crate::protocol::{BitDecode, DecisionRule, PhysicsMode, ProtocolError, ScgPool};
use crate::quantum::BellKind;
use crate::rng::{domains, SeedContext};
use thiserror::Error;

/// One 30-day month of light travel, in light-seconds.
pub const LIGHT_MONTH_SECONDS: f64 = 30.0 * 86_400.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("a chain needs at least 2 nodes, got {0}")]
    TooFewNodes(u32),
    #[error("hop delay must be non-negative and finite, got {0}")]
    BadDelay(f64),
    #[error("hop distance must be non-negative and finite, got {0}")]
    BadDistance(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Chain geometry and physics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    /// End nodes plus repeaters; hops = nodes − 1.
    pub nodes: u32,
    /// Decode-and-re-encode delay paid at each hop, seconds.
    pub hop_delay_s: f64,
    /// Classical signal distance per hop, light-seconds.
    pub hop_distance_lightseconds: f64,
    pub mode: PhysicsMode,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        if self.nodes < 2 {
            return Err(ChainError::TooFewNodes(self.nodes));
        }
        if !(self.hop_delay_s >= 0.0 && self.hop_delay_s.is_finite()) {
            return Err(ChainError::BadDelay(self.hop_delay_s));
        }
        if !(self.hop_distance_lightseconds >= 0.0 && self.hop_distance_lightseconds.is_finite()) {
            return Err(ChainError::BadDistance(self.hop_distance_lightseconds));
        }
        Ok(())
    }

    pub fn hops(&self) -> u32 {
        self.nodes - 1
    }
}

/// One transport segment with its own SCG supply. Adjacent segments share
/// a node but never a pool.
#[derive(Debug)]
pub struct HopSegment {
    pub upstream: u32,
    pub downstream: u32,
    pub r_c: u32,
    pub rule: DecisionRule,
    pool: ScgPool,
}

impl HopSegment {
    pub fn remaining_bits(&self) -> u64 {
        self.pool
            .remaining_to_encode()
            .min(self.pool.remaining_to_decode())
    }
}

/// A provisioned multi-hop channel.
#[derive(Debug)]
pub struct Chain {
    config: ChainConfig,
    analyzer: AnalyzerConfig,
    segments: Vec<HopSegment>,
}

/// One bit's journey down the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayOutcome {
    /// The bit as seen at each node; index 0 is the sender's input.
    pub per_node_bits: Vec<bool>,
    /// Total decode delay accumulated over all hops, seconds.
    pub latency_s: f64,
    /// Per-hop analyzer statistics.
    pub decodes: Vec<BitDecode>,
}

impl RelayOutcome {
    pub fn delivered(&self) -> bool {
        *self.per_node_bits.last().expect("chain has at least two nodes")
    }
}

/// The latency claim, as arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub hops: u32,
    /// Σ per-hop decode delays.
    pub psba_latency_s: f64,
    /// Σ per-hop distances at light speed.
    pub light_time_s: f64,
}

impl LatencyReport {
    /// light-time / latency; `None` for a zero-latency chain.
    pub fn speedup(&self) -> Option<f64> {
        (self.psba_latency_s > 0.0).then(|| self.light_time_s / self.psba_latency_s)
    }
}

impl Chain {
    /// Provisions every segment with `capacity_bits` SCGs of `r_c` EGs.
    /// Segment pools draw from disjoint seed domains of `seeds`' master.
    pub fn provision(
        config: ChainConfig,
        capacity_bits: u64,
        r_c: u32,
        rule: DecisionRule,
        analyzer: AnalyzerConfig,
        source: BellKind,
        seeds: SeedContext,
    ) -> Result<Self, ChainError> {
        config.validate()?;
        let segments = (0..config.hops())
            .map(|hop| {
                let pool = ScgPool::provision(
                    capacity_bits,
                    r_c,
                    source,
                    seeds.domain(domains::MULTIHOP_BASE + u64::from(hop)),
                )?;
                Ok(HopSegment {
                    upstream: hop,
                    downstream: hop + 1,
                    r_c,
                    rule,
                    pool,
                })
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        Ok(Self {
            config,
            analyzer,
            segments,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn segments(&self) -> &[HopSegment] {
        &self.segments
    }

    /// Bits this chain can still relay end to end.
    pub fn remaining_bits(&self) -> u64 {
        self.segments
            .iter()
            .map(HopSegment::remaining_bits)
            .min()
            .unwrap_or(0)
    }

    /// Sends one bit down the chain: encode into segment k, decode at node
    /// k+1, re-encode the decoded value into segment k+1, and so on.
    /// Consumes exactly one SCG per segment.
    pub fn relay_bit(&mut self, bit: bool) -> Result<RelayOutcome, ChainError> {
        let mut per_node_bits = vec![bit];
        let mut decodes = Vec::with_capacity(self.segments.len());
        let mut current = bit;
        for segment in &mut self.segments {
            segment.pool.encode_bit(current)?;
            let decode = segment
                .pool
                .decode_bit(&self.analyzer, &segment.rule, self.config.mode)?;
            current = decode.bit;
            per_node_bits.push(current);
            decodes.push(decode);
        }
        Ok(RelayOutcome {
            per_node_bits,
            latency_s: f64::from(self.config.hops()) * self.config.hop_delay_s,
            decodes,
        })
    }

    pub fn latency_report(&self) -> LatencyReport {
        let hops = self.config.hops();
        LatencyReport {
            hops,
            psba_latency_s: f64::from(hops) * self.config.hop_delay_s,
            light_time_s: f64::from(hops) * self.config.hop_distance_lightseconds,
        }
    }
}
