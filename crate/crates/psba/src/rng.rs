//! Deterministic random-stream derivation.
//!
//! One master seed drives an entire run. Every sampling event draws from its
//! own substream keyed by `(master, domain, party, index, slot)`, so results
//! do not depend on the order in which events are simulated and independent
//! pools never share randomness.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Domain tags keeping every experiment's randomness disjoint under one
/// master seed. Multihop segments use `MULTIHOP_BASE + segment index`.
pub mod domains {
    pub const CHANNEL: u64 = 0;
    pub const SORTED: u64 = 9;
    pub const MATRIX: u64 = 10;
    pub const HOM: u64 = 11;
    pub const NOSIGNAL: u64 = 12;
    pub const CALIBRATE: u64 = 13;
    pub const MULTIHOP_BASE: u64 = 100;
}

/// Who is drawing randomness. `Source` and `Harness` cover pair production
/// and experiment-level choices (e.g. random payload bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamParty {
    Source,
    Alice,
    Bob,
    Victor,
    Harness,
}

impl StreamParty {
    fn tag(self) -> u64 {
        match self {
            StreamParty::Source => 1,
            StreamParty::Alice => 2,
            StreamParty::Bob => 3,
            StreamParty::Victor => 4,
            StreamParty::Harness => 5,
        }
    }
}

/// Master seed plus a domain separator (one domain per pool / experiment
/// component). Cheap to copy; handed down to every sampling operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedContext {
    master: u64,
    domain: u64,
}

impl SeedContext {
    pub fn new(master: u64) -> Self {
        Self { master, domain: 0 }
    }

    /// Derived context for an independent component (e.g. one chain segment).
    pub fn domain(&self, domain: u64) -> Self {
        Self {
            master: self.master,
            domain,
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Substream for one sampling event. `index` is the entanglement-group
    /// or trial index; `slot` separates multiple draws within one event.
    pub fn stream(&self, party: StreamParty, index: u64, slot: u32) -> ChaCha12Rng {
        let mut acc = splitmix64(self.master ^ 0x9e37_79b9_7f4a_7c15);
        for v in [self.domain, party.tag(), index, u64::from(slot)] {
            acc = splitmix64(acc ^ v);
        }
        let mut key = [0u8; 32];
        let mut state = acc;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
