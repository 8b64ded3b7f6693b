//! Exact and Monte Carlo simulation of a swapped-Bell-state signaling
//! protocol over polarization-entangled photon pairs.
//!
//! The library models two entangled-pair sources, a Bell-state analyzer,
//! and a receiver-side beam-splitter diagnostic, then runs the full
//! encode/transmit/decode pipeline under two physics models:
//!
//! * `PhysicsMode::Physical` applies standard quantum mechanics: the
//!   receiver's reduced state is independent of the sender's choice of
//!   measurement, so the decoder sees identical statistics for both bit
//!   values.
//! * `PhysicsMode::PaperIdealized` grants the conjectured signaling
//!   mechanism: swapped pairs interfere at the receiver's beam splitter
//!   with full two-photon visibility, unswapped ones with none.
//!
//! All randomness flows from one master seed through keyed substreams
//! (see [`rng`]), so every run is reproducible bit for bit.

pub mod commands;
pub mod config;
pub mod multihop;
pub mod optics;
pub mod protocol;
pub mod quantum;
pub mod report;
pub mod rng;
pub mod stats;

pub use protocol::PhysicsMode;
pub use quantum::{BellKind, JointState, PhotonId};
