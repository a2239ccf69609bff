//! Quantized push-pull average consensus on directed graphs.
//!
//! Agents on a strongly connected, possibly unbalanced digraph keep a state
//! `x` and a surplus `s`. Every round each agent broadcasts a finite-bit
//! quantized copy of both, plus a few coordination fields, to its
//! out-neighbors. Row-stochastic pull weights mix the states, column-stochastic
//! push weights route the surplus, and the total mass `1ᵀ(x + s)` is preserved
//! exactly, so agreement implies agreement on the true average.
//!
//! The quantizer grid is shared by the whole network and adapts every `D̄`
//! rounds (an upper bound on the diameter): a max-consensus over a three-way
//! flag picks zoom-out, zoom-in, or hold, and a max/min-consensus over the
//! quantized states recenters the grid midpoint.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel sweeps live in the `ppacdc` companion crate.
//!
//! Module map:
//!
//! - [`quantizer`]: the saturating uniform quantizer and its bit-level codec.
//! - [`graph`]: digraphs, push/pull weights, diameter, seeded generators.
//! - [`protocol`]: the per-agent state machine and the round message.
//! - [`sim`]: the synchronous round engine, convergence metrics and sweeps.
//! - [`analysis`]: the dense augmented system, eigenvalues, reference oracles.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod analysis;
mod bits;
mod error;
pub mod graph;
pub mod protocol;
pub mod quantizer;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{Digraph, NodeId};
pub use protocol::{AgentState, ProtocolParams, RoundMessage, Zeta, ZoomInRule};
pub use quantizer::{QuantLevel, QuantizerParams};
pub use sim::{RunResult, SimConfig, Simulation, TraceRecord};
