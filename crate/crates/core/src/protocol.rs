//! The per-agent state machine.
//!
//! Each round an agent quantizes its state on the shared grid `(b, Δ, σ)` and
//! its surplus on `(b, Δ, 0)`, broadcasts both together with its coordination
//! fields, then applies
//!
//! ```text
//! x' = x + γ·s + (r_jj − 1)·x̌_j + Σ_{i ∈ N_in(j)} r_ji·x̌_i
//! s' = s + x − x' + (c_jj − 1)·š_j + Σ_{i ∈ N_in(j)} c_ji·š_i
//! ```
//!
//! The diagonal terms use the agent's own transmitted values; without them
//! the column sums of the push weights would not cancel and the total mass
//! `Σ(x + s)` would drift.
//!
//! Every `D̄` rounds the network closes a coordination window: the zoom flag
//! `ζ` and the extrema `M`, `μ` have been max/min-propagated for `D̄` hops, so
//! every agent holds the same global values and can update its grid in
//! lockstep (see [`window_boundary_update`]).

use alloc::format;
use alloc::vec::Vec;

use crate::bits::{BitReader, BitWriter};
use crate::graph::{Digraph, NodeId};
use crate::quantizer::{read_level, write_level, QuantLevel, QuantizerParams};
use crate::{Error, Result};

/// Width of the out-degree field on the wire.
pub const DEGREE_BITS: u32 = 16;
const ZETA_BITS: u32 = 2;

/// Smallest step, in units of `ε·|σ|`, that a zoom-in may produce. Below
/// this the grid points `σ + lΔ` are no longer distinct in `f64`.
pub const MIN_STEP_ULPS: f64 = 64.0;

/// How the zoom-in region of the flag computation is placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ZoomInRule {
    /// `σ − x̄/(1+α) < x < σ + x̄/(1+α)`: a band around the midpoint.
    #[default]
    Centered,
    /// `(σ − x̄)/(1+α) < x < (σ + x̄)/(1+α)`: both endpoints scaled toward zero,
    /// which only contains the midpoint when `σ` is near zero.
    Literal,
}

/// The three-way zoom flag. Ordered so that max-consensus picks zoom-out
/// over hold over zoom-in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Zeta {
    ZoomIn,
    Hold,
    ZoomOut,
}

impl Zeta {
    pub fn as_i8(self) -> i8 {
        match self {
            Zeta::ZoomIn => -1,
            Zeta::Hold => 0,
            Zeta::ZoomOut => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Zeta::ZoomIn),
            0 => Some(Zeta::Hold),
            1 => Some(Zeta::ZoomOut),
            _ => None,
        }
    }

    fn wire_code(self) -> u64 {
        match self {
            Zeta::Hold => 0b00,
            Zeta::ZoomOut => 0b01,
            Zeta::ZoomIn => 0b10,
        }
    }

    fn from_wire(code: u64) -> Result<Self> {
        match code {
            0b00 => Ok(Zeta::Hold),
            0b01 => Ok(Zeta::ZoomOut),
            0b10 => Ok(Zeta::ZoomIn),
            other => Err(Error::InvalidFlag(other as u8)),
        }
    }
}

/// Network-wide constants every agent is configured with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    /// Surplus gain γ.
    pub gamma: f64,
    /// Zooming factor α; steps scale by `1 + α`.
    pub alpha: f64,
    /// Upper bound on the diameter; also the coordination window length.
    pub d_bar: usize,
    pub bits: u32,
    pub delta0: f64,
    pub sigma0: f64,
    pub zoom_in_rule: ZoomInRule,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            gamma: 0.2,
            alpha: 1.2,
            d_bar: 4,
            bits: 12,
            delta0: 1.0,
            sigma0: 0.0,
            zoom_in_rule: ZoomInRule::Centered,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.gamma) {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !positive(self.alpha) {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.d_bar == 0 {
            return Err(Error::InvalidParams("d_bar must be >= 1".into()));
        }
        if !positive(self.delta0) {
            return Err(Error::InvalidParams(format!("delta0 must be > 0, got {}", self.delta0)));
        }
        self.initial_grid().map(drop)
    }

    pub fn initial_grid(&self) -> Result<QuantizerParams> {
        QuantizerParams::new(self.bits, self.delta0, self.sigma0)
    }

    /// Whether round `k` opens a coordination window.
    pub fn is_window_start(&self, k: usize) -> bool {
        k % self.d_bar == 0
    }

    /// Bits on the wire per message.
    pub fn message_bits(&self) -> usize {
        RoundMessage::wire_bits(self.bits)
    }
}

/// Classifies `x` against the grid: out of range, well inside, or in between.
/// Boundary points of either region count as [`Zeta::Hold`].
pub fn compute_zeta(x: f64, grid: &QuantizerParams, alpha: f64, rule: ZoomInRule) -> Zeta {
    let sigma = grid.midpoint();
    let limit = grid.range_limit();
    if x > sigma + limit || x < sigma - limit {
        return Zeta::ZoomOut;
    }
    let (lo, hi) = match rule {
        ZoomInRule::Centered => (sigma - limit / (1.0 + alpha), sigma + limit / (1.0 + alpha)),
        ZoomInRule::Literal => ((sigma - limit) / (1.0 + alpha), (sigma + limit) / (1.0 + alpha)),
    };
    if lo < x && x < hi {
        Zeta::ZoomIn
    } else {
        Zeta::Hold
    }
}

/// One max-consensus step over the agent's own value and its in-neighbors'.
pub fn max_consensus_step<T: PartialOrd + Copy>(own: T, incoming: impl IntoIterator<Item = T>) -> T {
    incoming
        .into_iter()
        .fold(own, |acc, v| if v > acc { v } else { acc })
}

pub fn min_consensus_step<T: PartialOrd + Copy>(own: T, incoming: impl IntoIterator<Item = T>) -> T {
    incoming
        .into_iter()
        .fold(own, |acc, v| if v < acc { v } else { acc })
}

/// Step-size update for a closed window.
pub fn zoom_step(step: f64, zeta: Zeta, alpha: f64) -> f64 {
    match zeta {
        Zeta::ZoomOut => (1.0 + alpha) * step,
        Zeta::ZoomIn => step / (1.0 + alpha),
        Zeta::Hold => step,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub id: NodeId,
    pub x: f64,
    pub s: f64,
    pub zeta: Zeta,
    /// Running maximum of the window's quantized states (`M`).
    pub max_seen: f64,
    /// Running minimum (`μ`).
    pub min_seen: f64,
    pub grid: QuantizerParams,
    pub out_degree: usize,
}

impl AgentState {
    /// Fresh agent with zero surplus. Call [`reset_window`](Self::reset_window)
    /// before the first round to seed the coordination fields.
    pub fn new(id: NodeId, x0: f64, grid: QuantizerParams, out_degree: usize) -> Self {
        Self {
            id,
            x: x0,
            s: 0.0,
            zeta: Zeta::Hold,
            max_seen: x0,
            min_seen: x0,
            grid,
            out_degree,
        }
    }

    /// Grid used for the surplus: same bits and step, midpoint 0.
    pub fn surplus_grid(&self) -> QuantizerParams {
        // Re-validation cannot fail: only the midpoint changes, to a finite value.
        self.grid
            .regrid(self.grid.step(), 0.0)
            .expect("surplus grid derived from a valid grid")
    }

    pub fn quantized_state(&self) -> Result<f64> {
        self.grid.quantize(self.x)
    }

    pub fn quantized_surplus(&self) -> Result<f64> {
        self.surplus_grid().quantize(self.s)
    }

    /// Opens a window on the current grid: `M = μ = x̌` and `ζ` from the raw state.
    pub fn reset_window(&mut self, alpha: f64, rule: ZoomInRule) -> Result<()> {
        let q = self.quantized_state()?;
        self.max_seen = q;
        self.min_seen = q;
        self.zeta = compute_zeta(self.x, &self.grid, alpha, rule);
        Ok(())
    }

    /// Same as [`reset_window`](Self::reset_window) but without quantization,
    /// for exact-arithmetic runs.
    pub fn reset_window_exact(&mut self, alpha: f64, rule: ZoomInRule) {
        self.max_seen = self.x;
        self.min_seen = self.x;
        self.zeta = compute_zeta(self.x, &self.grid, alpha, rule);
    }
}

/// Closes a coordination window and opens the next one.
///
/// Expects `zeta`, `max_seen` and `min_seen` to hold the network-wide values,
/// which is the case after `D̄ ≥ D` rounds of max/min-consensus. In order:
/// the midpoint moves to `(M + μ)/2`, the step zooms according to `ζ`, and the
/// window fields are reset against the new grid. A zoom-in that would take
/// the step under [`resolution_floor`] holds it instead.
pub fn window_boundary_update(agent: &AgentState, params: &ProtocolParams) -> Result<AgentState> {
    let midpoint = 0.5 * (agent.max_seen + agent.min_seen);
    let mut step = zoom_step(agent.grid.step(), agent.zeta, params.alpha);
    if agent.zeta == Zeta::ZoomIn && step < resolution_floor(midpoint) {
        step = agent.grid.step();
    }
    let mut next = agent.clone();
    next.grid = agent.grid.regrid(step, midpoint)?;
    next.reset_window(params.alpha, params.zoom_in_rule)?;
    Ok(next)
}

pub fn resolution_floor(midpoint: f64) -> f64 {
    MIN_STEP_ULPS * f64::EPSILON * midpoint.abs()
}

/// The per-edge payload. State and extrema are levels on `(Δ, σ)`, the
/// surplus a level on `(Δ, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundMessage {
    pub x_level: QuantLevel,
    pub s_level: QuantLevel,
    pub zeta: Zeta,
    pub max_level: QuantLevel,
    pub min_level: QuantLevel,
    pub out_degree: u16,
}

impl RoundMessage {
    /// `4b + 18`: four levels, a 2-bit flag, a 16-bit degree.
    pub const fn wire_bits(bits: u32) -> usize {
        4 * bits as usize + ZETA_BITS as usize + DEGREE_BITS as usize
    }

    /// Layout, MSB-first: `x | s | M | μ | ζ | out_degree`, zero-padded to a byte.
    pub fn encode(&self, bits: u32) -> Result<Vec<u8>> {
        let mut w = BitWriter::with_capacity_bits(Self::wire_bits(bits));
        for level in [self.x_level, self.s_level, self.max_level, self.min_level] {
            write_level(&mut w, level, bits)?;
        }
        w.push(self.zeta.wire_code(), ZETA_BITS);
        w.push(u64::from(self.out_degree), DEGREE_BITS);
        Ok(w.finish())
    }

    pub fn decode(bytes: &[u8], bits: u32) -> Result<Self> {
        let mut r = BitReader::new(bytes);
        let x_level = read_level(&mut r, bits)?;
        let s_level = read_level(&mut r, bits)?;
        let max_level = read_level(&mut r, bits)?;
        let min_level = read_level(&mut r, bits)?;
        let zeta = Zeta::from_wire(r.read(ZETA_BITS)?)?;
        let out_degree = r.read(DEGREE_BITS)? as u16;
        Ok(Self {
            x_level,
            s_level,
            zeta,
            max_level,
            min_level,
            out_degree,
        })
    }

    /// Maps the levels back to values on the receiver's grid.
    pub fn values(&self, grid: &QuantizerParams) -> Result<Received> {
        let surplus_grid = grid.regrid(grid.step(), 0.0)?;
        Ok(Received {
            x: grid.from_level(self.x_level)?,
            s: surplus_grid.from_level(self.s_level)?,
            zeta: self.zeta,
            max_seen: grid.from_level(self.max_level)?,
            min_seen: grid.from_level(self.min_level)?,
            out_degree: usize::from(self.out_degree),
        })
    }
}

/// What a receiver learns from one message, as real values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Received {
    pub x: f64,
    pub s: f64,
    pub zeta: Zeta,
    pub max_seen: f64,
    pub min_seen: f64,
    pub out_degree: usize,
}

impl Received {
    /// Unquantized payload, for exact-arithmetic runs.
    pub fn exact(agent: &AgentState) -> Self {
        Self {
            x: agent.x,
            s: agent.s,
            zeta: agent.zeta,
            max_seen: agent.max_seen,
            min_seen: agent.min_seen,
            out_degree: agent.out_degree,
        }
    }
}

pub fn build_message(agent: &AgentState) -> Result<RoundMessage> {
    let out_degree =
        u16::try_from(agent.out_degree).map_err(|_| Error::DegreeOverflow(agent.out_degree))?;
    Ok(RoundMessage {
        x_level: agent.grid.level_of(agent.x)?,
        s_level: agent.surplus_grid().level_of(agent.s)?,
        zeta: agent.zeta,
        max_level: agent.grid.to_level(agent.max_seen)?,
        min_level: agent.grid.to_level(agent.min_seen)?,
        out_degree,
    })
}

/// Consensus update from wire messages, decoded on the agent's own grid.
/// Returns the new `(x, s)`.
pub fn consensus_update(
    agent: &AgentState,
    own: &RoundMessage,
    incoming: &[(RoundMessage, NodeId)],
    g: &Digraph,
    gamma: f64,
) -> Result<(f64, f64)> {
    let own = own.values(&agent.grid)?;
    let decoded = incoming
        .iter()
        .map(|(m, sender)| Ok((m.values(&agent.grid)?, *sender)))
        .collect::<Result<Vec<_>>>()?;
    consensus_update_values(agent, &own, &decoded, g, gamma)
}

/// Consensus update from already-decoded values. `own` is what the agent
/// itself transmitted this round.
pub fn consensus_update_values(
    agent: &AgentState,
    own: &Received,
    incoming: &[(Received, NodeId)],
    g: &Digraph,
    gamma: f64,
) -> Result<(f64, f64)> {
    let ordered = in_neighbor_order(agent.id, incoming, g)?;
    let r = 1.0 / (1.0 + ordered.len() as f64);
    let c_own = 1.0 / (1.0 + agent.out_degree as f64);

    let mut pulled = 0.0;
    let mut pushed = 0.0;
    for msg in &ordered {
        pulled += r * msg.x;
        pushed += msg.s / (1.0 + msg.out_degree as f64);
    }
    let x_new = agent.x + gamma * agent.s + (r - 1.0) * own.x + pulled;
    let s_new = agent.s + agent.x - x_new + (c_own - 1.0) * own.s + pushed;
    Ok((x_new, s_new))
}

/// One max/min-consensus step on `(ζ, M, μ)`.
pub fn coordination_update(
    agent: &AgentState,
    incoming: &[(Received, NodeId)],
) -> (Zeta, f64, f64) {
    (
        max_consensus_step(agent.zeta, incoming.iter().map(|(m, _)| m.zeta)),
        max_consensus_step(agent.max_seen, incoming.iter().map(|(m, _)| m.max_seen)),
        min_consensus_step(agent.min_seen, incoming.iter().map(|(m, _)| m.min_seen)),
    )
}

/// Full round for one agent: consensus update plus coordination step.
pub fn advance(
    agent: &AgentState,
    own: &Received,
    incoming: &[(Received, NodeId)],
    g: &Digraph,
    gamma: f64,
) -> Result<AgentState> {
    let (x, s) = consensus_update_values(agent, own, incoming, g, gamma)?;
    let (zeta, max_seen, min_seen) = coordination_update(agent, incoming);
    Ok(AgentState {
        x,
        s,
        zeta,
        max_seen,
        min_seen,
        ..agent.clone()
    })
}

/// Checks that `incoming` holds exactly one message per in-neighbor and
/// returns them in in-neighbor order.
fn in_neighbor_order<'a>(
    agent: NodeId,
    incoming: &'a [(Received, NodeId)],
    g: &Digraph,
) -> Result<Vec<&'a Received>> {
    let senders = g.in_neighbors(agent)?;
    for (idx, (_, sender)) in incoming.iter().enumerate() {
        if senders.binary_search(sender).is_err() {
            return Err(Error::UnexpectedSender {
                agent,
                sender: *sender,
            });
        }
        if incoming[..idx].iter().any(|(_, s)| s == sender) {
            return Err(Error::DuplicateMessage {
                agent,
                sender: *sender,
            });
        }
    }
    senders
        .iter()
        .map(|&sender| {
            incoming
                .iter()
                .find(|(_, s)| *s == sender)
                .map(|(m, _)| m)
                .ok_or(Error::MissingMessage { agent, sender })
        })
        .collect()
}
