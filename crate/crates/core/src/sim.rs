//! Synchronous round engine.
//!
//! Round `k` runs in two phases. [`Simulation::prepare`] opens the round: at
//! `k = 0` every agent seeds its window fields on the initial grid, and at
//! every later multiple of `D̄` every agent closes the window and regrids. It
//! then builds and encodes one message per agent. [`Simulation::step`]
//! delivers each message along every out-edge and updates all agents from the
//! previous round's state only. After every step the engine checks that all
//! grids are bitwise identical and that `Σ(x + s)` still equals `Σx₀`.

use alloc::format;
use alloc::vec::Vec;

use crate::graph::{Digraph, NodeId};
use crate::protocol::{self, AgentState, ProtocolParams, Received, RoundMessage, Zeta};
use crate::rng::SimRng;
use crate::{Error, Result};

pub mod sweep;

/// Relative mass tolerance: drift must stay below `MASS_TOLERANCE · n · max(1, max|x₀|)`.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Traces of networks larger than this are downsampled to window starts.
pub const FULL_TRACE_MAX_AGENTS: usize = 64;

/// Ratio between the average-consensus and the agreement tolerance.
pub const AVERAGE_TOLERANCE_FACTOR: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    Ring { n: usize },
    Complete { n: usize },
    Random { n: usize, extra_edge_prob: f64, seed: u64 },
    Explicit(Digraph),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Digraph> {
        match self {
            GraphSpec::Ring { n } => Digraph::ring(*n),
            GraphSpec::Complete { n } => Digraph::complete(*n),
            GraphSpec::Random {
                n,
                extra_edge_prob,
                seed,
            } => Digraph::random_strongly_connected(*n, *extra_edge_prob, *seed),
            GraphSpec::Explicit(g) => Ok(g.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialStates {
    Values(Vec<f64>),
    /// Independent draws from `[lo, hi)` using the run seed.
    Uniform { lo: f64, hi: f64 },
}

impl InitialStates {
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            InitialStates::Values(v) => {
                if v.len() != n {
                    return Err(Error::InvalidConfig(format!(
                        "{} initial values for {n} agents",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
            InitialStates::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::InvalidConfig(format!("bad interval [{lo}, {hi}]")));
                }
                let mut rng = SimRng::new(seed);
                Ok((0..n).map(|_| rng.uniform(*lo, *hi)).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub graph: GraphSpec,
    pub x0: InitialStates,
    pub protocol: ProtocolParams,
    pub max_iters: usize,
    pub conv_tolerance: f64,
    pub seed: u64,
    /// Bypass quantization: agents exchange raw values and the grid stays fixed.
    pub exact_mode: bool,
    pub record_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            graph: GraphSpec::Ring { n: 5 },
            x0: InitialStates::Uniform { lo: 0.0, hi: 1000.0 },
            protocol: ProtocolParams::default(),
            max_iters: 20_000,
            conv_tolerance: 1e-8,
            seed: 0,
            exact_mode: false,
            record_trace: true,
        }
    }
}

impl SimConfig {
    /// Builds the graph and initial states and checks every precondition.
    pub fn resolve(&self) -> Result<(Digraph, Vec<f64>)> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.conv_tolerance.is_nan() || self.conv_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "conv_tolerance must be > 0, got {}",
                self.conv_tolerance
            )));
        }
        let graph = self.graph.build()?;
        let x0 = self.x0.sample(graph.node_count(), self.seed)?;
        Ok((graph, x0))
    }
}

/// Snapshot of one round, taken after the round is prepared.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// Values the agents transmit this round (`x̌`, `š`).
    pub x_sent: Vec<f64>,
    pub s_sent: Vec<f64>,
    pub zeta: Vec<Zeta>,
    pub delta: f64,
    pub sigma: f64,
    pub consensus_error: f64,
    /// Bits sent during rounds `0..k`.
    pub bits_cumulative: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Pairwise agreement within the tolerance was reached.
    pub converged: bool,
    pub convergence_iter: Option<usize>,
    /// At the final round every `|x_j − x_ave|` is within
    /// `AVERAGE_TOLERANCE_FACTOR · conv_tolerance`.
    pub average_reached: bool,
    pub final_error: f64,
    pub final_spread: f64,
    pub max_deviation: f64,
    pub x_ave: f64,
    pub rounds: usize,
    pub bits_total: u64,
    pub trace: Vec<TraceRecord>,
}

enum Outgoing {
    Wire(Vec<u8>),
    Exact(Received),
}

struct Prepared {
    outbox: Vec<Outgoing>,
    x_sent: Vec<f64>,
    s_sent: Vec<f64>,
}

pub struct Simulation {
    graph: Digraph,
    params: ProtocolParams,
    exact: bool,
    agents: Vec<AgentState>,
    x0: Vec<f64>,
    mass0: f64,
    mass_bound: f64,
    round: usize,
    bits_sent: u64,
    prepared: Option<Prepared>,
}

impl Simulation {
    pub fn new(graph: Digraph, x0: Vec<f64>, params: ProtocolParams, exact_mode: bool) -> Result<Self> {
        params.validate()?;
        if x0.len() != graph.node_count() {
            return Err(Error::InvalidConfig(format!(
                "{} initial values for {} agents",
                x0.len(),
                graph.node_count()
            )));
        }
        if let Some(bad) = x0.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite initial value {bad}")));
        }
        if !graph.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        let diameter = graph.diameter()?;
        if params.d_bar < diameter {
            return Err(Error::InvalidConfig(format!(
                "d_bar = {} is below the graph diameter {diameter}",
                params.d_bar
            )));
        }
        let grid = params.initial_grid()?;
        let agents = x0
            .iter()
            .enumerate()
            .map(|(j, &x)| Ok(AgentState::new(j, x, grid, graph.out_degree(j)?)))
            .collect::<Result<Vec<_>>>()?;
        let n = x0.len() as f64;
        let scale = x0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            mass0: x0.iter().sum(),
            mass_bound: MASS_TOLERANCE * n * scale,
            graph,
            params,
            exact: exact_mode,
            agents,
            x0,
            round: 0,
            bits_sent: 0,
            prepared: None,
        })
    }

    pub fn from_config(config: &SimConfig) -> Result<Self> {
        let (graph, x0) = config.resolve()?;
        Self::new(graph, x0, config.protocol, config.exact_mode)
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn initial_states(&self) -> &[f64] {
        &self.x0
    }

    pub fn bits_sent(&self) -> u64 {
        self.bits_sent
    }

    pub fn states(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.x).collect()
    }

    pub fn surpluses(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.s).collect()
    }

    /// `|Σ(x + s) − Σx₀|`.
    pub fn mass_drift(&self) -> f64 {
        let mass: f64 = self.agents.iter().map(|a| a.x + a.s).sum();
        (mass - self.mass0).abs()
    }

    /// Values transmitted in the prepared round, if it has been prepared.
    pub fn transmitted(&self) -> Option<(&[f64], &[f64])> {
        self.prepared
            .as_ref()
            .map(|p| (p.x_sent.as_slice(), p.s_sent.as_slice()))
    }

    /// Runs the window bookkeeping for the current round and builds the
    /// outgoing messages. Idempotent until the next [`step`](Self::step).
    pub fn prepare(&mut self) -> Result<()> {
        if self.prepared.is_some() {
            return Ok(());
        }
        let k = self.round;
        let (alpha, rule) = (self.params.alpha, self.params.zoom_in_rule);
        if k == 0 {
            for agent in &mut self.agents {
                if self.exact {
                    agent.reset_window_exact(alpha, rule);
                } else {
                    agent.reset_window(alpha, rule)?;
                }
            }
        } else if self.params.is_window_start(k) {
            for agent in &mut self.agents {
                if self.exact {
                    agent.reset_window_exact(alpha, rule);
                } else {
                    *agent = protocol::window_boundary_update(agent, &self.params).map_err(
                        |e| match e {
                            Error::InvalidStep(step) => Error::DegenerateGrid {
                                round: k,
                                agent: agent.id,
                                step,
                            },
                            other => other,
                        },
                    )?;
                }
            }
        }
        self.check_grid_sync()?;

        let mut prepared = Prepared {
            outbox: Vec::with_capacity(self.agents.len()),
            x_sent: Vec::with_capacity(self.agents.len()),
            s_sent: Vec::with_capacity(self.agents.len()),
        };
        for agent in &self.agents {
            if self.exact {
                prepared.x_sent.push(agent.x);
                prepared.s_sent.push(agent.s);
                prepared.outbox.push(Outgoing::Exact(Received::exact(agent)));
            } else {
                let msg = protocol::build_message(agent)?;
                let values = msg.values(&agent.grid)?;
                prepared.x_sent.push(values.x);
                prepared.s_sent.push(values.s);
                prepared
                    .outbox
                    .push(Outgoing::Wire(msg.encode(self.params.bits)?));
            }
        }
        self.prepared = Some(prepared);
        Ok(())
    }

    /// Delivers the prepared round and advances every agent.
    pub fn step(&mut self) -> Result<()> {
        let order: Vec<NodeId> = (0..self.agents.len()).collect();
        self.step_in_order(&order)
    }

    /// Like [`step`](Self::step) but visits agents in the given order. The
    /// result must not depend on it.
    pub fn step_in_order(&mut self, order: &[NodeId]) -> Result<()> {
        self.prepare()?;
        let prepared = self.prepared.take().expect("round prepared");
        let mut next: Vec<Option<AgentState>> = alloc::vec![None; self.agents.len()];
        for &j in order {
            let agent = self.agents.get(j).ok_or(Error::UnknownNode {
                node: j,
                n: self.agents.len(),
            })?;
            let own = self.receive(&prepared.outbox[j], agent)?;
            let incoming = self
                .graph
                .in_neighbors(j)?
                .iter()
                .map(|&i| Ok((self.receive(&prepared.outbox[i], agent)?, i)))
                .collect::<Result<Vec<_>>>()?;
            next[j] = Some(protocol::advance(
                agent,
                &own,
                &incoming,
                &self.graph,
                self.params.gamma,
            )?);
        }
        self.agents = next
            .into_iter()
            .enumerate()
            .map(|(j, a)| {
                a.ok_or_else(|| Error::InvalidConfig(format!("agent {j} missing from step order")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.bits_sent += (self.graph.edge_count() * self.params.message_bits()) as u64;
        self.round += 1;

        let drift = self.mass_drift();
        if drift.is_nan() || drift > self.mass_bound {
            return Err(Error::MassViolation {
                round: self.round,
                drift,
                bound: self.mass_bound,
            });
        }
        Ok(())
    }

    fn receive(&self, out: &Outgoing, receiver: &AgentState) -> Result<Received> {
        match out {
            Outgoing::Exact(values) => Ok(*values),
            Outgoing::Wire(bytes) => {
                RoundMessage::decode(bytes, self.params.bits)?.values(&receiver.grid)
            }
        }
    }

    fn check_grid_sync(&self) -> Result<()> {
        let reference = &self.agents[0].grid;
        for agent in &self.agents {
            let same = agent.grid.step().to_bits() == reference.step().to_bits()
                && agent.grid.midpoint().to_bits() == reference.midpoint().to_bits();
            if !same {
                return Err(Error::GridDesync {
                    round: self.round,
                    agent: agent.id,
                });
            }
        }
        Ok(())
    }

    fn record(&self) -> TraceRecord {
        let (x_sent, s_sent) = self
            .transmitted()
            .map(|(x, s)| (x.to_vec(), s.to_vec()))
            .unwrap_or_default();
        let x = self.states();
        TraceRecord {
            k: self.round,
            consensus_error: consensus_error(&x, &self.x0),
            x,
            s: self.surpluses(),
            x_sent,
            s_sent,
            zeta: self.agents.iter().map(|a| a.zeta).collect(),
            delta: self.agents[0].grid.step(),
            sigma: self.agents[0].grid.midpoint(),
            bits_cumulative: self.bits_sent,
        }
    }
}

/// Runs until pairwise agreement within `conv_tolerance` or `max_iters` rounds.
pub fn run(config: &SimConfig) -> Result<RunResult> {
    let mut sim = Simulation::from_config(config)?;
    let n = sim.agents().len();
    let d_bar = config.protocol.d_bar;
    let full_trace = n <= FULL_TRACE_MAX_AGENTS;
    let mut trace = Vec::new();
    let mut convergence_iter = None;
    loop {
        sim.prepare()?;
        let k = sim.round();
        let converged = detect_convergence(&sim.states(), config.conv_tolerance);
        let last = converged || k == config.max_iters;
        if config.record_trace && (full_trace || k % d_bar == 0 || last) {
            trace.push(sim.record());
        }
        if converged {
            convergence_iter = Some(k);
        }
        if last {
            break;
        }
        sim.step()?;
    }

    let x = sim.states();
    let x_ave = mean(sim.initial_states());
    let max_deviation = x.iter().fold(0.0f64, |m, v| m.max((v - x_ave).abs()));
    Ok(RunResult {
        converged: convergence_iter.is_some(),
        convergence_iter,
        average_reached: max_deviation <= AVERAGE_TOLERANCE_FACTOR * config.conv_tolerance,
        final_error: consensus_error(&x, sim.initial_states()),
        final_spread: pairwise_spread(&x),
        max_deviation,
        x_ave,
        rounds: sim.round(),
        bits_total: sim.bits_sent(),
        trace,
    })
}

/// `max_i x_i − min_i x_i`.
pub fn pairwise_spread(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if x.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// True iff every pair of agents is within `tol`.
pub fn detect_convergence(x: &[f64], tol: f64) -> bool {
    pairwise_spread(x) <= tol
}

/// `‖x − x_ave·1‖₂` where `x_ave` is the mean of `x0`.
pub fn consensus_error(x: &[f64], x0: &[f64]) -> f64 {
    let ave = mean(x0);
    libm::sqrt(x.iter().map(|v| (v - ave) * (v - ave)).sum())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
