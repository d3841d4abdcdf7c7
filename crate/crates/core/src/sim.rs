//! Round-synchronous simulation of agents, cloud and eavesdropper.
//!
//! Each step `k` runs two rounds on an in-process bus:
//!
//! 1. measure: every agent draws `v_i(k)` and sends `ȳ_i(k) = C_i x_i(k) + v_i(k)`
//!    to the cloud;
//! 2. control: the cloud stacks `ȳ(k)`, corrects its prediction to `x̂(k)`,
//!    computes `u*(k) = L x̂(k)` and sends block `u*_i(k)` to agent `i` only.
//!
//! Agents then step their own dynamics. Every message is appended to the wire
//! log, which is exactly what a passive eavesdropper observes.
//!
//! Random streams (see [`crate::rng`]): agent `i` draws process noise from
//! stream `(i, ProcessNoise)`, privacy noise from `(i, PrivacyNoise)` and, if
//! it has an initial covariance, its secret initial state from
//! `(i, InitialState)`, all keyed by the master seed.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix, Vector};
use crate::lqg::{self, EstimatorState, SteadyStateFilter};
use crate::network::{self, AgentBlock, AgentModel, NetworkModel, Synthesis};
use crate::privacy::{self, NoiseScale};
use crate::rng::{GaussianStream, StreamKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Cloud,
    Agent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Measurement,
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub kind: MessageKind,
    pub sender: Endpoint,
    pub receiver: Endpoint,
    pub k: u64,
    pub payload: Vector,
}

/// Synchronous in-process transport. Only agent→cloud measurements and
/// cloud→agent controls are routable.
#[derive(Debug, Default)]
pub struct MessageBus {
    log: Vec<WireMessage>,
    cloud_inbox: Vec<WireMessage>,
    agent_inboxes: Vec<Vec<WireMessage>>,
}

impl MessageBus {
    pub fn new(agents: usize) -> Self {
        Self {
            log: Vec::new(),
            cloud_inbox: Vec::new(),
            agent_inboxes: (0..agents).map(|_| Vec::new()).collect(),
        }
    }

    pub fn send(&mut self, message: WireMessage) -> Result<()> {
        match (message.kind, message.sender, message.receiver) {
            (MessageKind::Measurement, Endpoint::Agent(i), Endpoint::Cloud) if i < self.agent_inboxes.len() => {
                self.cloud_inbox.push(message.clone());
            }
            (MessageKind::Control, Endpoint::Cloud, Endpoint::Agent(i)) if i < self.agent_inboxes.len() => {
                self.agent_inboxes[i].push(message.clone());
            }
            _ => {
                return Err(Error::InvalidParameter(alloc::format!(
                    "unroutable {:?} message from {:?} to {:?}",
                    message.kind,
                    message.sender,
                    message.receiver
                )))
            }
        }
        self.log.push(message);
        Ok(())
    }

    pub fn drain(&mut self, endpoint: Endpoint) -> Vec<WireMessage> {
        match endpoint {
            Endpoint::Cloud => core::mem::take(&mut self.cloud_inbox),
            Endpoint::Agent(i) => self.agent_inboxes.get_mut(i).map(core::mem::take).unwrap_or_default(),
        }
    }

    pub fn into_log(self) -> Vec<WireMessage> {
        self.log
    }
}

/// Network-level quantities at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: u64,
    /// True state, known only to the simulator.
    pub x: Vector,
    pub x_hat: Vector,
    pub u: Vector,
    pub y_bar: Vector,
    pub stage_cost: f64,
    /// Mean stage cost over steps `0..=k`.
    pub average_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub blocks: Vec<AgentBlock>,
    /// Public `x̂(0)` prior mean the cloud starts from.
    pub initial_estimate: Vector,
    pub steps: Vec<StepRecord>,
    pub wire: Vec<WireMessage>,
}

impl SimulationTrace {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn final_average_cost(&self) -> Option<f64> {
        self.steps.last().map(|s| s.average_cost)
    }

    pub fn max_state_norm(&self) -> f64 {
        self.steps.iter().map(|s| s.x.norm()).fold(0.0, f64::max)
    }

    pub fn estimates(&self) -> Vec<Vector> {
        self.steps.iter().map(|s| s.x_hat.clone()).collect()
    }
}

/// The wire log: the only thing an eavesdropper sees.
pub fn eavesdropper_view(trace: &SimulationTrace) -> &[WireMessage] {
    &trace.wire
}

struct AgentRuntime<'a> {
    id: usize,
    model: &'a AgentModel,
    x: Vector,
    noise_factor: Matrix,
    scale: NoiseScale,
    process: GaussianStream,
    privacy: GaussianStream,
}

impl<'a> AgentRuntime<'a> {
    fn new(id: usize, model: &'a AgentModel, scale: NoiseScale, seed: u64) -> Result<Self> {
        let owner = id as u64;
        let mut x = model.x0_true.clone();
        if let Some(cov) = &model.x0_covariance {
            let mut stream = GaussianStream::for_owner(seed, owner, StreamKind::InitialState);
            x += linalg::psd_factor(cov)? * stream.standard_normal_vector(model.state_dim());
        }
        Ok(Self {
            id,
            model,
            x,
            noise_factor: linalg::psd_factor(&model.w)?,
            scale,
            process: GaussianStream::for_owner(seed, owner, StreamKind::ProcessNoise),
            privacy: GaussianStream::for_owner(seed, owner, StreamKind::PrivacyNoise),
        })
    }

    fn measure(&mut self, k: u64) -> WireMessage {
        let y = &self.model.c * &self.x;
        WireMessage {
            kind: MessageKind::Measurement,
            sender: Endpoint::Agent(self.id),
            receiver: Endpoint::Cloud,
            k,
            payload: privacy::privatize_output(&y, self.scale, &mut self.privacy),
        }
    }

    fn apply(&mut self, u: &Vector) -> Result<()> {
        self.x = network::step_with_factor(&self.model.a, &self.model.b, &self.noise_factor, &self.x, u, &mut self.process)?;
        Ok(())
    }
}

fn stack_payloads(
    messages: &[WireMessage],
    kind: MessageKind,
    k: u64,
    blocks: &[AgentBlock],
    dim: usize,
    block_len: fn(&AgentBlock) -> (usize, usize),
) -> Result<Vector> {
    let mut out = Vector::zeros(dim);
    let mut seen = alloc::vec![false; blocks.len()];
    for msg in messages.iter().filter(|m| m.kind == kind && m.k == k) {
        let agent = match (kind, msg.sender, msg.receiver) {
            (MessageKind::Measurement, Endpoint::Agent(i), _) | (MessageKind::Control, _, Endpoint::Agent(i)) => i,
            _ => continue,
        };
        let block = blocks
            .get(agent)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown agent {agent}")))?;
        let (offset, len) = block_len(block);
        if msg.payload.len() != len {
            return Err(Error::len("message payload", len, msg.payload.len()));
        }
        out.rows_mut(offset, len).copy_from(&msg.payload);
        seen[agent] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidParameter(alloc::format!(
            "no {kind:?} message for agent {missing} at step {k}"
        )));
    }
    Ok(out)
}

fn state_block(b: &AgentBlock) -> (usize, usize) {
    (b.state_offset, b.state_dim)
}

fn input_block(b: &AgentBlock) -> (usize, usize) {
    (b.input_offset, b.input_dim)
}

/// Runs the protocol for `horizon` steps. The result is a pure function of
/// the arguments.
pub fn run_simulation(
    model: &NetworkModel,
    synthesis: &Synthesis,
    agents: &[AgentModel],
    horizon: usize,
    seed: u64,
) -> Result<SimulationTrace> {
    if agents.len() != model.agent_count() {
        return Err(Error::len("agent count", model.agent_count(), agents.len()));
    }
    let n = model.state_dim();
    let blocks = &model.blocks;

    let mut initial_estimate = Vector::zeros(n);
    let mut runtimes = Vec::with_capacity(agents.len());
    for (id, (agent, block)) in agents.iter().zip(blocks).enumerate() {
        if agent.state_dim() != block.state_dim || agent.input_dim() != block.input_dim {
            return Err(Error::len("agent state dimension", block.state_dim, agent.state_dim()));
        }
        initial_estimate.rows_mut(block.state_offset, block.state_dim).copy_from(&agent.x0_mean);
        runtimes.push(AgentRuntime::new(id, agent, model.noise[id], seed)?);
    }

    let gain = &synthesis.control.gain;
    let mut cloud = SteadyStateFilter::new(&model.a, &model.b, &model.c, &synthesis.filter.kalman_gain, &initial_estimate)?;
    let mut bus = MessageBus::new(agents.len());
    let mut steps = Vec::with_capacity(horizon);
    let mut cost_sum = 0.0;

    for k in 0..horizon as u64 {
        let mut x = Vector::zeros(n);
        for (rt, block) in runtimes.iter_mut().zip(blocks) {
            x.rows_mut(block.state_offset, block.state_dim).copy_from(&rt.x);
            bus.send(rt.measure(k))?;
        }

        let inbox = bus.drain(Endpoint::Cloud);
        let y_bar = stack_payloads(&inbox, MessageKind::Measurement, k, blocks, n, state_block)?;
        let estimate = cloud.update(&y_bar)?;
        let u = lqg::control(&estimate, gain)?;
        for (i, block) in blocks.iter().enumerate() {
            bus.send(WireMessage {
                kind: MessageKind::Control,
                sender: Endpoint::Cloud,
                receiver: Endpoint::Agent(i),
                k,
                payload: block.input(&u).into_owned(),
            })?;
        }
        cloud.advance(&estimate, &u)?;

        for rt in runtimes.iter_mut() {
            let delivered = bus.drain(Endpoint::Agent(rt.id));
            let [msg] = delivered.as_slice() else {
                return Err(Error::InvalidParameter(alloc::format!(
                    "agent {} expected one control message, got {}",
                    rt.id,
                    delivered.len()
                )));
            };
            rt.apply(&msg.payload)?;
        }

        let stage_cost = lqg::incremental_cost(&x, &u, &model.q, &model.r)?;
        cost_sum += stage_cost;
        steps.push(StepRecord {
            k,
            x,
            x_hat: estimate.x_hat,
            u,
            y_bar,
            stage_cost,
            average_cost: cost_sum / (k + 1) as f64,
        });
    }

    Ok(SimulationTrace {
        blocks: blocks.clone(),
        initial_estimate,
        steps,
        wire: bus.into_log(),
    })
}

/// Re-runs the steady-state filter on a wire log using only public data
/// (`A`, `B`, `C`, the Kalman gain, the prior mean) and the logged controls.
pub fn replay_estimates(
    wire: &[WireMessage],
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    kalman_gain: &Matrix,
    blocks: &[AgentBlock],
    initial_estimate: &Vector,
) -> Result<Vec<Vector>> {
    let n = a.nrows();
    let m = b.ncols();
    let mut filter = SteadyStateFilter::new(a, b, c, kalman_gain, initial_estimate)?;
    let horizon = wire.iter().map(|msg| msg.k + 1).max().unwrap_or(0);
    let mut estimates = Vec::with_capacity(horizon as usize);
    let mut cursor = 0;
    for k in 0..horizon {
        let end = cursor + wire[cursor..].iter().take_while(|msg| msg.k == k).count();
        let round = &wire[cursor..end];
        cursor = end;
        let y_bar = stack_payloads(round, MessageKind::Measurement, k, blocks, n, state_block)?;
        let estimate: EstimatorState = filter.update(&y_bar)?;
        let u = stack_payloads(round, MessageKind::Control, k, blocks, m, input_block)?;
        filter.advance(&estimate, &u)?;
        estimates.push(estimate.x_hat);
    }
    Ok(estimates)
}
