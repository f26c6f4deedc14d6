//! Discrete-time Markov model of a multichannel MAC sharing licensed
//! channels with primary users.
//!
//! A state `(x, y, z)` counts channels carrying secondary traffic (`x`),
//! channels on which a primary user was detected (`y`) and secondary
//! connections (`z`). Without buffering `z = x`.

mod kernel;
mod solve;
mod throughput;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{config, Result};

pub use kernel::{connection_setup_prob, termination_prob, TransitionKernel};
pub use solve::{power_iteration, stationary_distribution, Stationary};
pub use throughput::{
    analyze, completion_prob, overhead_ratio, throughput_macro, throughput_micro, traffic_for,
    useful_time, ThroughputReport,
};

/// How secondary users rendezvous to set up connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControlChannel {
    /// A dedicated control channel that primary users never occupy.
    DccPuFreeControl,
    /// A dedicated control channel that is also licensed to a primary user.
    DccSharedControl,
    /// The control rendezvous hops across the data channels.
    Hcc,
}

impl ControlChannel {
    pub fn is_dedicated(self) -> bool {
        !matches!(self, Self::Hcc)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::DccPuFreeControl => "dcc",
            Self::DccSharedControl => "dcc-shared",
            Self::Hcc => "hcc",
        }
    }
}

impl core::str::FromStr for ControlChannel {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dcc" | "dcc-pu-free" | "dccpufreecontrol" => Ok(Self::DccPuFreeControl),
            "dcc-shared" | "dccsharedcontrol" => Ok(Self::DccSharedControl),
            "hcc" => Ok(Self::Hcc),
            other => Err(config!("unknown control channel design '{other}'")),
        }
    }
}

/// Data channel error handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorModel {
    /// Error-free channel.
    E0,
    /// A corrupted slot is discarded and the fragment resent.
    E1,
    /// A corrupted slot terminates the connection.
    E2,
}

impl core::str::FromStr for ErrorModel {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e0" | "none" => Ok(Self::E0),
            "e1" => Ok(Self::E1),
            "e2" => Ok(Self::E2),
            other => Err(config!("unknown error model '{other}'")),
        }
    }
}

/// MAC protocol options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MacVariant {
    pub control: ControlChannel,
    /// Preempted connections wait on their channel instead of being dropped.
    pub buffering: bool,
    /// Preempted connections move to idle channels.
    pub switching: bool,
    pub error_model: ErrorModel,
}

impl MacVariant {
    pub fn new(control: ControlChannel, buffering: bool, switching: bool) -> Self {
        Self {
            control,
            buffering,
            switching,
            error_model: ErrorModel::E0,
        }
    }

    pub fn with_error_model(self, error_model: ErrorModel) -> Self {
        Self {
            error_model,
            ..self
        }
    }

    /// The four buffering/switching combinations over a dedicated PU-free
    /// control channel, in `B0S0, B0S1, B1S0, B1S1` order.
    pub fn dcc_family() -> [MacVariant; 4] {
        let c = ControlChannel::DccPuFreeControl;
        [
            Self::new(c, false, false),
            Self::new(c, false, true),
            Self::new(c, true, false),
            Self::new(c, true, true),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.switching && !self.control.is_dedicated() {
            return Err(config!(
                "channel switching requires a dedicated control channel"
            ));
        }
        if self.error_model != ErrorModel::E0 && self.control != ControlChannel::Hcc {
            return Err(config!("error models E1/E2 are defined for HCC only"));
        }
        Ok(())
    }

    /// Short label such as `B1S0`.
    pub fn label(&self) -> String {
        alloc::format!("B{}S{}", u8::from(self.buffering), u8::from(self.switching))
    }
}

impl fmt::Display for MacVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.control.name(), self.label())?;
        if self.error_model != ErrorModel::E0 {
            write!(f, " {:?}", self.error_model)?;
        }
        Ok(())
    }
}

/// Per-slot traffic probabilities driving the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficParams {
    /// Control channel access probability.
    pub p: f64,
    /// Per-slot probability that a transmitting connection completes.
    pub q: f64,
    /// Mean packet size, bits.
    pub d: f64,
    pub q_p: f64,
    /// Probability that the network declares a channel busy.
    pub p_c: f64,
    /// Data/control error probability used by E1 and E2.
    pub p_e: f64,
}

impl TrafficParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(config!("p = {} outside [0, 1]", self.p));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(config!("q = {} outside (0, 1]", self.q));
        }
        if !(0.0..=1.0).contains(&self.p_c) {
            return Err(config!("p_c = {} outside [0, 1]", self.p_c));
        }
        if !(0.0..1.0).contains(&self.p_e) {
            return Err(config!("p_e = {} outside [0, 1)", self.p_e));
        }
        Ok(())
    }

    /// Completion probability after accounting for error-induced terminations.
    pub fn effective_q(&self, error_model: ErrorModel) -> f64 {
        match error_model {
            ErrorModel::E2 => self.q + (1.0 - self.q) * self.p_e,
            _ => self.q,
        }
    }
}

/// Collective busy probability `p_c = q_p p_d + (1 - q_p) p_f`.
pub fn busy_prob(q_p: f64, p_d: f64, p_f: f64) -> f64 {
    q_p * p_d + (1.0 - q_p) * p_f
}

/// Chain dimensions for a network of `channels` and `users`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainDims {
    /// All channels `M`.
    pub channels: usize,
    pub users: usize,
    /// Data channels `M_D`.
    pub data_channels: usize,
    /// Maximum simultaneous connections `s_m`.
    pub max_connections: usize,
}

impl ChainDims {
    pub fn new(channels: usize, users: usize, control: ControlChannel) -> Self {
        let data_channels = match control {
            ControlChannel::Hcc => channels,
            _ => channels.saturating_sub(1),
        };
        Self {
            channels,
            users,
            data_channels,
            max_connections: (users / 2).min(data_channels),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainState {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl fmt::Display for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// States satisfying `0 <= x <= z <= x + y <= M_D` and `z <= s_m`, in
/// lexicographic `(x, y, z)` order. Without buffering only `z = x` appears.
pub fn enumerate_states(
    data_channels: usize,
    max_connections: usize,
    buffering: bool,
) -> Vec<ChainState> {
    let mut out = Vec::new();
    for x in 0..=max_connections.min(data_channels) {
        for y in 0..=data_channels - x {
            if buffering {
                for z in x..=(x + y).min(max_connections) {
                    out.push(ChainState { x, y, z });
                }
            } else {
                out.push(ChainState { x, y, z: x });
            }
        }
    }
    out
}

/// State space of a variant. With switching and buffering a connection can
/// only wait when every channel is taken, so states with `z != x` and
/// `x + y < M_D` are unreachable and left out.
pub fn variant_states(dims: &ChainDims, variant: &MacVariant) -> Vec<ChainState> {
    let mut states = enumerate_states(dims.data_channels, dims.max_connections, variant.buffering);
    if variant.buffering && variant.switching {
        states.retain(|s| s.z == s.x || s.x + s.y == dims.data_channels);
    }
    states
}

/// A built and solved chain.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub dims: ChainDims,
    pub variant: MacVariant,
    pub traffic: TrafficParams,
    pub states: Vec<ChainState>,
    /// Row-major transition matrix, `transition[i * n + j] = P(states[i] -> states[j])`.
    pub transition: Vec<f64>,
    pub stationary: Vec<f64>,
    /// The linear system was singular and the mass was placed on the empty state.
    pub degenerate: bool,
    /// `‖πP - π‖∞` of the returned distribution.
    pub residual: f64,
}

impl ChainModel {
    /// Builds the transition matrix, checks every row sum and solves for `π`.
    pub fn build(dims: ChainDims, variant: MacVariant, traffic: TrafficParams) -> Result<Self> {
        variant.validate()?;
        traffic.validate()?;
        let kernel = TransitionKernel::new(dims, variant, traffic);
        let states = variant_states(&dims, &variant);
        let transition = kernel.matrix(&states)?;
        let Stationary {
            pi,
            degenerate,
            residual,
        } = stationary_distribution(&transition, states.len())?;
        Ok(Self {
            dims,
            variant,
            traffic,
            states,
            transition,
            stationary: pi,
            degenerate,
            residual,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.states.len() + to]
    }

    /// Mean number of channels carrying secondary traffic.
    pub fn mean_utilized(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.stationary)
            .map(|(s, p)| s.x as f64 * p)
            .sum()
    }

    /// Stationary probability that at least one connection is waiting.
    pub fn buffered_fraction(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.stationary)
            .filter(|(s, _)| s.z > s.x)
            .map(|(_, p)| p)
            .sum()
    }
}
