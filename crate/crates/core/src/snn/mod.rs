//! Discrete-time LIF network with delayed synapses and pair-based STDP.
//!
//! One call to [`Network::step`] processes one 1 ms tick in a fixed order:
//! deliver arrivals, integrate, threshold and emit, apply STDP, advance the clock.

mod export;
mod network;

pub use export::{parse_spike_csv, write_spike_csv};
pub use network::{Network, NetworkBuilder};

use crate::scalar::Scalar;

/// Simulation time in whole milliseconds.
pub type Tick = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PopulationId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub tick: Tick,
    pub population: PopulationId,
    pub neuron: usize,
}

impl SpikeEvent {
    pub fn new(population: PopulationId, neuron: usize, tick: Tick) -> Self {
        SpikeEvent { tick, population, neuron }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifParams<F> {
    pub v_rest: F,
    pub v_reset: F,
    pub v_thresh: F,
    pub tau_m: F,
    pub t_refrac: u32,
}

impl<F: Scalar> Default for LifParams<F> {
    fn default() -> Self {
        LifParams {
            v_rest: F::lit(-65.0),
            v_reset: F::lit(-65.0),
            v_thresh: F::lit(-50.0),
            tau_m: F::lit(5.0),
            t_refrac: 1,
        }
    }
}

impl<F: Scalar> LifParams<F> {
    /// Distance from rest to threshold.
    pub fn theta(&self) -> F {
        self.v_thresh - self.v_rest
    }

    pub fn with_tau(mut self, tau_m: F) -> Self {
        self.tau_m = tau_m;
        self
    }

    pub fn with_refrac(mut self, t_refrac: u32) -> Self {
        self.t_refrac = t_refrac;
        self
    }

    // written negated so that NaN parameters are rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub(crate) fn validate(&self) -> Result<(), String> {
        if !(self.v_thresh > self.v_rest) {
            return Err("v_thresh must exceed v_rest".into());
        }
        if self.v_reset > self.v_rest {
            return Err("v_reset must not exceed v_rest".into());
        }
        if !(self.tau_m > F::zero()) {
            return Err("tau_m must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Population<F> {
    pub id: PopulationId,
    pub name: String,
    pub size: usize,
    pub params: LifParams<F>,
    /// Whether [`Network::inject`] may target this population.
    pub input: bool,
}

/// Effect of a synaptic arrival on the postsynaptic neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynapseKind {
    /// Adds the weight to the membrane potential.
    Current,
    /// Holds the membrane at `v_reset` and blocks firing for `ticks` ticks, starting at arrival.
    Clamp { ticks: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connection<F> {
    pub pre: usize,
    pub post: usize,
    pub weight: F,
    pub delay: u32,
}

/// Additive nearest-neighbour STDP with a hard pairing window.
///
/// A post spike at `t` adds `a_plus * exp(-(t - t_pre) / tau_plus)` using the latest pre spike,
/// which may be in the same tick. A pre spike at `t` subtracts `a_minus * exp(-(t - t_post) / tau_minus)`
/// unless the post neuron also fired at `t`. Pairs further apart than `window` ticks are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdpRule<F> {
    pub a_plus: F,
    pub a_minus: F,
    pub tau_plus: F,
    pub tau_minus: F,
    pub w_min: F,
    pub w_max: F,
    pub window: Tick,
}

impl<F: Scalar> StdpRule<F> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub(crate) fn validate(&self) -> Result<(), String> {
        if !(self.w_min <= self.w_max) {
            return Err("w_min must not exceed w_max".into());
        }
        if self.a_plus < F::zero() || self.a_minus < F::zero() {
            return Err("STDP amplitudes must be non-negative".into());
        }
        if !(self.tau_plus > F::zero() && self.tau_minus > F::zero()) {
            return Err("STDP time constants must be positive".into());
        }
        Ok(())
    }

    pub fn clip(&self, w: F) -> F {
        w.max(self.w_min).min(self.w_max)
    }
}

#[derive(Clone, Debug)]
pub struct SynapseGroup<F> {
    pub pre: PopulationId,
    pub post: PopulationId,
    pub kind: SynapseKind,
    pub connections: Vec<Connection<F>>,
    /// Present iff the group is plastic.
    pub rule: Option<StdpRule<F>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SnnError {
    #[error("unknown population {0:?}")]
    UnknownPopulation(PopulationId),
    #[error("duplicate population id {0:?} or name")]
    DuplicatePopulation(PopulationId),
    #[error("population {0:?} has size 0")]
    EmptyPopulation(PopulationId),
    #[error("neuron {index} out of range for population {population:?} of size {size}")]
    NeuronOutOfRange { population: PopulationId, index: usize, size: usize },
    #[error("synaptic delay must be at least 1 tick")]
    ZeroDelay,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("plastic weight {0} outside [w_min, w_max]")]
    WeightOutOfBounds(String),
    #[error("event at tick {tick} is before the current tick {now}")]
    EventInPast { tick: Tick, now: Tick },
    #[error("population {0} does not accept injected events")]
    NotInput(String),
    #[error("inverted range [{0}, {1}]")]
    InvertedRange(Tick, Tick),
    #[error("range end {end} is beyond the current tick {now}")]
    RangeInFuture { end: Tick, now: Tick },
}
