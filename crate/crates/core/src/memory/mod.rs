//! Spiking short-term memory of `position -> state` associations.
//!
//! A position is presented twice over: as its binary cue word (one neuron per bit, kept for
//! the raster) and as a one-hot place cell. Place cells project to the eight content neurons
//! through plastic synapses. Learning forces place and content together so STDP builds the
//! link; recall forces only the place cell and the linked content neuron answers one tick later.
//!
//! Every operation also wears down the associations it does not touch by a fixed step, and the
//! STDP constants are derived from the forgetting horizon so that the stored weight behaves like
//! an integer "lifetime" counter: a fresh learn is worth `H` operations, a recall adds `H`, and
//! the total is capped at `2H`.

mod state;

pub use state::StateCode;

use crate::grid::Position;
use crate::scalar::Scalar;
use crate::snn::{
    Connection, GroupId, LifParams, Network, NetworkBuilder, PopulationId, SnnError, SpikeEvent, StdpRule,
    SynapseGroup, SynapseKind, Tick,
};

/// STDP pairing window of the association synapses.
pub const STDP_WINDOW: Tick = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryConfig {
    pub grid_width: u32,
    pub grid_height: u32,
    pub num_states: u32,
    /// Operations an untouched plain-learned association survives.
    pub forget_horizon: u32,
    /// Idle ticks required after an operation settles.
    pub guard: Tick,
}

impl MemoryConfig {
    pub fn new(grid_width: u32, grid_height: u32) -> Self {
        MemoryConfig { grid_width, grid_height, num_states: 8, forget_horizon: 50, guard: 30 }
    }

    pub fn with_horizon(mut self, forget_horizon: u32) -> Self {
        self.forget_horizon = forget_horizon;
        self
    }

    pub fn with_guard(mut self, guard: Tick) -> Self {
        self.guard = guard;
        self
    }

    pub fn positions(&self) -> u32 {
        self.grid_width * self.grid_height
    }

    /// Binary digits needed for the largest position id.
    pub fn cue_len(&self) -> usize {
        (u32::BITS - self.positions().leading_zeros()) as usize
    }

    pub fn mem_size(&self) -> usize {
        self.num_states as usize + self.cue_len()
    }

    /// Smallest spacing between recalls of a burst that keeps STDP pairings apart.
    pub fn min_recall_spacing(&self) -> Tick {
        STDP_WINDOW + 2
    }

    fn validate(&self) -> Result<(), MemoryError> {
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(MemoryError::Config("grid must be at least 1x1".into()));
        }
        if self.num_states != 8 {
            return Err(MemoryError::Config("the state table has exactly 8 entries".into()));
        }
        if self.forget_horizon == 0 {
            return Err(MemoryError::Config("forget_horizon must be at least 1".into()));
        }
        if self.guard <= STDP_WINDOW {
            return Err(MemoryError::Config(format!("guard must exceed the STDP window of {STDP_WINDOW} ticks")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryWord {
    pub cue_bits: Vec<bool>,
    pub content: StateCode,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MemoryError {
    #[error("position {0} is not on the grid")]
    InvalidPosition(Position),
    #[error("the unexplored state is never written")]
    InvalidState,
    #[error("memory busy: operation at tick {t0} but idle only from {ready_at}")]
    Busy { t0: Tick, ready_at: Tick },
    #[error("recall burst ticks must increase by at least {0}")]
    BurstSpacing(Tick),
    #[error("invalid memory config: {0}")]
    Config(String),
    #[error(transparent)]
    Snn(#[from] SnnError),
}

/// Third presentation timing of a learn operation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LearnTiming {
    /// Presentations at t0, t0+1, t0+2.
    #[default]
    Nominal,
    /// Presentations at t0, t0+1, t0+3.
    LateThird,
}

/// Standard binary encoding of a position: bit i is the coefficient of 2^i.
pub fn encode_cue(config: &MemoryConfig, position: Position) -> Result<Vec<bool>, MemoryError> {
    if position == 0 || position > config.positions() {
        return Err(MemoryError::InvalidPosition(position));
    }
    Ok((0..config.cue_len()).map(|i| position >> i & 1 == 1).collect())
}

/// Renders `position,state_index,state_name` lines.
pub fn map_dump(entries: &[(Position, StateCode)]) -> String {
    entries.iter().map(|(p, s)| format!("{p},{},{}\n", s.index(), s.name())).collect()
}

/// STDP rule and per-operation decay step for forgetting horizon `h` and threshold gap `theta`.
///
/// With `delta = theta / (2h + 0.5)` an association holding `life` operations has weight
/// `theta + (life - 0.5) * delta`. Two same-tick pairings give `3h * delta` (life `h`), the
/// one-tick pairing of a recall gives `h * delta`, and `w_max` corresponds to life `2h`.
pub fn association_rule<F: Scalar>(h: u32, theta: F) -> (StdpRule<F>, F) {
    let h = F::lit(h as f64);
    let delta = theta / (F::lit(2.0) * h + F::lit(0.5));
    let w_max = F::lit(4.0) * h * delta;
    let rule = StdpRule {
        a_plus: F::lit(1.5) * h * delta,
        // makes the one-tick pairing worth exactly 2/3 of a_plus
        tau_plus: F::one() / F::lit(1.5).ln(),
        // any depression inside the window wipes the weight
        a_minus: F::lit(2.0) * w_max * F::lit(STDP_WINDOW as f64).exp(),
        tau_minus: F::one(),
        w_min: F::zero(),
        w_max,
        window: STDP_WINDOW,
    };
    (rule, delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryLayout {
    pub cue: PopulationId,
    pub place: PopulationId,
    pub content: PopulationId,
    pub association: GroupId,
}

/// Operation sequencing and bookkeeping for a memory installed into a shared network.
#[derive(Clone, Debug)]
pub struct Hippocampus<F> {
    config: MemoryConfig,
    layout: MemoryLayout,
    delta: F,
    theta: F,
    ready_at: Tick,
    operations: u64,
}

impl<F: Scalar> Hippocampus<F> {
    /// Adds the cue, place and content populations and the association synapses.
    pub fn install(builder: &mut NetworkBuilder<F>, config: MemoryConfig) -> Result<Self, MemoryError> {
        config.validate()?;
        let params = LifParams::default();
        let theta = params.theta();
        let cue = builder.input_population("MemCue", config.cue_len(), params);
        let place = builder.input_population("MemPlace", config.positions() as usize, params);
        let content = builder.input_population("MemCont", config.num_states as usize, params);
        let (rule, delta) = association_rule(config.forget_horizon, theta);
        let connections = (0..config.positions() as usize)
            .flat_map(|p| (0..config.num_states as usize).map(move |s| (p, s)))
            .map(|(pre, post)| Connection { pre, post, weight: F::zero(), delay: 1 })
            .collect();
        let association = builder.connect(SynapseGroup {
            pre: place,
            post: content,
            kind: SynapseKind::Current,
            connections,
            rule: Some(rule),
        });
        Ok(Hippocampus {
            config,
            layout: MemoryLayout { cue, place, content, association },
            delta,
            theta,
            ready_at: 0,
            operations: 0,
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn layout(&self) -> MemoryLayout {
        self.layout
    }

    /// First tick at which the next operation may start.
    pub fn ready_at(&self) -> Tick {
        self.ready_at
    }

    pub fn operations(&self) -> u64 {
        self.operations
    }

    /// Content neuron carrying `state` on the tap.
    pub fn content_neuron(&self, state: StateCode) -> (PopulationId, usize) {
        (self.layout.content, state.index())
    }

    fn check(&self, net: &Network<F>, position: Position, t0: Tick) -> Result<(), MemoryError> {
        encode_cue(&self.config, position)?;
        let ready = self.ready_at.max(net.now());
        if t0 < ready {
            return Err(MemoryError::Busy { t0, ready_at: ready });
        }
        Ok(())
    }

    fn present_cue(&self, net: &mut Network<F>, position: Position, tick: Tick) -> Result<(), MemoryError> {
        let mut events = vec![SpikeEvent::new(self.layout.place, position as usize - 1, tick)];
        for (i, bit) in encode_cue(&self.config, position)?.into_iter().enumerate() {
            if bit {
                events.push(SpikeEvent::new(self.layout.cue, i, tick));
            }
        }
        net.inject(&events)?;
        Ok(())
    }

    fn wear(&mut self, net: &mut Network<F>, position: Position) {
        let pre = position as usize - 1;
        net.decay_weights(self.layout.association, self.delta, self.theta, |c| c.pre == pre);
        self.operations += 1;
    }

    fn settle(&mut self, tick: Tick) -> Tick {
        self.ready_at = tick + self.config.guard;
        tick
    }

    pub fn learn(&mut self, net: &mut Network<F>, position: Position, state: StateCode, t0: Tick) -> Result<Tick, MemoryError> {
        self.learn_with(net, position, state, t0, LearnTiming::Nominal)
    }

    /// Presents cue and content three times; the middle presentation lands in the refractory
    /// window. Returns the settle tick.
    pub fn learn_with(
        &mut self,
        net: &mut Network<F>,
        position: Position,
        state: StateCode,
        t0: Tick,
        timing: LearnTiming,
    ) -> Result<Tick, MemoryError> {
        if state == StateCode::Unexplored {
            return Err(MemoryError::InvalidState);
        }
        self.check(net, position, t0)?;
        let last = match timing {
            LearnTiming::Nominal => t0 + 2,
            LearnTiming::LateThird => t0 + 3,
        };
        for t in [t0, t0 + 1, last] {
            self.present_cue(net, position, t)?;
            net.inject(&[SpikeEvent::new(self.layout.content, state.index(), t)])?;
        }
        net.run_until(last + 1);
        self.wear(net, position);
        Ok(self.settle(last + 1))
    }

    /// Presents the cue alone and reads the content neuron one tick later.
    pub fn recall(&mut self, net: &mut Network<F>, position: Position, t0: Tick) -> Result<Option<StateCode>, MemoryError> {
        self.check(net, position, t0)?;
        let answer = self.recall_at(net, position, t0)?;
        self.settle(t0 + 2);
        Ok(answer)
    }

    fn recall_at(&mut self, net: &mut Network<F>, position: Position, t0: Tick) -> Result<Option<StateCode>, MemoryError> {
        self.present_cue(net, position, t0)?;
        net.run_until(t0 + 2);
        let answer = net
            .spikes_between(t0 + 1, t0 + 1)?
            .into_iter()
            .find(|e| e.population == self.layout.content)
            .and_then(|e| StateCode::from_index(e.neuron));
        self.wear(net, position);
        Ok(answer)
    }

    /// Several recalls in one run, each a separate operation. Ticks must be increasing and
    /// spaced by at least [`MemoryConfig::min_recall_spacing`].
    pub fn recall_burst(
        &mut self,
        net: &mut Network<F>,
        requests: &[(Position, Tick)],
    ) -> Result<Vec<Option<StateCode>>, MemoryError> {
        let Some(&(first_pos, first)) = requests.first() else {
            return Ok(Vec::new());
        };
        self.check(net, first_pos, first)?;
        let spacing = self.config.min_recall_spacing();
        for w in requests.windows(2) {
            encode_cue(&self.config, w[1].0)?;
            if w[1].1 < w[0].1 + spacing {
                return Err(MemoryError::BurstSpacing(spacing));
            }
        }
        let mut out = Vec::with_capacity(requests.len());
        for &(position, t) in requests {
            out.push(self.recall_at(net, position, t)?);
        }
        self.settle(requests.last().unwrap().1 + 2);
        Ok(out)
    }

    /// Learn followed by a recall of the same pair at the earliest idle tick.
    pub fn reinforce(&mut self, net: &mut Network<F>, position: Position, state: StateCode, t0: Tick) -> Result<Tick, MemoryError> {
        self.learn(net, position, state, t0)?;
        let t1 = self.ready_at;
        self.recall(net, position, t1)?;
        Ok(t1 + 2)
    }

    /// Associations currently strong enough to be recalled, read from the weights without
    /// running an operation. Row-major order.
    pub fn snapshot(&self, net: &Network<F>) -> Vec<(Position, StateCode)> {
        let params = LifParams::<F>::default();
        let states = self.config.num_states as usize;
        let conns = net.connections(self.layout.association);
        (0..self.config.positions() as usize)
            .filter_map(|p| {
                conns[p * states..(p + 1) * states]
                    .iter()
                    .find(|c| params.v_rest + c.weight >= params.v_thresh)
                    .and_then(|c| StateCode::from_index(c.post))
                    .map(|s| (p as Position + 1, s))
            })
            .collect()
    }

    /// Content spikes in `[t0, t1]` as `(tick, state)`.
    pub fn content_events(&self, net: &Network<F>, t0: Tick, t1: Tick) -> Result<Vec<(Tick, StateCode)>, MemoryError> {
        Ok(net
            .spikes_between(t0, t1)?
            .into_iter()
            .filter(|e| e.population == self.layout.content)
            .filter_map(|e| StateCode::from_index(e.neuron).map(|s| (e.tick, s)))
            .collect())
    }
}

/// A memory that owns its network, for standalone use.
#[derive(Clone, Debug)]
pub struct MemoryCircuit<F> {
    pub net: Network<F>,
    pub hippocampus: Hippocampus<F>,
}

impl<F: Scalar> MemoryCircuit<F> {
    pub fn new(config: MemoryConfig) -> Result<Self, MemoryError> {
        let mut builder = NetworkBuilder::new();
        let hippocampus = Hippocampus::install(&mut builder, config)?;
        Ok(MemoryCircuit { net: builder.build()?, hippocampus })
    }

    /// Earliest tick at which an operation may start.
    pub fn next_free(&self) -> Tick {
        self.hippocampus.ready_at().max(self.net.now())
    }

    pub fn learn(&mut self, position: Position, state: StateCode, t0: Tick) -> Result<Tick, MemoryError> {
        self.hippocampus.learn(&mut self.net, position, state, t0)
    }

    pub fn learn_with(&mut self, position: Position, state: StateCode, t0: Tick, timing: LearnTiming) -> Result<Tick, MemoryError> {
        self.hippocampus.learn_with(&mut self.net, position, state, t0, timing)
    }

    pub fn recall(&mut self, position: Position, t0: Tick) -> Result<Option<StateCode>, MemoryError> {
        self.hippocampus.recall(&mut self.net, position, t0)
    }

    pub fn reinforce(&mut self, position: Position, state: StateCode, t0: Tick) -> Result<Tick, MemoryError> {
        self.hippocampus.reinforce(&mut self.net, position, state, t0)
    }

    pub fn snapshot(&self) -> Vec<(Position, StateCode)> {
        self.hippocampus.snapshot(&self.net)
    }
}
