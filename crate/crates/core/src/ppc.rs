//! Coincidence-detection decision circuit.
//!
//! A Searching spike starts a delay chain. Delay neuron `j` fires in slot `j` and primes
//! Match neuron `j`; any MatchIn spike arriving in the same tick completes the coincidence and
//! Match `j` drives output `j`. The last Delay neuron fires Inh, which clamps every Match
//! neuron so the circuit is quiet until the next decision.

use crate::scalar::Scalar;
use crate::snn::{
    Connection, LifParams, Network, NetworkBuilder, PopulationId, SnnError, SpikeEvent, SynapseGroup, SynapseKind, Tick,
};

/// Ticks one Inh spike holds the Match neurons at reset.
pub const CLAMP_TICKS: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PpcConfig {
    pub num_commands: usize,
    pub num_match_inputs: usize,
    pub init_delay: u32,
    pub step_delay: u32,
}

impl Default for PpcConfig {
    fn default() -> Self {
        PpcConfig { num_commands: 4, num_match_inputs: 3, init_delay: 9, step_delay: 7 }
    }
}

impl PpcConfig {
    pub fn new(num_commands: usize, num_match_inputs: usize, init_delay: u32, step_delay: u32) -> Self {
        PpcConfig { num_commands, num_match_inputs, init_delay, step_delay }
    }

    fn validate(&self) -> Result<(), PpcError> {
        if self.num_commands < 1 || self.num_match_inputs < 1 {
            return Err(PpcError::Config("need at least one command and one match input".into()));
        }
        if self.init_delay < 1 || self.step_delay < 1 {
            return Err(PpcError::Config("delays must be at least 1 tick".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PpcError {
    #[error("invalid PPC config: {0}")]
    Config(String),
    #[error("match-in at tick {tick} does not follow the searching tick {searching}")]
    ScheduleBeforeSearch { tick: Tick, searching: Tick },
    #[error("match input {0} does not exist")]
    UnknownInput(usize),
    #[error(transparent)]
    Snn(#[from] SnnError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PpcLayout {
    pub searching: PopulationId,
    pub match_in: PopulationId,
    pub init_delay: PopulationId,
    pub delay: PopulationId,
    pub matcher: PopulationId,
    pub inh: PopulationId,
    pub out: PopulationId,
}

/// A decision circuit installed into a network, plus its timing arithmetic.
#[derive(Clone, Copy, Debug)]
pub struct Ppc {
    config: PpcConfig,
    layout: PpcLayout,
}

impl Ppc {
    pub fn install<F: Scalar>(builder: &mut NetworkBuilder<F>, config: PpcConfig) -> Result<Self, PpcError> {
        config.validate()?;
        let n = config.num_commands;
        let lif = LifParams::<F>::default();
        let theta = lif.theta();
        let drive = F::lit(1.2) * theta;
        // all match inputs together stay below threshold, a Delay spike plus any one crosses it
        let w_in = F::lit(0.9) * theta / F::lit(config.num_match_inputs as f64);
        let w_delay = theta - F::lit(0.5) * w_in;
        // a very fast membrane keeps almost nothing from the previous tick
        let match_lif = lif.with_tau(F::lit(0.25));

        let searching = builder.input_population("INsearchingPPC", 1, lif);
        let match_in = builder.input_population("INmatchPPC", config.num_match_inputs, lif);
        let init_delay = builder.population("InitDelay", 1, lif);
        let delay = builder.population("Delay", n, lif);
        let matcher = builder.population("Match", n, match_lif);
        let inh = builder.population("Inh", 1, lif);
        let out = builder.population("OUT", n, lif);

        builder.connect_pairs(searching, init_delay, [(0, 0)], drive, 1);
        builder.connect_pairs(init_delay, delay, [(0, 0)], drive, config.init_delay);
        builder.connect_pairs(delay, delay, (0..n - 1).map(|j| (j, j + 1)), drive, config.step_delay);
        builder.connect_pairs(delay, matcher, (0..n).map(|j| (j, j)), w_delay, 1);
        builder.connect_pairs(
            match_in,
            matcher,
            (0..config.num_match_inputs).flat_map(|i| (0..n).map(move |j| (i, j))),
            w_in,
            1,
        );
        builder.connect_pairs(matcher, out, (0..n).map(|j| (j, j)), drive, 1);
        builder.connect_pairs(delay, inh, [(n - 1, 0)], drive, 1);
        builder.connect(SynapseGroup {
            pre: inh,
            post: matcher,
            kind: SynapseKind::Clamp { ticks: CLAMP_TICKS },
            connections: (0..n).map(|j| Connection { pre: 0, post: j, weight: F::zero(), delay: 1 }).collect(),
            rule: None,
        });

        Ok(Ppc { config, layout: PpcLayout { searching, match_in, init_delay, delay, matcher, inh, out } })
    }

    pub fn config(&self) -> &PpcConfig {
        &self.config
    }

    pub fn layout(&self) -> PpcLayout {
        self.layout
    }

    /// InitDelay, Delay, Match and Inh neurons.
    pub fn internal_neurons(&self) -> usize {
        2 + 2 * self.config.num_commands
    }

    pub fn delay_tick(&self, searching: Tick, slot: usize) -> Tick {
        searching + 1 + self.config.init_delay as Tick + slot as Tick * self.config.step_delay as Tick
    }

    pub fn inh_tick(&self, searching: Tick) -> Tick {
        self.delay_tick(searching, self.config.num_commands - 1) + 1
    }

    /// Last tick of the Inh clamp; the decision window is `[searching, window_end]`.
    pub fn window_end(&self, searching: Tick) -> Tick {
        self.inh_tick(searching) + CLAMP_TICKS as Tick
    }

    pub fn start(&self, net: &mut Network<impl Scalar>, searching: Tick) -> Result<(), PpcError> {
        net.inject(&[SpikeEvent::new(self.layout.searching, 0, searching)])?;
        Ok(())
    }

    pub fn match_in(&self, net: &mut Network<impl Scalar>, input: usize, tick: Tick) -> Result<(), PpcError> {
        if input >= self.config.num_match_inputs {
            return Err(PpcError::UnknownInput(input));
        }
        net.inject(&[SpikeEvent::new(self.layout.match_in, input, tick)])?;
        Ok(())
    }

    /// Output spikes in `[t0, t1]` as `(tick, command)`.
    pub fn outputs(&self, net: &Network<impl Scalar>, t0: Tick, t1: Tick) -> Result<Vec<(Tick, usize)>, PpcError> {
        Ok(net
            .spikes_between(t0, t1)?
            .into_iter()
            .filter(|e| e.population == self.layout.out)
            .map(|e| (e.tick, e.neuron))
            .collect())
    }

    /// Runs one decision on `net` and returns the first command fired inside its window.
    pub fn decide<F: Scalar>(
        &self,
        net: &mut Network<F>,
        searching: Tick,
        schedule: &[(usize, Tick)],
    ) -> Result<Option<usize>, PpcError> {
        for &(input, tick) in schedule {
            if tick <= searching {
                return Err(PpcError::ScheduleBeforeSearch { tick, searching });
            }
            if input >= self.config.num_match_inputs {
                return Err(PpcError::UnknownInput(input));
            }
        }
        self.start(net, searching)?;
        for &(input, tick) in schedule {
            self.match_in(net, input, tick)?;
        }
        let last_input = schedule.iter().map(|&(_, t)| t + 3).max().unwrap_or(0);
        let end = self.window_end(searching).max(last_input);
        net.run_until(end + 1);
        Ok(self.outputs(net, searching, end)?.first().map(|&(_, c)| c))
    }
}

/// A decision circuit that owns its network.
#[derive(Clone, Debug)]
pub struct PpcCircuit<F> {
    pub net: Network<F>,
    pub ppc: Ppc,
}

impl<F: Scalar> PpcCircuit<F> {
    pub fn new(config: PpcConfig) -> Result<Self, PpcError> {
        let mut builder = NetworkBuilder::new();
        let ppc = Ppc::install(&mut builder, config)?;
        Ok(PpcCircuit { net: builder.build()?, ppc })
    }

    pub fn decide(&mut self, searching: Tick, schedule: &[(usize, Tick)]) -> Result<Option<usize>, PpcError> {
        self.ppc.decide(&mut self.net, searching, schedule)
    }

    /// `Delay2`-style label of a recorded event.
    pub fn label(&self, event: &SpikeEvent) -> String {
        let name = self.net.population(event.population).map_or("?", |p| p.name.as_str());
        format!("{name}{}", event.neuron)
    }
}
