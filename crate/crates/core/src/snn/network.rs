use std::collections::{BTreeMap, VecDeque};

use super::*;

#[derive(Clone, Debug)]
struct PopState<F> {
    info: Population<F>,
    offset: usize,
    decay: F,
}

#[derive(Clone, Debug)]
struct GroupState<F> {
    pre: usize,
    post: usize,
    kind: SynapseKind,
    conns: Vec<Connection<F>>,
    rule: Option<StdpRule<F>>,
    // a_plus * exp(-d / tau_plus) and a_minus * exp(-d / tau_minus) for d in 0..=window
    ltp: Vec<F>,
    ltd: Vec<F>,
}

#[derive(Clone, Copy, Debug)]
struct Arrival {
    target: usize,
    group: u32,
    conn: u32,
}

/// Collects populations and synapse groups, assigning ids in insertion order.
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder<F> {
    populations: Vec<Population<F>>,
    groups: Vec<SynapseGroup<F>>,
}

impl<F: Scalar> NetworkBuilder<F> {
    pub fn new() -> Self {
        NetworkBuilder { populations: Vec::new(), groups: Vec::new() }
    }

    pub fn population(&mut self, name: &str, size: usize, params: LifParams<F>) -> PopulationId {
        self.add(name, size, params, false)
    }

    /// A population whose neurons can be forced to fire with [`Network::inject`].
    pub fn input_population(&mut self, name: &str, size: usize, params: LifParams<F>) -> PopulationId {
        self.add(name, size, params, true)
    }

    fn add(&mut self, name: &str, size: usize, params: LifParams<F>, input: bool) -> PopulationId {
        let id = PopulationId(self.populations.len());
        self.populations.push(Population { id, name: name.to_string(), size, params, input });
        id
    }

    pub fn params(&self, id: PopulationId) -> Option<&LifParams<F>> {
        self.populations.iter().find(|p| p.id == id).map(|p| &p.params)
    }

    pub fn connect(&mut self, group: SynapseGroup<F>) -> GroupId {
        self.groups.push(group);
        GroupId(self.groups.len() - 1)
    }

    /// Static current synapses from `(pre, post)` index pairs sharing one weight and delay.
    pub fn connect_pairs(
        &mut self,
        pre: PopulationId,
        post: PopulationId,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        weight: F,
        delay: u32,
    ) -> GroupId {
        self.connect(SynapseGroup {
            pre,
            post,
            kind: SynapseKind::Current,
            connections: pairs
                .into_iter()
                .map(|(pre, post)| Connection { pre, post, weight, delay })
                .collect(),
            rule: None,
        })
    }

    pub fn build(self) -> Result<Network<F>, SnnError> {
        Network::build(self.populations, self.groups)
    }
}

/// A built network plus its clock, event queues and spike log.
#[derive(Clone, Debug)]
pub struct Network<F> {
    pops: Vec<PopState<F>>,
    groups: Vec<GroupState<F>>,
    // per global neuron
    v: Vec<F>,
    input: Vec<F>,
    silent_until: Vec<Option<Tick>>,
    last_spike: Vec<Option<Tick>>,
    out_adj: Vec<Vec<(u32, u32)>>,
    plastic_in: Vec<Vec<(u32, u32)>>,
    plastic_out: Vec<Vec<(u32, u32)>>,
    fired: Vec<bool>,
    forced: Vec<bool>,
    ring: Vec<Vec<Arrival>>,
    injected: BTreeMap<Tick, Vec<usize>>,
    log: VecDeque<SpikeEvent>,
    log_capacity: Option<usize>,
    now: Tick,
}

impl<F: Scalar> Network<F> {
    /// Validates and wires the network. Population ids may be arbitrary but must be unique;
    /// populations are ordered by id for logging.
    pub fn build(mut populations: Vec<Population<F>>, synapses: Vec<SynapseGroup<F>>) -> Result<Self, SnnError> {
        populations.sort_by_key(|p| p.id);
        for w in populations.windows(2) {
            if w[0].id == w[1].id {
                return Err(SnnError::DuplicatePopulation(w[1].id));
            }
        }
        for (i, p) in populations.iter().enumerate() {
            if populations[..i].iter().any(|q| q.name == p.name) {
                return Err(SnnError::DuplicatePopulation(p.id));
            }
        }

        let mut pops = Vec::with_capacity(populations.len());
        let mut offset = 0;
        for p in populations {
            if p.size == 0 {
                return Err(SnnError::EmptyPopulation(p.id));
            }
            p.params.validate().map_err(SnnError::InvalidParams)?;
            let decay = (-F::one() / p.params.tau_m).exp();
            let size = p.size;
            pops.push(PopState { info: p, offset, decay });
            offset += size;
        }
        let total = offset;
        let index_of = |id: PopulationId| {
            pops.iter().position(|p| p.info.id == id).ok_or(SnnError::UnknownPopulation(id))
        };

        let mut groups = Vec::with_capacity(synapses.len());
        let mut out_adj = vec![Vec::new(); total];
        let mut plastic_in = vec![Vec::new(); total];
        let mut plastic_out = vec![Vec::new(); total];
        let mut max_delay = 1u32;
        for (gi, g) in synapses.into_iter().enumerate() {
            let pre = index_of(g.pre)?;
            let post = index_of(g.post)?;
            if let Some(rule) = &g.rule {
                rule.validate().map_err(SnnError::InvalidParams)?;
            }
            let (pre_size, post_size) = (pops[pre].info.size, pops[post].info.size);
            for (ci, c) in g.connections.iter().enumerate() {
                if c.pre >= pre_size {
                    return Err(SnnError::NeuronOutOfRange { population: g.pre, index: c.pre, size: pre_size });
                }
                if c.post >= post_size {
                    return Err(SnnError::NeuronOutOfRange { population: g.post, index: c.post, size: post_size });
                }
                if c.delay < 1 {
                    return Err(SnnError::ZeroDelay);
                }
                if let Some(rule) = &g.rule {
                    if c.weight < rule.w_min || c.weight > rule.w_max {
                        return Err(SnnError::WeightOutOfBounds(c.weight.to_string()));
                    }
                }
                max_delay = max_delay.max(c.delay);
                let a = pops[pre].offset + c.pre;
                let b = pops[post].offset + c.post;
                out_adj[a].push((gi as u32, ci as u32));
                if g.rule.is_some() {
                    plastic_out[a].push((gi as u32, ci as u32));
                    plastic_in[b].push((gi as u32, ci as u32));
                }
            }
            let (ltp, ltd) = match &g.rule {
                Some(r) => {
                    let table = |amp: F, tau: F| {
                        (0..=r.window).map(|d| amp * (-F::lit(d as f64) / tau).exp()).collect::<Vec<_>>()
                    };
                    (table(r.a_plus, r.tau_plus), table(r.a_minus, r.tau_minus))
                }
                None => (Vec::new(), Vec::new()),
            };
            groups.push(GroupState { pre, post, kind: g.kind, conns: g.connections, rule: g.rule, ltp, ltd });
        }

        let mut v = Vec::with_capacity(total);
        for p in &pops {
            v.extend(std::iter::repeat_n(p.info.params.v_rest, p.info.size));
        }

        Ok(Network {
            pops,
            groups,
            v,
            input: vec![F::zero(); total],
            silent_until: vec![None; total],
            last_spike: vec![None; total],
            out_adj,
            plastic_in,
            plastic_out,
            fired: vec![false; total],
            forced: vec![false; total],
            ring: vec![Vec::new(); max_delay as usize + 1],
            injected: BTreeMap::new(),
            log: VecDeque::new(),
            log_capacity: None,
            now: 0,
        })
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    /// Keeps only the most recent `capacity` spikes. `None` (the default) keeps everything.
    pub fn set_log_capacity(&mut self, capacity: Option<usize>) {
        self.log_capacity = capacity;
        self.trim_log();
    }

    pub fn populations(&self) -> impl Iterator<Item = &Population<F>> {
        self.pops.iter().map(|p| &p.info)
    }

    pub fn population(&self, id: PopulationId) -> Option<&Population<F>> {
        self.pops.iter().find(|p| p.info.id == id).map(|p| &p.info)
    }

    pub fn population_by_name(&self, name: &str) -> Option<PopulationId> {
        self.pops.iter().find(|p| p.info.name == name).map(|p| p.info.id)
    }

    pub fn neuron_count(&self) -> usize {
        self.v.len()
    }

    fn pop_index(&self, id: PopulationId) -> Result<usize, SnnError> {
        self.pops.iter().position(|p| p.info.id == id).ok_or(SnnError::UnknownPopulation(id))
    }

    fn global(&self, id: PopulationId, neuron: usize) -> Result<usize, SnnError> {
        let p = &self.pops[self.pop_index(id)?];
        if neuron >= p.info.size {
            return Err(SnnError::NeuronOutOfRange { population: id, index: neuron, size: p.info.size });
        }
        Ok(p.offset + neuron)
    }

    pub fn membrane(&self, id: PopulationId, neuron: usize) -> Result<F, SnnError> {
        Ok(self.v[self.global(id, neuron)?])
    }

    pub fn connections(&self, group: GroupId) -> &[Connection<F>] {
        &self.groups[group.0].conns
    }

    pub fn rule(&self, group: GroupId) -> Option<&StdpRule<F>> {
        self.groups[group.0].rule.as_ref()
    }

    /// Queues forced spikes. An injected neuron fires at the event tick unless it is
    /// refractory or clamped at that tick.
    pub fn inject(&mut self, events: &[SpikeEvent]) -> Result<(), SnnError> {
        let mut resolved = Vec::with_capacity(events.len());
        for e in events {
            if e.tick < self.now {
                return Err(SnnError::EventInPast { tick: e.tick, now: self.now });
            }
            let pi = self.pop_index(e.population)?;
            if !self.pops[pi].info.input {
                return Err(SnnError::NotInput(self.pops[pi].info.name.clone()));
            }
            resolved.push((e.tick, self.global(e.population, e.neuron)?));
        }
        for (tick, n) in resolved {
            self.injected.entry(tick).or_default().push(n);
        }
        Ok(())
    }

    pub fn step(&mut self) -> Vec<SpikeEvent> {
        let t = self.now;
        let slot = (t % self.ring.len() as u64) as usize;
        for a in std::mem::take(&mut self.ring[slot]) {
            let g = &self.groups[a.group as usize];
            match g.kind {
                SynapseKind::Current => {
                    self.input[a.target] = self.input[a.target] + g.conns[a.conn as usize].weight;
                }
                SynapseKind::Clamp { ticks } => {
                    if ticks > 0 {
                        let until = t + ticks as Tick - 1;
                        let s = &mut self.silent_until[a.target];
                        *s = Some(s.map_or(until, |u| u.max(until)));
                    }
                }
            }
        }
        if let Some(list) = self.injected.remove(&t) {
            for n in list {
                self.forced[n] = true;
            }
        }

        let mut spikes = Vec::new();
        let mut fired = Vec::new();
        for p in &self.pops {
            let lif = &p.info.params;
            for i in 0..p.info.size {
                let n = p.offset + i;
                let forced = std::mem::take(&mut self.forced[n]);
                let input = std::mem::replace(&mut self.input[n], F::zero());
                if self.silent_until[n].is_some_and(|u| t <= u) {
                    self.v[n] = lif.v_reset;
                    continue;
                }
                let v = lif.v_rest + (self.v[n] - lif.v_rest) * p.decay + input;
                if forced || v >= lif.v_thresh {
                    self.v[n] = lif.v_reset;
                    if lif.t_refrac > 0 {
                        self.silent_until[n] = Some(t + lif.t_refrac as Tick);
                    }
                    self.last_spike[n] = Some(t);
                    self.fired[n] = true;
                    spikes.push(SpikeEvent::new(p.info.id, i, t));
                    fired.push(n);
                } else {
                    self.v[n] = v;
                }
            }
        }

        let ring_len = self.ring.len() as u64;
        for &n in &fired {
            for &(g, c) in &self.out_adj[n] {
                let grp = &self.groups[g as usize];
                let conn = &grp.conns[c as usize];
                let target = self.pops[grp.post].offset + conn.post;
                let at = ((t + conn.delay as u64) % ring_len) as usize;
                self.ring[at].push(Arrival { target, group: g, conn: c });
            }
        }

        self.apply_stdp(t, &fired);
        for &n in &fired {
            self.fired[n] = false;
        }

        self.log.extend(spikes.iter().copied());
        self.trim_log();
        self.now += 1;
        spikes
    }

    fn apply_stdp(&mut self, t: Tick, fired: &[usize]) {
        for &n in fired {
            for &(g, c) in &self.plastic_in[n] {
                let grp = &mut self.groups[g as usize];
                let rule = grp.rule.expect("plastic group has a rule");
                let pre = self.pops[grp.pre].offset + grp.conns[c as usize].pre;
                if let Some(tp) = self.last_spike[pre] {
                    let d = t - tp;
                    if d <= rule.window {
                        let w = &mut grp.conns[c as usize].weight;
                        *w = rule.clip(*w + grp.ltp[d as usize]);
                    }
                }
            }
            for &(g, c) in &self.plastic_out[n] {
                let grp = &mut self.groups[g as usize];
                let rule = grp.rule.expect("plastic group has a rule");
                let post = self.pops[grp.post].offset + grp.conns[c as usize].post;
                if self.fired[post] {
                    continue;
                }
                if let Some(tq) = self.last_spike[post] {
                    let d = t - tq;
                    if d <= rule.window {
                        let w = &mut grp.conns[c as usize].weight;
                        *w = rule.clip(*w - grp.ltd[d as usize]);
                    }
                }
            }
        }
    }

    fn trim_log(&mut self) {
        if let Some(cap) = self.log_capacity {
            while self.log.len() > cap {
                self.log.pop_front();
            }
        }
    }

    /// Steps until the clock reads `tick`, returning every spike emitted on the way.
    pub fn run_until(&mut self, tick: Tick) -> Vec<SpikeEvent> {
        let mut out = Vec::new();
        while self.now < tick {
            out.extend(self.step());
        }
        out
    }

    /// Recorded events with `t0 <= tick <= t1`, ordered by tick, population, neuron.
    pub fn spikes_between(&self, t0: Tick, t1: Tick) -> Result<Vec<SpikeEvent>, SnnError> {
        if t0 > t1 {
            return Err(SnnError::InvertedRange(t0, t1));
        }
        if t1 > self.now {
            return Err(SnnError::RangeInFuture { end: t1, now: self.now });
        }
        let start = self.log.partition_point(|e| e.tick < t0);
        let end = self.log.partition_point(|e| e.tick <= t1);
        Ok(self.log.range(start..end).copied().collect())
    }

    pub fn spike_log(&self) -> impl Iterator<Item = &SpikeEvent> {
        self.log.iter()
    }

    /// Subtracts `amount` from every weight of a plastic group whose presynaptic index
    /// fails `keep`, dropping weights that end below `prune_below` straight to `w_min`.
    pub fn decay_weights(&mut self, group: GroupId, amount: F, prune_below: F, keep: impl Fn(&Connection<F>) -> bool) {
        let grp = &mut self.groups[group.0];
        let rule = grp.rule.expect("decay only applies to plastic groups");
        for c in grp.conns.iter_mut() {
            if keep(c) || c.weight <= rule.w_min {
                continue;
            }
            let w = rule.clip(c.weight - amount);
            c.weight = if w < prune_below { rule.w_min } else { w };
        }
    }

    pub(crate) fn population_name(&self, id: PopulationId) -> &str {
        &self.pops[self.pop_index(id).expect("event population exists")].info.name
    }
}
