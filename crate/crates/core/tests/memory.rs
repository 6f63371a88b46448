use proptest::prelude::*;
use spikenav_core::memory::*;
use spikenav_core::oracles::DictMemory;

type Mem = MemoryCircuit<f64>;

fn mem(w: u32, h: u32) -> Mem {
    MemoryCircuit::new(MemoryConfig::new(w, h)).unwrap()
}

fn cue_ticks(m: &Mem, bit: usize) -> Vec<u64> {
    m.net.spike_log().filter(|e| e.population == m.hippocampus.layout().cue && e.neuron == bit).map(|e| e.tick).collect()
}

fn content_ticks(m: &Mem, state: StateCode) -> Vec<u64> {
    let (pop, n) = m.hippocampus.content_neuron(state);
    m.net.spike_log().filter(|e| e.population == pop && e.neuron == n).map(|e| e.tick).collect()
}

#[test]
fn learn_and_recall_trace_of_position_two() {
    let mut m = mem(4, 4);
    let settle = m.learn_with(2, StateCode::Free, 142, LearnTiming::LateThird).unwrap();
    assert_eq!(settle, 146);
    assert_eq!(cue_ticks(&m, 1), vec![142, 145]);
    assert_eq!(content_ticks(&m, StateCode::Free), vec![142, 145]);
    assert!(cue_ticks(&m, 0).is_empty());
    assert_eq!(m.next_free(), 176);
    assert_eq!(m.recall(2, 176).unwrap(), Some(StateCode::Free));
    assert_eq!(content_ticks(&m, StateCode::Free), vec![142, 145, 177]);
}

#[test]
fn nominal_learn_drops_middle_presentation() {
    let mut m = mem(4, 4);
    m.learn(7, StateCode::Free, 10).unwrap();
    for bit in 0..3 {
        assert_eq!(cue_ticks(&m, bit), vec![10, 12]);
    }
    assert_eq!(content_ticks(&m, StateCode::Free), vec![10, 12]);
}

#[test]
fn collision_replaces_old_state() {
    let mut m = mem(4, 4);
    let t = m.learn(7, StateCode::Free, 0).unwrap();
    m.learn(7, StateCode::StepInPath, t + 30).unwrap();
    let t = m.next_free();
    assert_eq!(m.recall(7, t).unwrap(), Some(StateCode::StepInPath));
    assert_eq!(m.snapshot(), vec![(7, StateCode::StepInPath)]);
}

#[test]
fn never_learned_is_absent_and_silent() {
    let mut m = mem(4, 4);
    assert_eq!(m.recall(9, 0).unwrap(), None);
    assert!(m.hippocampus.content_events(&m.net, 0, 2).unwrap().is_empty());
}

#[test]
fn recall_emits_one_tap_event() {
    let mut m = mem(4, 4);
    m.learn(5, StateCode::StepInPath, 0).unwrap();
    let t = m.next_free();
    m.recall(5, t).unwrap();
    assert_eq!(m.hippocampus.content_events(&m.net, t, t + 1).unwrap(), vec![(t + 1, StateCode::StepInPath)]);
}

#[test]
fn reinforce_back_to_back_keeps_both() {
    let mut m = mem(4, 4);
    m.reinforce(7, StateCode::StepInPath, 0).unwrap();
    let t = m.next_free();
    m.reinforce(3, StateCode::Crossroad, t).unwrap();
    let t = m.next_free();
    assert_eq!(m.recall(7, t).unwrap(), Some(StateCode::StepInPath));
    let t = m.next_free();
    assert_eq!(m.recall(3, t).unwrap(), Some(StateCode::Crossroad));
}

fn survival(reinforced: bool) -> u32 {
    let cfg = MemoryConfig::new(4, 4).with_horizon(10);
    let mut m = Mem::new(cfg).unwrap();
    if reinforced {
        m.reinforce(1, StateCode::Free, 0).unwrap();
    } else {
        m.learn(1, StateCode::Free, 0).unwrap();
    }
    // probe a copy after n unrelated operations so the probe itself does not refresh
    for n in 0.. {
        let mut probe = m.clone();
        let t = probe.next_free();
        if probe.recall(1, t).unwrap().is_none() {
            return n;
        }
        let t = m.next_free();
        m.recall(2, t).unwrap();
    }
    unreachable!()
}

#[test]
fn reinforced_memories_outlive_plain_ones() {
    let plain = survival(false);
    let reinforced = survival(true);
    assert_eq!(plain, 10);
    // learn gives h, the recall half adds h up to the 2h cap
    assert_eq!(reinforced, 20);
    assert!(reinforced > plain);
}

#[test]
fn horizon_unrelated_operations_forget() {
    let mut m = mem(6, 6);
    m.learn(1, StateCode::Obstacle, 0).unwrap();
    for _ in 0..50 {
        let t = m.next_free();
        m.recall(2, t).unwrap();
    }
    let t = m.next_free();
    assert_eq!(m.recall(1, t).unwrap(), None);
}

#[test]
fn late_third_presentation_all_states_and_positions() {
    for p in 1..=16 {
        for s in StateCode::ALL.into_iter().filter(|&s| s != StateCode::Unexplored) {
            let mut m = mem(4, 4);
            m.learn_with(p, s, 5, LearnTiming::LateThird).unwrap();
            let t = m.next_free();
            assert_eq!(m.recall(p, t).unwrap(), Some(s), "position {p} state {s}");
        }
    }
}

#[test]
fn single_precision_memory_behaves_the_same() {
    let mut m = MemoryCircuit::<f32>::new(MemoryConfig::new(4, 4)).unwrap();
    m.learn(2, StateCode::Free, 0).unwrap();
    for _ in 0..49 {
        let t = m.next_free();
        m.recall(3, t).unwrap();
    }
    let t = m.next_free();
    assert_eq!(m.recall(2, t).unwrap(), Some(StateCode::Free));
}

#[test]
fn burst_matches_sequential_recalls() {
    let mut a = mem(4, 4);
    let mut b = mem(4, 4);
    for m in [&mut a, &mut b] {
        m.learn(2, StateCode::Goal, 0).unwrap();
        let t = m.next_free();
        m.learn(6, StateCode::Crossroad, t).unwrap();
    }
    let t = a.next_free();
    let burst = a.hippocampus.recall_burst(&mut a.net, &[(2, t), (5, t + 7), (6, t + 14)]).unwrap();
    let mut seq = Vec::new();
    for p in [2, 5, 6] {
        let t = b.next_free();
        seq.push(b.recall(p, t).unwrap());
    }
    assert_eq!(burst, seq);
    assert_eq!(a.snapshot(), b.snapshot());
}

#[derive(Clone, Debug)]
enum Op {
    Learn(u32, StateCode),
    Recall(u32),
    Reinforce(u32, StateCode),
}

fn arb_state() -> impl Strategy<Value = StateCode> {
    prop::sample::select(vec![
        StateCode::Start,
        StateCode::Goal,
        StateCode::StepInPath,
        StateCode::Crossroad,
        StateCode::Free,
        StateCode::Obstacle,
        StateCode::DeadEnd,
    ])
}

fn arb_op(cells: u32) -> impl Strategy<Value = Op> {
    prop_oneof![
        (1..=cells, arb_state()).prop_map(|(p, s)| Op::Learn(p, s)),
        (1..=cells).prop_map(Op::Recall),
        (1..=cells, arb_state()).prop_map(|(p, s)| Op::Reinforce(p, s)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn spiking_memory_agrees_with_dictionary(
        horizon in 2u32..12,
        ops in prop::collection::vec(arb_op(9), 1..150),
    ) {
        let mut m = Mem::new(MemoryConfig::new(3, 3).with_horizon(horizon)).unwrap();
        let mut dict = DictMemory::new(horizon);
        for op in ops {
            let t = m.next_free();
            match op {
                Op::Learn(p, s) => { m.learn(p, s, t).unwrap(); dict.learn(p, s); }
                Op::Reinforce(p, s) => { m.reinforce(p, s, t).unwrap(); dict.reinforce(p, s); }
                Op::Recall(p) => prop_assert_eq!(m.recall(p, t).unwrap(), dict.recall(p)),
            }
            prop_assert_eq!(m.snapshot(), dict.contents());
        }
    }
}
