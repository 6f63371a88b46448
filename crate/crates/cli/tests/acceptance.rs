//! End-to-end acceptance checks. Runs without the libtest harness so every line is printed:
//! `criterion N: PASS|FAIL <detail>`.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikenav_bridge::{serve, Faults, Proxy};
use spikenav_cli::{cmd_navigate, ppc_poc, NavigateOptions, PocOptions, OUTPUT_FILES};
use spikenav_core::grid::{Direction, EnvConfig, Geometry};
use spikenav_core::memory::{encode_cue, LearnTiming, MemoryCircuit, MemoryConfig, MemoryError, StateCode};
use spikenav_core::nav::{NavConfig, NavError, Navigator, RunReport, Task};
use spikenav_core::oracles::{bfs_reachable, DictMemory};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(name: &str) -> EnvConfig {
    EnvConfig::load(fixture(name)).unwrap()
}

fn run_local(cfg: &EnvConfig) -> Result<RunReport, NavError> {
    let mut env = cfg.to_env().unwrap();
    Navigator::<f64>::new(Task::from_config(cfg), NavConfig::default())
        .unwrap()
        .run(&mut env)
        .map_err(|f| f.error)
}

fn ppc_timing() -> Outcome {
    let started = Instant::now();
    let run = ppc_poc(PocOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    check!(run.commands() == [0, 1, 2, 3], "commands {:?}", run.commands());
    let first = |label: &str| run.ticks_of(label).first().copied();
    check!(first("InitDelay0") == Some(2), "InitDelay at {:?}", first("InitDelay0"));
    for (j, t) in [11, 18, 25, 32].into_iter().enumerate() {
        check!(first(&format!("Delay{j}")) == Some(t), "Delay{j} at {:?}", first(&format!("Delay{j}")));
    }
    for (j, t) in [12, 69, 126, 183].into_iter().enumerate() {
        let got = run.ticks_of(&format!("Match{j}"));
        check!(got == [t], "Match{j} at {got:?}");
    }
    for (j, t) in [13, 70, 127, 184].into_iter().enumerate() {
        let got = run.ticks_of(&format!("OUT{j}"));
        check!(got == [t], "OUT{j} at {got:?}");
    }
    check!(first("Inh0") == Some(33), "Inh at {:?}", first("Inh0"));
    check!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("all ticks exact, {elapsed:?}"))
}

fn memory_trace() -> Outcome {
    let mut m = MemoryCircuit::<f64>::new(MemoryConfig::new(4, 4)).unwrap();
    let layout = m.hippocampus.layout();
    let (content, free) = m.hippocampus.content_neuron(StateCode::Free);
    let ticks = |m: &MemoryCircuit<f64>, pop, n| -> Vec<u64> {
        m.net.spike_log().filter(|e| e.population == pop && e.neuron == n).map(|e| e.tick).collect()
    };
    m.learn_with(2, StateCode::Free, 142, LearnTiming::LateThird).map_err(|e| e.to_string())?;
    check!(ticks(&m, layout.cue, 1) == [142, 145], "cue bit 1 at {:?}", ticks(&m, layout.cue, 1));
    check!(ticks(&m, content, free) == [142, 145], "content 5 at {:?}", ticks(&m, content, free));
    check!(m.next_free() <= 176, "memory busy until {}", m.next_free());
    let got = m.recall(2, 176).map_err(|e| e.to_string())?;
    check!(got == Some(StateCode::Free), "recall gave {got:?}");
    check!(ticks(&m, content, free) == [142, 145, 177], "content 5 at {:?}", ticks(&m, content, free));
    let config = *m.hippocampus.config();
    let bits = |p| -> BTreeSet<usize> {
        encode_cue(&config, p).unwrap().iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    };
    check!(bits(7) == BTreeSet::from([0, 1, 2]), "position 7 bits {:?}", bits(7));
    check!(bits(4) == BTreeSet::from([2]), "position 4 bits {:?}", bits(4));
    // and the cue population really fires those bits
    let t = m.next_free();
    m.recall(7, t).map_err(|e| e.to_string())?;
    let fired: BTreeSet<usize> =
        m.net.spikes_between(t, t).unwrap().iter().filter(|e| e.population == layout.cue).map(|e| e.neuron).collect();
    check!(fired == bits(7), "position 7 fired cue bits {fired:?}");
    Ok("spikes at 142/145, recall at 177, cue bits exact".into())
}

fn jitter() -> Outcome {
    let (mut recalled, mut misses) = (0, 0);
    for p in 1..=16 {
        for s in StateCode::ALL {
            let mut m = MemoryCircuit::<f64>::new(MemoryConfig::new(4, 4)).unwrap();
            if s == StateCode::Unexplored {
                // unexplored is the absence of a memory: it cannot be written and reads back as a miss
                check!(
                    m.learn_with(p, s, 5, LearnTiming::LateThird) == Err(MemoryError::InvalidState),
                    "unexplored was writable at {p}"
                );
                let t = m.next_free();
                check!(m.recall(p, t).unwrap().is_none(), "unexplored {p} recalled a state");
                misses += 1;
            } else {
                m.learn_with(p, s, 5, LearnTiming::LateThird).map_err(|e| e.to_string())?;
                let t = m.next_free();
                let got = m.recall(p, t).unwrap();
                check!(got == Some(s), "position {p} state {s} recalled {got:?}");
                recalled += 1;
            }
        }
    }
    Ok(format!("{recalled}/112 written states recalled, {misses}/16 unexplored read back as misses"))
}

fn memory_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let writable: Vec<StateCode> = StateCode::ALL.into_iter().filter(|&s| s != StateCode::Unexplored).collect();
    let (mut recalls, mut mismatches, mut ops_total) = (0u64, 0u64, 0u64);
    for _ in 0..1000 {
        let config = MemoryConfig::new(6, 6);
        let mut m = MemoryCircuit::<f64>::new(config).unwrap();
        m.net.set_log_capacity(Some(64));
        let mut dict = DictMemory::new(config.forget_horizon);
        let len = rng.gen_range(1..=500);
        for _ in 0..len {
            let p = rng.gen_range(1..=36);
            let s = writable[rng.gen_range(0..writable.len())];
            let t = m.next_free();
            match rng.gen_range(0..3) {
                0 => {
                    m.learn(p, s, t).unwrap();
                    dict.learn(p, s);
                }
                1 => {
                    recalls += 1;
                    if m.recall(p, t).unwrap() != dict.recall(p) {
                        mismatches += 1;
                    }
                }
                _ => {
                    m.reinforce(p, s, t).unwrap();
                    dict.reinforce(p, s);
                }
            }
        }
        ops_total += len;
        if m.snapshot() != dict.contents() {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    check!(mismatches == 0, "{mismatches} mismatches over {recalls} recalls");
    check!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("1000 sequences, {ops_total} ops, {recalls} recalls, 0 mismatches, {elapsed:?}"))
}

fn small_map() -> Outcome {
    let cfg = load("map4x4.toml");
    let r = run_local(&cfg).map_err(|e| e.to_string())?;
    check!(r.reached_goal && r.iterations == 9, "goal {} at iteration {}", r.reached_goal, r.iterations);
    check!(!r.trajectory.contains(&11), "entered 11");
    check!(r.state_of(11) == Some(StateCode::Obstacle), "11 is {:?}", r.state_of(11));
    let (&goal, path) = r.trajectory.split_last().unwrap();
    check!(goal == cfg.goal, "ended at {goal}");
    for &p in path {
        let s = r.state_of(p);
        check!(matches!(s, Some(StateCode::StepInPath | StateCode::Crossroad)), "trajectory cell {p} is {s:?}");
    }
    let states: Vec<String> = path.iter().map(|&p| format!("{p}={}", r.state_of(p).unwrap())).collect();
    Ok(format!("goal at iteration 9, path {}", states.join(" ")))
}

/// The stored state of each position as of just before `until` in the event log.
fn states_before(r: &RunReport, until: &str) -> Vec<(u32, String)> {
    let mut out = Vec::new();
    for line in &r.events {
        if line.contains(until) {
            break;
        }
        if !line.contains("op=reinforce") {
            continue;
        }
        let field = |k: &str| line.split(' ').find_map(|w| w.strip_prefix(k)).unwrap_or("").to_string();
        if let Ok(p) = field("positions=").parse::<u32>() {
            out.retain(|(q, _)| *q != p);
            out.push((p, field("states=")));
        }
    }
    out
}

fn short_backtracking() -> Outcome {
    let cfg = load("map6x6_short.toml");
    for p in [5, 12, 23, 30] {
        check!(cfg.obstacles.contains(&p), "fixture lacks obstacle {p}");
    }
    check!(cfg.start == 3, "start {}", cfg.start);
    let r = run_local(&cfg).map_err(|e| e.to_string())?;
    let before = states_before(&r, "op=dead-end");
    let at = |p: u32| before.iter().find(|(q, _)| *q == p).map(|(_, s)| s.as_str()).unwrap_or("none");
    for p in [3, 10, 17] {
        check!(at(p) == "crossroad", "{p} was {} before the dead end", at(p));
    }
    for p in [4, 11, 18, 24] {
        check!(at(p) == "step-in-path", "{p} was {} before the dead end", at(p));
    }
    for (p, s) in [(24, StateCode::DeadEnd), (18, StateCode::DeadEnd), (17, StateCode::StepInPath)] {
        check!(r.state_of(p) == Some(s), "{p} ends as {:?}", r.state_of(p));
    }
    check!(r.reached_goal && r.iterations == 28, "goal {} at iteration {}", r.reached_goal, r.iterations);
    Ok("state assignments exact, goal at iteration 28".into())
}

fn long_backtracking() -> Outcome {
    let cfg = load("map6x6_long.toml");
    let r = run_local(&cfg).map_err(|e| e.to_string())?;
    check!(r.reached_goal, "goal not reached");
    let back = r.trajectory.iter().position(|&p| p == cfg.start).ok_or("never returned to the start")?;
    let detour: BTreeSet<_> = r.trajectory[..back].iter().copied().collect();
    for &p in &detour {
        check!(r.state_of(p) == Some(StateCode::DeadEnd), "explored cell {p} is {:?}", r.state_of(p));
    }
    let g = r.geometry;
    let start_col = g.row_col(cfg.start).1;
    let next = r.trajectory[back + 1];
    check!(g.row_col(next).1 < start_col, "left the start towards {next}");
    check!(r.trajectory[back + 1..].iter().all(|p| !detour.contains(p)), "re-entered the dead-end region");
    let coverage = r.coverage();
    check!(coverage >= 0.8, "coverage {coverage:.2}");
    Ok(format!("{} dead-end cells, left exit via {next}, coverage {:.0}%", detour.len(), coverage * 100.0))
}

fn sweep() -> Outcome {
    let started = Instant::now();
    let geometry = Geometry::new(3, 3);
    let mut cases = Vec::new();
    for start in 1..=9u32 {
        for goal in (1..=9u32).filter(|&g| g != start) {
            let others: Vec<u32> = (1..=9).filter(|&p| p != start && p != goal).collect();
            for mask in 0u32..(1 << others.len()) {
                let obstacles: Vec<u32> =
                    others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
                cases.push(EnvConfig { width: 3, height: 3, obstacles, start, goal, initial_heading: Direction::S });
            }
        }
    }
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = cases.len().div_ceil(workers);
    let failures: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut bad = Vec::new();
                    for cfg in part {
                        let obstacles: BTreeSet<_> = cfg.obstacles.iter().copied().collect();
                        let reachable = bfs_reachable(geometry, &obstacles, cfg.start, cfg.goal);
                        let result = catch_unwind(AssertUnwindSafe(|| run_local(cfg)));
                        let ok = match &result {
                            Ok(Ok(r)) => {
                                reachable && r.reached_goal && r.trajectory.iter().all(|p| !obstacles.contains(p))
                            }
                            Ok(Err(NavError::Livelock(_))) => !reachable,
                            _ => false,
                        };
                        if !ok {
                            let got = match result {
                                Ok(Ok(r)) => format!("reached={}", r.reached_goal),
                                Ok(Err(e)) => e.to_string(),
                                Err(_) => "panic".into(),
                            };
                            bad.push(format!(
                                "start {} goal {} obstacles {:?}: reachable={reachable} got {got}",
                                cfg.start, cfg.goal, cfg.obstacles
                            ));
                        }
                    }
                    bad
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    check!(failures.is_empty(), "{} of {} disagree, first: {}", failures.len(), cases.len(), failures[0]);
    Ok(format!("{} layouts agree with reachability, {:?}", cases.len(), started.elapsed()))
}

fn bridge_transparency() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for name in ["map4x4.toml", "map6x6_short.toml", "map6x6_long.toml"] {
        let cfg = load(name);
        let local_dir = root.path().join(format!("{name}-local"));
        let local = cmd_navigate(&NavigateOptions::new(fixture(name), &local_dir)).map_err(|e| e.to_string())?;
        check!(local.reached_goal(), "{name} failed in process");
        for duplicate in [false, true] {
            let server = serve(cfg.to_env().unwrap(), cfg.initial_pose(), "127.0.0.1:0").map_err(|e| e.to_string())?;
            let proxy = Proxy::start(server.local_addr(), Faults { duplicate, cut_after: None })
                .map_err(|e| e.to_string())?;
            let dir = root.path().join(format!("{name}-bridge-{duplicate}"));
            let opts = NavigateOptions { bridge: Some(proxy.local_addr().to_string()), ..NavigateOptions::new(fixture(name), &dir) };
            let remote = cmd_navigate(&opts).map_err(|e| e.to_string())?;
            check!(remote.reached_goal(), "{name} failed over the bridge (duplicates {duplicate})");
            for file in OUTPUT_FILES {
                let a = fs::read(local_dir.join(file)).unwrap();
                let b = fs::read(dir.join(file)).unwrap();
                check!(a == b, "{name} {file} differs over the bridge (duplicates {duplicate})");
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} output files byte-identical, with and without duplicated datagrams"))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, ppc_timing),
        (2, memory_trace),
        (3, jitter),
        (4, memory_oracle),
        (5, small_map),
        (6, short_backtracking),
        (7, long_backtracking),
        (8, sweep),
        (9, bridge_transparency),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, f) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let result = catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
