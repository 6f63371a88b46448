//! Commands behind the `spikenav` binary, callable from tests.

use std::fs;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use spikenav_bridge::{serve, RemoteEnv};
use spikenav_core::grid::{EnvConfig, Pose};
use spikenav_core::nav::{NavConfig, NavError, Navigator, RunReport, Task};
use spikenav_core::ppc::{PpcCircuit, PpcConfig};
use spikenav_core::snn::{write_spike_csv, Tick};

/// Searching ticks and the match-in line used for each of the four demo decisions.
pub const POC_DECISIONS: [(Tick, usize); 4] = [(1, 0), (51, 0), (101, 1), (151, 1)];

#[derive(Clone, Copy, Debug)]
pub struct PocOptions {
    pub init_delay: u32,
    pub step_delay: u32,
    /// Skip the match-ins, so only the delay chain runs.
    pub empty_schedule: bool,
}

impl Default for PocOptions {
    fn default() -> Self {
        PocOptions { init_delay: 9, step_delay: 7, empty_schedule: false }
    }
}

#[derive(Clone, Debug)]
pub struct PocRun {
    pub circuit: PpcCircuit<f64>,
    /// Selected command per decision, `None` when nothing fired.
    pub decisions: Vec<Option<usize>>,
    pub raster: String,
}

impl PocRun {
    pub fn commands(&self) -> Vec<usize> {
        self.decisions.iter().flatten().copied().collect()
    }

    /// Ticks at which a neuron labelled like `Delay2` fired.
    pub fn ticks_of(&self, label: &str) -> Vec<Tick> {
        self.circuit.net.spike_log().filter(|e| self.circuit.label(e) == label).map(|e| e.tick).collect()
    }
}

/// Four decisions; decision `j` is matched in slot `j`, so the commands come out 0, 1, 2, 3.
pub fn ppc_poc(opts: PocOptions) -> Result<PocRun> {
    let config = PpcConfig { init_delay: opts.init_delay, step_delay: opts.step_delay, ..PpcConfig::default() };
    let mut circuit = PpcCircuit::<f64>::new(config)?;
    let mut decisions = Vec::new();
    for (slot, &(searching, line)) in POC_DECISIONS.iter().enumerate() {
        let schedule =
            if opts.empty_schedule { vec![] } else { vec![(line, circuit.ppc.delay_tick(searching, slot))] };
        decisions.push(circuit.decide(searching, &schedule)?);
    }
    let events: Vec<_> = circuit.net.spike_log().copied().collect();
    let raster = write_spike_csv(&circuit.net, &events);
    Ok(PocRun { circuit, decisions, raster })
}

/// Runs the demo and writes `raster.csv` and `commands.txt` into `out`.
pub fn cmd_ppc_poc(opts: PocOptions, out: &Path) -> Result<PocRun> {
    let run = ppc_poc(opts)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("raster.csv"), &run.raster)?;
    let commands: String = run.commands().iter().map(|c| format!("{c}\n")).collect();
    fs::write(out.join("commands.txt"), commands)?;
    Ok(run)
}

#[derive(Clone, Debug)]
pub struct NavigateOptions {
    pub env: PathBuf,
    pub out: PathBuf,
    pub bridge: Option<String>,
    pub timeout: Duration,
    pub max_iterations: Option<u32>,
}

impl NavigateOptions {
    pub fn new(env: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        NavigateOptions {
            env: env.into(),
            out: out.into(),
            bridge: None,
            timeout: spikenav_bridge::DEFAULT_TIMEOUT,
            max_iterations: None,
        }
    }
}

#[derive(Debug)]
pub struct NavigateOutcome {
    pub report: RunReport,
    pub error: Option<NavError>,
}

impl NavigateOutcome {
    pub fn reached_goal(&self) -> bool {
        self.error.is_none() && self.report.reached_goal
    }
}

pub const OUTPUT_FILES: [&str; 5] = ["trajectory.txt", "events.log", "map.csv", "map.txt", "raster.csv"];

pub fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()
        .with_context(|| format!("resolving {addr}"))?
        .next()
        .ok_or_else(|| anyhow!("{addr} resolves to no address"))
}

/// Runs the navigator and writes the report files. A failed run still writes them, plus
/// `diagnostic.json`; only setup problems are returned as errors.
pub fn cmd_navigate(opts: &NavigateOptions) -> Result<NavigateOutcome> {
    let cfg = EnvConfig::load(&opts.env)?;
    let task = Task::from_config(&cfg);
    let nav_config = NavConfig { max_iterations: opts.max_iterations, ..NavConfig::default() };
    let navigator = Navigator::<f64>::new(task, nav_config)?;
    let result = match &opts.bridge {
        Some(addr) => {
            let mut env = RemoteEnv::connect(resolve(addr)?, task.geometry, task.heading, opts.timeout)?;
            navigator.run(&mut env)
        }
        None => navigator.run(&mut cfg.to_env()?),
    };
    let outcome = match result {
        Ok(report) => NavigateOutcome { report, error: None },
        Err(failure) => NavigateOutcome { report: failure.report, error: Some(failure.error) },
    };
    write_report(&outcome, &opts.out)?;
    Ok(outcome)
}

fn write_report(outcome: &NavigateOutcome, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let r = &outcome.report;
    fs::write(out.join("trajectory.txt"), r.trajectory_text())?;
    fs::write(out.join("events.log"), r.events_text())?;
    fs::write(out.join("map.csv"), r.map_table())?;
    fs::write(out.join("map.txt"), r.map_ascii())?;
    fs::write(out.join("raster.csv"), &r.raster)?;
    let diagnostic = out.join("diagnostic.json");
    if outcome.reached_goal() {
        if diagnostic.exists() {
            fs::remove_file(&diagnostic)?;
        }
        return Ok(());
    }
    let (kind, message) = match &outcome.error {
        Some(e) => (e.kind(), e.to_string()),
        None => ("livelock", "run ended without reaching the goal".to_string()),
    };
    let position = r.trajectory.last().copied().unwrap_or(r.start);
    let json = serde_json::json!({
        "status": kind,
        "message": message,
        "iterations": r.iterations,
        "position": position,
        "start": r.start,
        "goal": r.goal,
        "map": r.map.iter().map(|(p, s)| serde_json::json!({"position": p, "state": s.name()})).collect::<Vec<_>>(),
    });
    fs::write(diagnostic, format!("{}\n", serde_json::to_string_pretty(&json)?))?;
    Ok(())
}

/// Serves the environment at `addr` until interrupted and returns the final pose.
pub fn cmd_serve_robot(env: &Path, addr: &str) -> Result<Pose> {
    let cfg = EnvConfig::load(env)?;
    let server = serve(cfg.to_env()?, cfg.initial_pose(), addr).with_context(|| format!("binding {addr}"))?;
    eprintln!("serving {} on {}", env.display(), server.local_addr());
    let stop = server.stop_flag();
    ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst)).context("installing the interrupt handler")?;
    let pose = server.wait();
    log::info!("shut down at position {} heading {}", pose.position, pose.heading.name());
    Ok(pose)
}
