use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use spikenav_cli::{cmd_navigate, cmd_ppc_poc, cmd_serve_robot, NavigateOptions, PocOptions};

#[derive(Parser)]
#[command(name = "spikenav", version, about = "Spiking-network navigation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run four decisions of the coincidence circuit and write raster.csv and commands.txt.
    PpcPoc {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 9)]
        init_delay: u32,
        #[arg(long, default_value_t = 7)]
        step_delay: u32,
        /// Inject no match-ins; only the delay chain fires.
        #[arg(long)]
        empty_schedule: bool,
    },
    /// Navigate an environment and write trajectory.txt, events.log, map.csv, map.txt and
    /// raster.csv, plus diagnostic.json when the goal is not reached.
    ///
    /// map.txt uses one character per cell: S start, G goal, . free, # obstacle,
    /// * step-in-path, + crossroad, X dead end, space for unexplored.
    Navigate {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Robot server to drive instead of the in-process environment.
        #[arg(long, env = "SPIKENAV_BRIDGE_ADDR")]
        bridge: Option<String>,
        #[arg(long, env = "SPIKENAV_BRIDGE_TIMEOUT_MS", default_value_t = 1000)]
        timeout_ms: u64,
        /// Accepted for compatibility; runs are deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iterations: Option<u32>,
    },
    /// Serve an environment as a simulated robot until interrupted.
    ServeRobot {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, env = "SPIKENAV_BRIDGE_ADDR", default_value = "127.0.0.1:7878")]
        addr: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::PpcPoc { out, init_delay, step_delay, empty_schedule } => {
            let run = cmd_ppc_poc(PocOptions { init_delay, step_delay, empty_schedule }, &out)?;
            println!("commands: {:?}", run.commands());
        }
        Command::Navigate { env, out, bridge, timeout_ms, seed: _, max_iterations } => {
            let opts = NavigateOptions {
                bridge,
                timeout: Duration::from_millis(timeout_ms),
                max_iterations,
                ..NavigateOptions::new(env, out)
            };
            let outcome = cmd_navigate(&opts)?;
            print!("{}", outcome.report.map_ascii());
            println!("iterations: {}", outcome.report.iterations);
            if let Some(e) = &outcome.error {
                eprintln!("run failed: {e}");
            }
            if !outcome.reached_goal() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::ServeRobot { env, addr } => {
            cmd_serve_robot(&env, &addr)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
