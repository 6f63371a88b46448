use std::collections::HashMap;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use spikenav_core::grid::{CellKind, GridEnv, Pose};

use crate::wire::{encode, parse_request, Command, Reply};

/// A simulated robot that answers from a [`GridEnv`] and owns the authoritative pose.
#[derive(Debug)]
pub struct Robot {
    env: GridEnv,
    pose: Pose,
}

impl Robot {
    pub fn new(env: GridEnv, pose: Pose) -> Self {
        Robot { env, pose }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn execute(&mut self, cmd: Command) -> Reply {
        match cmd {
            Command::Sense => {
                let obs = self.env.sense(self.pose);
                Reply::Obst {
                    occupied: obs.map(|o| o.kind == CellKind::Obstacle),
                    goal: obs.map(|o| o.kind == CellKind::Goal),
                }
            }
            Command::Move(ego) => match self.env.apply_move(self.pose, ego.apply(self.pose.heading)) {
                Ok(pose) => {
                    self.pose = pose;
                    Reply::Ok
                }
                Err(_) => Reply::Err("blocked".into()),
            },
            Command::Turn(ego) => {
                self.pose.heading = ego.apply(self.pose.heading);
                Reply::Ok
            }
        }
    }

    /// Answers one datagram. `None` means stay silent (a stale duplicate).
    fn answer(&mut self, datagram: &str, last: Option<&(u64, String)>) -> Option<(u64, String)> {
        let (seq, cmd) = parse_request(datagram);
        let Some(seq) = seq else {
            return Some((0, encode(0, &Reply::Err("bad-request".into()))));
        };
        match last {
            Some((prev, cached)) if *prev == seq => return Some((seq, cached.clone())),
            Some((prev, _)) if *prev > seq => return None,
            _ => {}
        }
        let reply = match cmd {
            Some(cmd) => self.execute(cmd),
            None => Reply::Err("bad-request".into()),
        };
        Some((seq, encode(seq, &reply)))
    }
}

/// Running server; dropping it stops the thread.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    robot: Arc<Mutex<Robot>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn pose(&self) -> Pose {
        self.robot.lock().unwrap().pose()
    }

    /// Stops the server and returns the final pose.
    pub fn stop(mut self) -> Pose {
        self.shutdown();
        self.pose()
    }

    /// Setting this flag stops the server; pair with [`ServerHandle::wait`].
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    pub fn wait(mut self) -> Pose {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        self.pose()
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds `endpoint` and answers requests on a background thread, one at a time.
pub fn serve(env: GridEnv, initial_pose: Pose, endpoint: impl ToSocketAddrs) -> io::Result<ServerHandle> {
    let socket = UdpSocket::bind(endpoint)?;
    socket.set_read_timeout(Some(Duration::from_millis(20)))?;
    let addr = socket.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let robot = Arc::new(Mutex::new(Robot::new(env, initial_pose)));
    let thread = {
        let stop = stop.clone();
        let robot = robot.clone();
        std::thread::spawn(move || run(socket, &stop, &robot))
    };
    log::info!("robot server listening on {addr}");
    Ok(ServerHandle { addr, stop, robot, thread: Some(thread) })
}

fn run(socket: UdpSocket, stop: &AtomicBool, robot: &Mutex<Robot>) {
    let mut last: HashMap<SocketAddr, (u64, String)> = HashMap::new();
    let mut buf = [0u8; 512];
    while !stop.load(Ordering::SeqCst) {
        let (n, peer) = match socket.recv_from(&mut buf) {
            Ok(x) => x,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
            Err(e) => {
                log::warn!("receive failed: {e}");
                continue;
            }
        };
        let text = String::from_utf8_lossy(&buf[..n]);
        let mut robot = robot.lock().unwrap();
        let Some((seq, reply)) = robot.answer(&text, last.get(&peer)) else {
            continue;
        };
        if seq > 0 {
            last.insert(peer, (seq, reply.clone()));
        }
        log::debug!("{peer}: {} -> {} at {:?}", text.trim_end(), reply.trim_end(), robot.pose());
        if let Err(e) = socket.send_to(reply.as_bytes(), peer) {
            log::warn!("send to {peer} failed: {e}");
        }
    }
    log::info!("robot server stopped at {:?}", robot.lock().unwrap().pose());
}
