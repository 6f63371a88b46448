use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

use spikenav_core::grid::{CellKind, CellObservation, Direction, EnvError, Environment, Geometry, Pose};

use crate::wire::{encode, parse_reply, Command, Ego, Reply};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(1000);

/// [`Environment`] backed by a robot server. Each request is sent at most twice.
#[derive(Debug)]
pub struct RemoteEnv {
    socket: UdpSocket,
    geometry: Geometry,
    heading: Direction,
    seq: u64,
    timeout: Duration,
    retries: u32,
}

impl RemoteEnv {
    /// `heading` must match the robot's initial heading.
    pub fn connect(server: SocketAddr, geometry: Geometry, heading: Direction, timeout: Duration) -> io::Result<Self> {
        let local: SocketAddr = if server.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().unwrap();
        let socket = UdpSocket::bind(local)?;
        socket.connect(server)?;
        Ok(RemoteEnv { socket, geometry, heading, seq: 0, timeout, retries: 1 })
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn requests_sent(&self) -> u64 {
        self.seq
    }

    pub fn request(&mut self, cmd: Command) -> Result<Reply, EnvError> {
        self.seq += 1;
        let seq = self.seq;
        let datagram = encode(seq, &cmd);
        let mut last_error = String::from("no reply");
        for _ in 0..=self.retries {
            self.socket.send(datagram.as_bytes()).map_err(|e| EnvError::Transport(e.to_string()))?;
            match self.await_reply(seq) {
                Ok(reply) => return Ok(reply),
                Err(e) => last_error = e,
            }
        }
        Err(EnvError::Transport(format!("request {seq} ({cmd}) failed: {last_error}")))
    }

    fn await_reply(&mut self, seq: u64) -> Result<Reply, String> {
        let deadline = Instant::now() + self.timeout;
        let mut buf = [0u8; 512];
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(format!("timed out after {} ms", self.timeout.as_millis()));
            }
            self.socket.set_read_timeout(Some(left)).map_err(|e| e.to_string())?;
            match self.socket.recv(&mut buf) {
                Ok(n) => {
                    let text = String::from_utf8_lossy(&buf[..n]);
                    match parse_reply(&text) {
                        Some((s, reply)) if s == seq => return Ok(reply),
                        // late duplicate of an earlier answer
                        Some(_) => continue,
                        None => log::warn!("ignoring malformed reply {text:?}"),
                    }
                }
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                    return Err(format!("timed out after {} ms", self.timeout.as_millis()))
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    }

    fn expect_ok(reply: Reply) -> Result<(), EnvError> {
        match reply {
            Reply::Ok => Ok(()),
            Reply::Err(r) if r == "blocked" => Err(EnvError::Blocked),
            other => Err(EnvError::Protocol(format!("unexpected reply {other}"))),
        }
    }

    fn face(&mut self, heading: Direction) -> Result<(), EnvError> {
        if heading != self.heading {
            Self::expect_ok(self.request(Command::Turn(Ego::between(self.heading, heading)))?)?;
            self.heading = heading;
        }
        Ok(())
    }
}

impl Environment for RemoteEnv {
    fn sense(&mut self, pose: Pose) -> Result<[CellObservation; 3], EnvError> {
        self.face(pose.heading)?;
        let Reply::Obst { occupied, goal } = self.request(Command::Sense)? else {
            return Err(EnvError::Protocol("SENSE not answered with OBST".into()));
        };
        let dirs = pose.egocentric();
        let mut obs = [CellObservation { target: None, kind: CellKind::Obstacle }; 3];
        for i in 0..3 {
            let target =
                self.geometry.neighbor(pose.position, dirs[i]).map_err(|_| EnvError::OffGrid(pose.position))?;
            let kind = match (occupied[i], goal[i]) {
                (_, true) => CellKind::Goal,
                (true, false) => CellKind::Obstacle,
                (false, false) => CellKind::Free,
            };
            if target.is_none() && kind != CellKind::Obstacle {
                return Err(EnvError::Protocol(format!("robot reports open space beyond the edge at {}", pose.position)));
            }
            obs[i] = CellObservation { target, kind };
        }
        Ok(obs)
    }

    fn apply_move(&mut self, pose: Pose, direction: Direction) -> Result<Pose, EnvError> {
        let target = match self.geometry.neighbor(pose.position, direction) {
            Err(_) => return Err(EnvError::OffGrid(pose.position)),
            Ok(None) => return Err(EnvError::Blocked),
            Ok(Some(t)) => t,
        };
        let ego = Ego::between(self.heading, direction);
        Self::expect_ok(self.request(Command::Move(ego))?)?;
        self.heading = direction;
        Ok(Pose::new(target, direction))
    }

    fn turn(&mut self, pose: Pose, heading: Direction) -> Result<Pose, EnvError> {
        self.face(heading)?;
        Ok(Pose::new(pose.position, heading))
    }
}
