//! UDP link between the navigator and a robot (or a simulated one).

pub mod client;
pub mod proxy;
pub mod server;
pub mod wire;

pub use client::{RemoteEnv, DEFAULT_TIMEOUT};
pub use proxy::{Faults, Proxy};
pub use server::{serve, Robot, ServerHandle};
