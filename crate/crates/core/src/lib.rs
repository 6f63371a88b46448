//! Spiking navigation stack: a discrete-time LIF simulator, a spiking associative
//! memory for (position, state) pairs, a coincidence-detection decision circuit,
//! a grid world and the navigator that ties them together.

pub mod grid;
pub mod memory;
pub mod nav;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod ppc;
pub mod scalar;
pub mod snn;

pub use scalar::Scalar;

pub type Network = snn::Network<f64>;
pub type MemoryCircuit = memory::MemoryCircuit<f64>;
pub type PpcCircuit = ppc::PpcCircuit<f64>;
pub type Navigator = nav::Navigator<f64>;
