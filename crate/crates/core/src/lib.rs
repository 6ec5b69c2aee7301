//! Toolkit for building reactive Braitenberg vehicles around small spiking
//! circuits.
//!
//! The pieces mirror a four-stage workflow: describe the encounters a vehicle
//! must react to ([`perception`]), realize them as deterministic spiking
//! circuits ([`snn`], [`circuits`]), bind circuit outputs to a wheel-command
//! law ([`actuation`]), and compile the whole description into a runnable
//! vehicle ([`pipeline`]) that can be exercised in a planar simulation
//! ([`sim`]) and checked against golden data ([`analysis`]).

pub mod actuation;
pub mod analysis;
pub mod circuits;
pub mod golden;
pub mod parse;
pub mod perception;
pub mod pipeline;
pub mod sim;
pub mod snn;
