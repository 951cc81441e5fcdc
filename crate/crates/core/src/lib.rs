//! Simulator and impossibility forge for asynchronous approximate Byzantine
//! consensus under the local broadcast model.
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the command
//! line live in the `lbforge` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conditions;
pub mod forge;
pub mod gadget;
pub mod graph;
pub mod protocols;
pub mod rng;
pub mod sim;
