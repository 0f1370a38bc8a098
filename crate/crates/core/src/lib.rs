//! Discrete-event model of group-based fast handover for 6LoWPAN body
//! sensor networks, with the reactive PMIPv6 baseline and a closed-form
//! model of handover latency, packet loss and signaling cost.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytics;
pub mod handover_decision;
pub mod protocol;
pub mod scenario;
pub mod sim_core;
