//! Desk-scale neuromorphic theremin stack: event-camera perception,
//! sigma-delta forwarding, dynamic neural fields, address-event transport,
//! a show controller and theremin control, wired together by a
//! virtual-clock harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod event;
pub mod sigma_delta;
pub mod dnf;
pub mod pgm;
pub mod tracker;
pub mod aer;
pub mod theremin;
pub mod orchestrator;
pub mod harness;
