//! Joint synthetic-data, time, power, decoding-order and CPU-frequency
//! allocation for wireless federated learning where devices receive
//! generated training samples and exchange models over NOMA links.
//!
//! The solver alternates between two blocks:
//!
//! * synthetic data and time allocation, a small convex program solved with
//!   a log-barrier interior-point method ([`dgen`]) plus closed-form timing
//!   ([`schedule`]);
//! * downlink and uplink powers and the SIC decoding order, each a
//!   max-min bisection over a recursive closed form ([`downlink`],
//!   [`uplink`]).
//!
//! [`orchestrator`] runs the alternation and the FDMA/TDMA and
//! no-synthetic-data baselines.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod access;
mod bisection;
pub mod dgen;
pub mod downlink;
pub mod error;
pub mod model;
pub mod orchestrator;
pub mod schedule;
pub mod uplink;

#[cfg(test)]
mod fixtures;

pub use access::{Access, DownloadCoupling};
pub use error::{Error, Result};
pub use model::{
    canonicalize, check_feasible, check_feasible_with, Allocation, CanonicalInstance, ChannelState,
    Constraint, DeviceProfile, Instance, SchemeId, SicOrder, SolveReport, SystemParams, Violation,
};
pub use orchestrator::{bcd_solve, run_scheme, run_scheme_with, BcdOptions};
