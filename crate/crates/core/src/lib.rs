//! Localization error bounds and power allocation for wireless and radar
//! localization networks.
//!
//! The crate computes squared position error bounds (SPEB, the trace of the
//! inverse equivalent Fisher information matrix) for range-based network
//! localization, and solves power allocation problems over those bounds:
//! minimum total power under per-agent accuracy requirements, min-max
//! accuracy under a power budget, allocation with prior position knowledge,
//! and robust allocation under bounded position/channel uncertainty.
//!
//! All optimization problems are expressed as second-order cone programs and
//! solved by the embedded dense interior-point solver in [`conic`]. The
//! [`robust`] module carries the worst-case SPEB oracle and the finite
//! relaxations that sandwich it; [`simbench`] provides seeded Monte-Carlo
//! sweeps with CSV export.

pub mod allocate;
pub mod config;
pub mod conic;
pub mod fisher;
pub mod net;
pub mod robust;
pub mod simbench;

pub use conic::{ConeProgram, Solution, SolveStatus};
pub use fisher::{speb, Efim};
pub use net::{PowerAllocation, RadarNetwork, WirelessNetwork};
