//! Worst-case delay bounds for weighted round robin schedulers.
//!
//! The crate models arrival and service guarantees as exact piecewise
//! affine curves ([`curve`]), builds the leftover service curves of WRR and
//! interleaved WRR for a flow of interest ([`bounds`]), optimizes the set of
//! cross-flows that are charged by their round quota instead of their
//! arrival curve ([`search`]) and checks every bound against a packet-level
//! simulation of both schedulers ([`sim`]).

pub mod bounds;
pub mod curve;
pub mod experiments;
pub mod num;
pub mod scenario;
pub mod scenario_file;
pub mod search;
pub mod sim;
