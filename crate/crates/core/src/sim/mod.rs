//! Packet-level simulation of WRR and IWRR.

pub mod engine;
pub mod trace;
pub mod validate;

use thiserror::Error;

use crate::search::{Scheduler, SearchError};

pub use engine::{run, run_iwrr, run_wrr, Discipline, Event, EventKind, PacketRecord, SimResult};
pub use trace::{greedy_source, greedy_trace, is_conformant, saturating_source, Packet, PacketTrace, SizePolicy};
pub use validate::{
    default_horizon, simulate_and_validate, sound_bounds, validate_bounds, BoundCheck, CheckStatus,
    ValidationReport,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("simulation needs a constant-rate server")]
    UnsupportedServer,
    #[error("flow {flow}: {msg}")]
    Trace { flow: usize, msg: String },
    #[error(
        "flow {flow}: packet arriving at {arrival} waited {observed} s, above the {scheduler} bound {bound} s\n{events}"
    )]
    BoundViolated {
        flow: usize,
        scheduler: Scheduler,
        bound: String,
        observed: String,
        arrival: String,
        events: String,
    },
    #[error(transparent)]
    Search(#[from] SearchError),
}
