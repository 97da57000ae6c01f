//! Discrete-event engine: simulation clock, ordered event queue, FIFO
//! compute stations and serialized link channels.

mod channel;
mod queue;
mod station;
mod time;

pub use channel::LinkChannel;
pub use queue::{Event, EventQueue};
pub use station::{service_time, QueueStation, QueuedJob, ServiceMode, ServiceStart};
pub use time::SimTime;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("event at t={event} scheduled in the past (clock t={clock})")]
    PastEvent { event: f64, clock: f64 },
    #[error("run_until target t={target} is before the clock t={clock}")]
    PastHorizon { target: f64, clock: f64 },
}
