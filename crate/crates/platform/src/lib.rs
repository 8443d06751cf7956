//! Persistence, HTTP service and client for the avabond game.

pub mod api;
pub mod audit;
pub mod client;
pub mod clock;
pub mod dto;
pub mod log;
pub mod service;
pub mod snapshot;

pub use clock::{Clock, ManualClock, SystemClock};
pub use service::{PlatformConfig, Service, ServiceOptions};
