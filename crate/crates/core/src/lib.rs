//! Gamified fallback authentication.
//!
//! Players are taught a system-generated avatar profile through a
//! four-pictures-one-word game. The same profile later answers their
//! password-reset security questions. The crate holds the game rules, the
//! rehearsal scheduler, the event-sourced player state, the reset flow with
//! its guessing-probability accounting, and a simulation lab.

pub mod attack;
pub mod avatar;
pub mod challenge;
pub mod config;
pub mod engagement;
pub mod events;
pub mod fallback;
pub mod memory;
pub mod normalize;
pub mod num;
pub mod progression;
pub mod rng;
pub mod scheduler;
pub mod simulation;
pub mod state;
pub mod time;

pub use avatar::{generate_profile, AvatarProfile, AvatarSchema, FieldSchema};
pub use challenge::{check_answer, Challenge, ChallengeBank, ChallengeConfig, ChallengeKind, Verdict};
pub use config::GameConfig;
pub use events::{apply_event, replay, Event, EventRecord};
pub use fallback::{AuthOutcome, AuthPolicy};
pub use progression::{Stage, ProgressionConfig};
pub use scheduler::{SchedulerConfig, SessionPlan};
pub use simulation::SessionPolicy;
pub use state::PlayerState;
pub use time::Timestamp;

/// Forgetting-model parameters in double precision.
pub type MemoryParams = memory::MemoryParams<f64>;
pub type FieldMemory = memory::FieldMemory<f64>;
pub type MemoryState = memory::MemoryState<f64>;
pub type SimOutcome = simulation::SimOutcome<f64>;
/// Exact guessing probabilities.
pub type ExactProbability = num_rational::BigRational;
