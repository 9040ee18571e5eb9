//! Core of the skin-type annotation platform.
//!
//! - [`label`]: the seven-way label alphabet.
//! - [`event`]: append-only JSON Lines event log.
//! - [`state`]: platform state rebuilt by replaying events.
//! - [`platform`]: command handling for the dynamic consensus protocol.
//! - [`profile`]: annotator qualification windows.
//! - [`consensus`]: tallies and the settlement rule.
//! - [`review`]: stratified review-set selection.
//! - [`routing`]: task assignment.

pub mod config;
pub mod consensus;
pub mod event;
pub mod export;
pub mod label;
pub mod model;
pub mod platform;
pub mod profile;
pub mod review;
pub mod routing;
pub mod state;

pub use config::ProtocolConfig;
pub use consensus::{check_consensus, AgreementError, ConsensusDecision, Tally};
pub use event::{Event, EventLog, EventPayload, EventStore, JsonlStore, LogError, MemoryStore};
pub use label::FstLabel;
pub use model::{Annotation, FailureReport, FlagKind, ImageRecord, Principal, Role};
pub use platform::{IngestSummary, Platform, ProtocolError, ReviewItem, ReviewReason, SubmissionOutcome};
pub use profile::{AnnotatorProfile, QualificationState, Score};
pub use state::{ConsensusState, ImageStatus, PlatformState, ReplayError};
