//! Synthetic crowds for exercising the consensus protocol.
//!
//! Annotators emit labels from per-truth confusion kernels and are scheduled
//! by weighted round-robin; everything is reproducible from a single seed.
//! Transcripts are ordinary event logs, so they can be replayed or exported
//! with the core tooling.

mod kernel;
mod pool;
mod run;
mod summary;

pub use kernel::ConfusionKernel;
pub use pool::{annotation_pool, random_truth};
pub use run::{run_simulation, AnnotatorSpec, SimConfig, Transcript, GOLD_EXPERT};
pub use summary::{summarize, Summary};

use fstlab_core::ProtocolError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
