//! Skin-type annotation service: HTTP API and command-line tools around the
//! consensus platform, the ITA annotator and the reliability reports.

pub mod app;
pub mod cli;
pub mod config;
pub mod error;
pub mod labels;
pub mod manifest;
pub mod reports;

pub use app::{open_platform, router, AppState, SharedState};
pub use config::ServiceConfig;
pub use error::ApiError;
