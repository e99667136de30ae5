//! HTTP/JSON session service for interactive caricature control.
//!
//! A session uploads a rest mesh once; the service factorizes the system, solves the
//! `γ_f` exaggeration and from then on answers blends without any linear solve. Localized
//! edits and the error curve are solved on demand and serialized per session.

pub mod api;
pub mod config;
pub mod error;
pub mod session;
pub mod store;
pub mod wire;

pub use api::{router, serve, AppState};
pub use config::ServiceConfig;
pub use error::{ApiError, ApiResult, ErrorBody};
pub use session::{Session, SessionConfig};
