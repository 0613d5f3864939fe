//! Master-agent orchestration over a pool of modality-specialist model
//! backends.
//!
//! A session runs perception once, then up to `max_loops` rounds of
//! reasoning (plan sub-questions per agent), execution (dispatch them), and
//! decision (synthesize, judge finality, suggest refinements). The
//! [`eval`] module drives sessions over multiple-choice datasets and reports
//! accuracy, exit rate per round and latency.

pub mod eval;
pub mod extract;
pub mod orchestrator;
pub mod par;
pub mod pool;
pub mod prompting;
pub mod schema;
pub mod trace;
pub mod types;

pub use orchestrator::{Orchestrator, SessionError, StageError, StageErrorCause};
pub use pool::{BackendConfig, MockBackend, MockRule, MockScript, ModelPool, PoolError};
pub use types::*;
