//! HTTP service, run directories and batch commands for the schema designer.

pub mod api;
pub mod rundir;
pub mod session;

pub use api::router;
pub use rundir::{learn_to_dir, state_of, train_into, LoadedRun, RunDirError, RunWriter};
pub use session::{ApiError, Phase, Service, Status, Subscription};
