//! Parallel execution, configuration and file output for `foresight-core`,
//! plus the experiment drivers behind the `foresight` command.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod parallel;
pub mod validate;

pub use error::{exit_code, AppError};
pub use parallel::Parallel;
