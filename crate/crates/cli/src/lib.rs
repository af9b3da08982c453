//! Front end for `polya-core`: scenario config files, CSV and JSON output,
//! a rayon-backed ensemble executor and the `polya` command.

pub mod app;
pub mod config;
pub mod output;
pub mod parallel;

pub use config::{parse_config, render_config, ConfigError};
pub use parallel::RayonExecutor;
