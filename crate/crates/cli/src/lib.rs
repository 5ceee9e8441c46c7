//! File formats, configuration handling and sweep execution for the
//! simulator.

pub mod config;
pub mod output;
pub mod sweep;
pub mod units;

pub use config::{ConfigError, ConfigFile};
