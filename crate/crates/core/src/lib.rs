//! Discrete-event simulator for concurrent multipath SCTP transfers with
//! pluggable coupled congestion control.

pub mod config;
pub mod congestion;
pub mod engine;
pub mod harness;
pub mod netsim;
pub mod transport;

pub use config::{Config, ConfigError, Template};
pub use congestion::Algo;
