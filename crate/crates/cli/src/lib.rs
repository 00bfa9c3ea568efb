//! Config-driven runner for the bivirial experiments: parsing, job
//! orchestration, refinement sweeps and result persistence.

pub mod config;
pub mod kinds;
pub mod output;
pub mod runner;
pub mod sweep;

/// Every verdict PASS or DIAGNOSTIC.
pub const EXIT_OK: u8 = 0;
/// A verdict failed, or the run errored for a non-numerical reason.
pub const EXIT_FAIL: u8 = 1;
/// The command line or the config is invalid.
pub const EXIT_USAGE: u8 = 2;
/// The evolution produced a non-finite state; a partial report was written.
pub const EXIT_BLOW_UP: u8 = 3;
