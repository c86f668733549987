//! Monte-Carlo harness around `nomafl-core`: scenario files, seeded
//! instance sampling, parameter sweeps with CSV output, SVG charts and the
//! reference-value generators.

pub mod config;
pub mod error;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod sampling;
pub mod sweep;

pub use config::{ScenarioConfig, SweepParam};
pub use error::{HarnessError, Result};
pub use sampling::sample_instance;
pub use sweep::{run_sweep, run_sweep_detailed, ResultRow};
