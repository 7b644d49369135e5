//! Scenario configuration, task runners and reports for the `divpair` binary.

pub mod config;
pub mod gallery;
pub mod report;
pub mod run;
pub mod tasks;

pub use config::{ConfigError, ScenarioConfig, Task};
pub use report::{emit_plotdata, PlotError, Report};
pub use run::run_scenario;
