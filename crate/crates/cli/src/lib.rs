//! Scenario files, reports and their execution.

pub mod runner;
pub mod scenario;
pub mod serial;
