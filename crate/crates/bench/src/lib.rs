//! File formats, the HTTP scorer client and server, parallel batch runs, reports and
//! the `lota` command line for the planning benchmark.

pub mod cli;
pub mod conformance;
pub mod dataset;
pub mod remote;
pub mod report;
pub mod runner;
pub mod server;

pub use report::BenchmarkReport;
pub use runner::{run_benchmark, Resources, RunConfig, RunError, ScorerSpec};
