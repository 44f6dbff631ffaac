//! Command-line driver for the `adsignal` solvers: instance files, report
//! output, seeded generators and benchmark suites.

pub mod bench;
pub mod error;
pub mod gen;
pub mod instance_file;
pub mod report;
pub mod solve;

pub use error::{CliError, CliResult};
pub use instance_file::InstanceFile;
pub use report::Report;
