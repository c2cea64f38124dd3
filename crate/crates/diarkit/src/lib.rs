//! File formats, the process backend bridge, the on-disk prediction cache and
//! the command-line front end built on `diarkit-core`.

pub mod cache;
pub mod cli;
pub mod files;
pub mod formats;
pub mod mock;
pub mod process;
pub mod report;
pub mod run;
pub mod specfile;

pub use diarkit_core as core;
