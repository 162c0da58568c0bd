//! Library half of the `ebchan` command line tool: channel documents,
//! analysis reports, trajectories and batch verification.

pub mod analyze;
pub mod document;
pub mod error;
pub mod format;
pub mod iterate;
pub mod verify;
