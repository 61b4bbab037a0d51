//! Review-session HTTP service and the `ontoclean` command line.

pub mod api;
pub mod cli;
pub mod config;
pub mod session;
