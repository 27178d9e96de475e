//! Chat service and benchmark CLI around `mpagent-core`.
//!
//! Sessions are served over HTTP with agent events streamed as server-sent
//! events; see [`server::router`]. Configuration is TOML ([`config::Config`]).

pub mod bench;
pub mod cli;
pub mod config;
pub mod runtime;
pub mod server;
pub mod store;
pub mod transport;
