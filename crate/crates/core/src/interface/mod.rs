//! CSV ingestion, the shared request layer, the CLI and the HTTP service.

pub mod api;
pub mod cli;
pub mod input;
pub mod server;
