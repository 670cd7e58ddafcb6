//! Annotation service and command line for the pose-lifting toolkit.
//!
//! - [`store`]: task dispensing, label intake, gold feedback, statistics
//!   and the append-only annotation log.
//! - [`api`]: the HTTP/JSON routes over the store.
//! - [`cli`]: the `fbipose` subcommands.
//! - [`config`]: TOML configuration.

pub mod api;
pub mod cli;
pub mod config;
pub mod store;
