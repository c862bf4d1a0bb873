//! File formats, configuration and streaming drivers for the `cscime`
//! command-line tool. The algorithms live in `cscime-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod resources;

pub use config::Config;
pub use error::{Error, Result};
