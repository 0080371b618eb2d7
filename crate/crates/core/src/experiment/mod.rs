//! Configuration-driven experiments: parse a JSON config, fan rows out to a
//! worker pool, and write CSV/JSON tables plus a manifest.

mod config;
mod output;
mod run;

pub use config::*;
pub use output::*;
pub use run::*;
