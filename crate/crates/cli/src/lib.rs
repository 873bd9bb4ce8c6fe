//! Batch front door: JSON-configured commands over the `cdft` library that
//! write CSV/JSON artifacts plus a manifest.

pub mod config;
pub mod families;
pub mod run;

pub use config::{Command, RunConfig};
pub use families::{generate_scalar, generate_vector, FieldSpec};
pub use run::{run, run_config, Invocation, RunManifest};
