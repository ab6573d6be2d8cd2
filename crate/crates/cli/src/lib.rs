//! Command-line pipeline over the `eigencorpus` library: subcommands for each
//! analysis stage plus a one-shot `run`, all writing into an output directory
//! with a `manifest.json` of content hashes.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;

pub use artifacts::{ArtifactWriter, ManifestEntry, MANIFEST_NAME};
pub use config::{PartialConfig, RunConfig};
pub use error::{exit_code, UsageError};
pub use pipeline::{run_all, InputSource, OutputOptions};
