//! Config-driven driver for fragile points fracture runs.
//!
//! A run reads a TOML config, loads the mesh, runs one analysis kind and
//! writes CSV and VTK outputs plus `manifest.json` into an output
//! directory. See the README for the config schema.

pub mod config;
pub mod run;

use std::path::Path;

/// Run failure with a machine-readable category.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("{0}")]
    Core(#[from] fpm_core::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Mesh(_) => "mesh",
            CliError::Core(e) => e.category(),
            CliError::Context { source, .. } => source.category(),
        }
    }

    /// Process exit status for this category.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "mesh" => 3,
            "solver" => 4,
            _ => 5,
        }
    }

    pub fn context(self, context: String) -> Self {
        CliError::Context {
            context,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Core(fpm_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}
