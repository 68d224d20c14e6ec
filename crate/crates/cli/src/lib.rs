//! The `pomg` command-line tool.
//!
//! Every subcommand reads its inputs, calls into `pomg-core`, and writes its
//! artifacts plus a `manifest.json` (inputs, arguments, seed and SHA-256 of
//! every output) under `--out`.

pub mod args;
mod artifacts;
mod commands;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use thiserror::Error;

pub use artifacts::sha256_hex;

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const CONVERGENCE: i32 = 3;
    pub const RUNTIME: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pomg_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// A failure during a long run, after partial results were saved.
    #[error("{message}")]
    Runtime { message: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use pomg_core::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(e) => match e {
                E::Parse(_)
                | E::Validation(_)
                | E::NotFactorizable
                | E::InvalidParameter(_)
                | E::LengthMismatch { .. } => exit::VALIDATION,
                E::NonConvergence { .. } => exit::CONVERGENCE,
                _ => exit::RUNTIME,
            },
            CliError::Io { .. } | CliError::Runtime { .. } | CliError::Csv(_) => exit::RUNTIME,
        }
    }
}

/// Parses `argv`, runs the command and returns the exit status. Messages go
/// to stdout (results) and stderr (errors).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return exit::USAGE;
        }
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match commands::dispatch(cli.command) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
