//! Crate-wide error type.
//!
//! Errors are grouped so the CLI can map them onto its exit-code contract:
//! configuration/domain problems (exit 2), I/O failures (exit 3), and
//! corruption/verification failures (exit 4).

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Checkpoint sizing would overflow a 64-bit byte count.
    #[error("checkpoint size overflows u64: {param_count} params x {bytes_per_param} B/param")]
    SizeOverflow {
        param_count: u64,
        bytes_per_param: u64,
    },

    /// A numeric input is outside the model's domain (e.g. zero denominator).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (alignment, buffer capacity, topology, flags).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed tensor record or checkpoint stream.
    #[error("checkpoint format error: {0}")]
    Format(String),

    /// Malformed or inconsistent shard manifest.
    #[error("manifest error: {0}")]
    Manifest(String),

    /// Shard bytes do not match the checksum recorded in the manifest.
    #[error(
        "shard {shard_index} (writer {writer_id}) corrupt: \
         expected crc32 {expected:#010x}, got {actual:#010x}"
    )]
    ShardCorrupt {
        shard_index: usize,
        writer_id: u32,
        expected: u32,
        actual: u32,
    },

    /// A shard file named by the manifest could not be read.
    #[error("shard {shard_index} unreadable at {path}: {source}")]
    ShardUnreadable {
        shard_index: usize,
        path: PathBuf,
        source: io::Error,
    },

    /// Partition planning failed (bad writer subset, rank out of topology).
    #[error("partition plan error: {0}")]
    Plan(String),

    /// A storage write failed; `offset` is the stream offset being flushed.
    #[error("write failed at offset {offset} in {path}: {source}")]
    WriteFailed {
        path: PathBuf,
        offset: u64,
        source: io::Error,
    },

    /// General I/O failure with the path involved.
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    /// Loaded data does not match what was expected.
    #[error("verification failed: {0}")]
    Verify(String),

    /// The live training loop aborted because a checkpoint could not be written.
    #[error("live run aborted at iteration {iter}: {source}")]
    LiveRun {
        iter: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code for the CLI: 2 usage, 3 I/O, 4 verification/corruption.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::SizeOverflow { .. }
            | Error::Domain(_)
            | Error::Config(_)
            | Error::Plan(_) => 2,
            Error::Io { .. } | Error::WriteFailed { .. } | Error::ShardUnreadable { .. } => 3,
            Error::ShardCorrupt { .. }
            | Error::Verify(_)
            | Error::Format(_)
            | Error::Manifest(_) => 4,
            Error::LiveRun { source, .. } => source.exit_code(),
        }
    }
}
