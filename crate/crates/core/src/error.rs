use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid character {:?} (0x{byte:02x}) at position {position}", *byte as char)]
    InvalidCharacter { position: usize, byte: u8 },

    #[error("read #{ordinal}: invalid character {:?} (0x{byte:02x}) at position {position}", *byte as char)]
    InvalidRead {
        ordinal: u64,
        position: usize,
        byte: u8,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("position {position} out of range for sequence of length {len}")]
    PositionOutOfRange { position: u64, len: u64 },

    #[error("insertion positions must be non-decreasing (index {index})")]
    UnsortedPositions { index: usize },

    #[error("batch has {symbols} symbols but {positions} positions")]
    BatchLengthMismatch { symbols: usize, positions: usize },

    #[error("symbol code {0} is not part of the alphabet")]
    InvalidSymbol(u8),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("block starts at string {found}, index holds {expected} strings")]
    BaseIndexMismatch { expected: u64, found: u64 },

    #[error("block of {0} suffixes exceeds the 32-bit suffix addressing limit")]
    BlockTooLarge(u64),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("not an index file (bad magic)")]
    BadMagic,

    #[error("unsupported index format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("index checksum mismatch")]
    ChecksumMismatch,

    #[error("index file is truncated")]
    Truncated,

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("structural audit failed: {0}")]
    Audit(String),

    #[error("pipeline worker failed: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
