//! Incremental construction of the Burrows-Wheeler transform and FM-index of
//! large string sets.
//!
//! Strings are indexed in blocks. Each block is suffix sorted on its own,
//! its suffixes are ranked against the BWT built so far with backward
//! steps, and the block's BWT symbols are inserted into a paged, rank-aware
//! sequence at their final positions. Because every string carries its own
//! terminator (ordered by string index, all below the real symbols), adding
//! strings never disturbs the symbols already placed, so an index can be
//! extended at any time.
//!
//! ```
//! use setbwt::{build, Alphabet, BuildConfig, Layout};
//!
//! let dna = Alphabet::dna();
//! let reads = setbwt::io::encode_reads(["AC", "G"], &dna, Default::default());
//! let (index, _) = build(reads, Layout::default(), &BuildConfig::default()).unwrap();
//! assert_eq!(dna.decode(&index.extract_all()).unwrap(), b"CG$A$");
//! assert_eq!(index.count(&dna.encode(b"A", Default::default()).unwrap()).unwrap(), 1);
//! ```

pub mod alphabet;
pub mod block;
pub mod error;
pub mod io;
pub mod oracle;
pub mod paged_bwt;
pub mod pipeline;
pub mod ranker;
pub mod suffix_sort;

pub use alphabet::{Alphabet, EncodePolicy, Symbol, TERMINATOR};
pub use block::{partition_blocks, BlockBuilder, ReadBlock};
pub use error::{Error, Result};
pub use paged_bwt::PagedBwt;
pub use pipeline::{build, fm_count, BuildConfig, BuildReport, IndexState, Layout, SortedBlock};
