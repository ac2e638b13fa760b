//! Read ingestion, index files and BWT text output.

mod index_file;
mod reads;

pub use index_file::{
    load_index, read_index, save_bwt_text, save_index, write_bwt_text, write_index, FORMAT_VERSION,
    MAGIC,
};
pub use reads::{encode_reads, read_inputs, InputFormat, ReadStream, RecordReader};
