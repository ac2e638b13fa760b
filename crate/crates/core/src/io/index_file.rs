//! On-disk index format.
//!
//! All integers little-endian:
//!
//! ```text
//! magic      4 bytes  "SBWT"
//! version    u32
//! sigma      u32
//! page_size  u64
//! spacing    u64
//! n          u64      total symbols
//! m          u64      total strings (terminators)
//! pages      u64      page count
//! then per page:
//!   len      u64      symbols in the page
//!   data     ⌈len/2⌉ bytes, two 4-bit codes per byte, low nibble first
//! checksum   u64      XXH3-64 over every page record (len + data)
//! ```
//!
//! Occurrence counters are not stored; they are rebuilt and audited on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use xxhash_rust::xxh3::Xxh3;

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{Error, Result};
use crate::paged_bwt::PagedBwt;
use crate::pipeline::IndexState;

pub const MAGIC: [u8; 4] = *b"SBWT";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_index<W: Write>(state: &IndexState, mut out: W) -> Result<()> {
    let bwt = state.bwt();
    out.write_all(&MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(bwt.sigma() as u32).to_le_bytes())?;
    for v in [
        bwt.page_size() as u64,
        bwt.sample_spacing() as u64,
        bwt.len(),
        bwt.terminators(),
        bwt.page_count() as u64,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }

    let mut hasher = Xxh3::new();
    let mut packed = Vec::new();
    for k in 0..bwt.page_count() {
        let page = bwt.page(k);
        let len = (page.len() as u64).to_le_bytes();
        packed.clear();
        packed.extend(
            page.chunks(2)
                .map(|pair| pair[0] | pair.get(1).map_or(0, |&hi| hi << 4)),
        );
        hasher.update(&len);
        hasher.update(&packed);
        out.write_all(&len)?;
        out.write_all(&packed)?;
    }
    out.write_all(&hasher.digest().to_le_bytes())?;
    out.flush()?;
    Ok(())
}

fn read_exact(input: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated,
        _ => Error::Io(e),
    })
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact(input, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(input, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_index<R: Read>(mut input: R) -> Result<IndexState> {
    let mut magic = [0u8; 4];
    read_exact(&mut input, &mut magic).map_err(|e| match e {
        Error::Truncated => Error::BadMagic,
        e => e,
    })?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = read_u32(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let sigma = read_u32(&mut input)? as usize;
    let page_size = read_u64(&mut input)?;
    let spacing = read_u64(&mut input)?;
    let n = read_u64(&mut input)?;
    let m = read_u64(&mut input)?;
    let page_count = read_u64(&mut input)?;

    // validates the header fields before any page-sized allocation
    let empty = PagedBwt::with_sigma(
        sigma,
        usize::try_from(page_size).map_err(|_| Error::Corrupt("page size too large".into()))?,
        usize::try_from(spacing).map_err(|_| Error::Corrupt("sample spacing too large".into()))?,
    )?;
    let page_size = empty.page_size();
    if page_count > n.max(1) {
        return Err(Error::Corrupt(format!(
            "{page_count} pages for {n} symbols"
        )));
    }

    let mut hasher = Xxh3::new();
    let mut pages = Vec::with_capacity(page_count as usize);
    let mut packed = Vec::new();
    let mut total = 0u64;
    for k in 0..page_count {
        let len_bytes = {
            let mut buf = [0u8; 8];
            read_exact(&mut input, &mut buf)?;
            buf
        };
        let len = u64::from_le_bytes(len_bytes);
        if len > page_size as u64 {
            return Err(Error::Corrupt(format!("page {k} claims {len} symbols")));
        }
        let len = len as usize;
        packed.resize(len.div_ceil(2), 0);
        read_exact(&mut input, &mut packed)?;
        hasher.update(&len_bytes);
        hasher.update(&packed);

        let mut page: Vec<Symbol> = Vec::with_capacity(page_size);
        for &byte in &packed {
            page.push(byte & 0x0f);
            page.push(byte >> 4);
        }
        page.truncate(len);
        total += len as u64;
        pages.push(page);
    }
    let stored = read_u64(&mut input)?;
    if stored != hasher.digest() {
        return Err(Error::ChecksumMismatch);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Corrupt("trailing bytes after checksum".into()));
    }
    if total != n {
        return Err(Error::Corrupt(format!(
            "header says {n} symbols, pages hold {total}"
        )));
    }

    let bwt = PagedBwt::from_pages(sigma, page_size, empty.sample_spacing(), pages)?;
    if bwt.terminators() != m {
        return Err(Error::Corrupt(format!(
            "header says {m} strings, pages hold {} terminators",
            bwt.terminators()
        )));
    }
    Ok(IndexState::from_bwt(bwt))
}

pub fn save_index(state: &IndexState, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_index(state, BufWriter::with_capacity(1 << 20, file))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<IndexState> {
    let file = File::open(path)?;
    read_index(BufReader::with_capacity(1 << 20, file))
}

/// The BWT as ASCII with `$` terminators and one trailing newline.
pub fn write_bwt_text<W: Write>(state: &IndexState, alphabet: &Alphabet, mut out: W) -> Result<()> {
    let bwt = state.bwt();
    for k in 0..bwt.page_count() {
        out.write_all(&alphabet.decode(bwt.page(k))?)?;
    }
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn save_bwt_text(
    state: &IndexState,
    alphabet: &Alphabet,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = File::create(path)?;
    write_bwt_text(state, alphabet, BufWriter::new(file))
}
