//! Suffix sorting of one block.
//!
//! An MSD radix sort whose digits are machine words: each pass packs the next
//! `K` symbols of every still-unsorted suffix into a 64-bit key, orders each
//! group of suffixes sharing a prefix by that key, and splits it into runs of
//! equal keys. Runs of one suffix are final and leave the working set, as do
//! runs whose key contains a terminator: those suffixes are equal up to and
//! including their terminators and order by string index, which within a
//! block is the same as text position. Everything else becomes a group for
//! the next pass, `K` symbols deeper.

use rayon::prelude::*;

use crate::alphabet::{Symbol, TERMINATOR};
use crate::block::ReadBlock;
use crate::error::{Error, Result};

/// Groups at least this large compute keys and sort in parallel.
const PARALLEL_GROUP: usize = 1 << 16;
/// Below this size a comparison sort beats the byte-wise radix passes.
const SMALL_GROUP: usize = 64;

/// Suffixes of a block in lexicographic order, as text positions into
/// [`ReadBlock::text`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSuffixArray {
    positions: Vec<u32>,
}

impl BlockSuffixArray {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// `(string ordinal, offset)` of every entry, offset `|P|` being the
    /// terminator suffix.
    pub fn entries(&self, block: &ReadBlock) -> Vec<(usize, usize)> {
        self.positions
            .iter()
            .map(|&p| block.locate(p as usize))
            .collect()
    }
}

/// Per-pass size of the working set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SortStats {
    /// Suffixes still unsorted at the start of each pass; the first entry is
    /// the block size.
    pub active_per_pass: Vec<u64>,
    /// Symbols consumed per pass.
    pub symbols_per_key: usize,
}

impl SortStats {
    pub fn passes(&self) -> usize {
        self.active_per_pass.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct KeyPacker {
    bits: u32,
    per_key: usize,
}

impl KeyPacker {
    fn for_text(text: &[Symbol]) -> Self {
        let max = text.iter().copied().max().unwrap_or(TERMINATOR).max(1);
        let bits = u8::BITS - max.leading_zeros();
        // the low bit flags keys that reached a terminator
        Self {
            bits,
            per_key: (63 / bits) as usize,
        }
    }

    /// Pack `text[start..]` up to and including its terminator. The low bit
    /// is set when the terminator falls inside the key.
    #[inline]
    fn key(&self, text: &[Symbol], start: usize) -> u64 {
        let mut key = 0u64;
        for i in 0..self.per_key {
            let c = text[start + i];
            key = (key << self.bits) | c as u64;
            if c == TERMINATOR {
                key <<= self.bits as usize * (self.per_key - 1 - i);
                return (key << 1) | 1;
            }
        }
        key << 1
    }
}

/// Sort all suffixes of `block`.
pub fn construct_sa(block: &ReadBlock) -> Result<BlockSuffixArray> {
    construct_sa_with_stats(block).map(|(sa, _)| sa)
}

pub fn construct_sa_with_stats(block: &ReadBlock) -> Result<(BlockSuffixArray, SortStats)> {
    let text = block.text();
    let n = text.len();
    if n as u64 > u32::MAX as u64 {
        return Err(Error::BlockTooLarge(n as u64));
    }
    let packer = KeyPacker::for_text(text);
    let mut stats = SortStats {
        active_per_pass: Vec::new(),
        symbols_per_key: packer.per_key,
    };
    let mut sa: Vec<u32> = (0..n as u32).collect();
    let mut active: Vec<(usize, usize)> = if n > 1 { vec![(0, n)] } else { Vec::new() };
    let mut depth = 0usize;

    while !active.is_empty() {
        stats
            .active_per_pass
            .push(active.iter().map(|&(_, len)| len as u64).sum());

        let mut groups = Vec::with_capacity(active.len());
        let mut rest: &mut [u32] = &mut sa;
        let mut cursor = 0;
        for &(start, len) in &active {
            let (_, tail) = std::mem::take(&mut rest).split_at_mut(start - cursor);
            let (group, tail) = tail.split_at_mut(len);
            groups.push((start, group));
            rest = tail;
            cursor = start + len;
        }

        let next: Vec<Vec<(usize, usize)>> = groups
            .into_par_iter()
            .map(|(start, group)| {
                let mut runs = refine_group(group, depth, text, packer);
                for run in &mut runs {
                    run.0 += start;
                }
                runs
            })
            .collect();
        active = next.into_iter().flatten().collect();
        depth += packer.per_key;
    }

    Ok((BlockSuffixArray { positions: sa }, stats))
}

/// Order `group` (suffixes sharing their first `depth` symbols) by the next
/// key and return the runs that still need sorting, relative to `group`.
fn refine_group(
    group: &mut [u32],
    depth: usize,
    text: &[Symbol],
    packer: KeyPacker,
) -> Vec<(usize, usize)> {
    let mut keyed: Vec<(u64, u32)> = if group.len() >= PARALLEL_GROUP {
        group
            .par_iter()
            .map(|&p| (packer.key(text, p as usize + depth), p))
            .collect()
    } else {
        group
            .iter()
            .map(|&p| (packer.key(text, p as usize + depth), p))
            .collect()
    };

    if keyed.len() >= PARALLEL_GROUP {
        keyed.par_sort_unstable_by_key(|&(k, _)| k);
    } else if keyed.len() > SMALL_GROUP {
        radix_sort_by_key(&mut keyed);
    } else {
        keyed.sort_unstable_by_key(|&(k, _)| k);
    }

    for (slot, &(_, p)) in group.iter_mut().zip(&keyed) {
        *slot = p;
    }

    let mut unsorted = Vec::new();
    let mut run_start = 0;
    while run_start < keyed.len() {
        let key = keyed[run_start].0;
        let run_end = run_start
            + keyed[run_start..]
                .iter()
                .take_while(|&&(k, _)| k == key)
                .count();
        let len = run_end - run_start;
        if len > 1 {
            if key & 1 == 1 {
                // equal through the terminator: lower string index first
                group[run_start..run_end].sort_unstable();
            } else {
                unsorted.push((run_start, len));
            }
        }
        run_start = run_end;
    }
    unsorted
}

/// Stable LSD radix sort on the key, skipping bytes that are constant
/// across the slice.
fn radix_sort_by_key(items: &mut Vec<(u64, u32)>) {
    let first = items[0].0;
    let varying = items.iter().fold(0u64, |acc, &(k, _)| acc | (k ^ first));
    let mut scratch = vec![(0u64, 0u32); items.len()];
    for byte in 0..8 {
        let shift = byte * 8;
        if (varying >> shift) & 0xff == 0 {
            continue;
        }
        let mut counts = [0usize; 256];
        for &(k, _) in items.iter() {
            counts[((k >> shift) & 0xff) as usize] += 1;
        }
        let mut total = 0;
        for c in counts.iter_mut() {
            let n = *c;
            *c = total;
            total += n;
        }
        for &item in items.iter() {
            let d = ((item.0 >> shift) & 0xff) as usize;
            scratch[counts[d]] = item;
            counts[d] += 1;
        }
        std::mem::swap(items, &mut scratch);
    }
}

/// Block-local BWT: the symbol preceding each sorted suffix, the terminator
/// for suffixes starting a string.
pub fn extract_bwt(block: &ReadBlock, sa: &BlockSuffixArray) -> Vec<Symbol> {
    let text = block.text();
    sa.positions
        .par_iter()
        .map(|&p| match p {
            0 => TERMINATOR,
            p => text[p as usize - 1],
        })
        .collect()
}
