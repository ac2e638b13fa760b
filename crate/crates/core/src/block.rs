//! Batches of whole strings holding roughly `M` suffixes each.

use crate::alphabet::{Symbol, TERMINATOR};

/// A contiguous run of input strings.
///
/// Strings are stored back to back, each followed by one terminator code, so
/// position `p` of [`ReadBlock::text`] is also the slot of the suffix that
/// starts there.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReadBlock {
    text: Vec<Symbol>,
    starts: Vec<usize>,
    base_index: u64,
}

impl ReadBlock {
    pub fn new(base_index: u64) -> Self {
        Self {
            text: Vec::new(),
            starts: vec![0],
            base_index,
        }
    }

    /// Build a block from encoded strings. Panics if a string contains the
    /// terminator code.
    pub fn from_strings<S: AsRef<[Symbol]>>(base_index: u64, strings: &[S]) -> Self {
        let mut block = Self::new(base_index);
        for s in strings {
            block.push(s.as_ref());
        }
        block
    }

    pub fn push(&mut self, string: &[Symbol]) {
        assert!(
            !string.contains(&TERMINATOR),
            "encoded strings must not contain the terminator code"
        );
        self.text.extend_from_slice(string);
        self.text.push(TERMINATOR);
        self.starts.push(self.text.len());
    }

    /// Global index of the first string.
    pub fn base_index(&self) -> u64 {
        self.base_index
    }

    pub fn num_strings(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.num_strings() == 0
    }

    /// Total characters, terminators excluded.
    pub fn n_chars(&self) -> usize {
        self.text.len() - self.num_strings()
    }

    /// Σ(|P| + 1) over the block's strings.
    pub fn n_suffixes(&self) -> usize {
        self.text.len()
    }

    /// Strings with a terminator after each.
    pub fn text(&self) -> &[Symbol] {
        &self.text
    }

    /// Start of every string in [`ReadBlock::text`], followed by the text length.
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn string(&self, j: usize) -> &[Symbol] {
        &self.text[self.starts[j]..self.starts[j + 1] - 1]
    }

    pub fn strings(&self) -> impl Iterator<Item = &[Symbol]> + '_ {
        self.starts
            .windows(2)
            .map(move |w| &self.text[w[0]..w[1] - 1])
    }

    /// Map a text position to `(string ordinal, offset)`. The offset equals
    /// the string length for the terminator suffix.
    pub fn locate(&self, position: usize) -> (usize, usize) {
        let j = self.starts.partition_point(|&s| s <= position) - 1;
        (j, position - self.starts[j])
    }

    /// Text position of `(string ordinal, offset)`.
    pub fn position(&self, string: usize, offset: usize) -> usize {
        self.starts[string] + offset
    }
}

/// Accumulates strings and hands out a block once it holds at least
/// `target` suffixes.
#[derive(Debug)]
pub struct BlockBuilder {
    target: usize,
    current: ReadBlock,
}

impl BlockBuilder {
    /// `target` must be at least 1; `usize::MAX` never closes a block early.
    pub fn new(target: usize, base_index: u64) -> Self {
        assert!(target >= 1, "block target must be at least one suffix");
        Self {
            target,
            current: ReadBlock::new(base_index),
        }
    }

    pub fn push(&mut self, string: &[Symbol]) -> Option<ReadBlock> {
        self.current.push(string);
        if self.current.n_suffixes() >= self.target {
            let next_base = self.current.base_index + self.current.num_strings() as u64;
            Some(std::mem::replace(
                &mut self.current,
                ReadBlock::new(next_base),
            ))
        } else {
            None
        }
    }

    /// The trailing partial block, if it holds any strings.
    pub fn finish(self) -> Option<ReadBlock> {
        (!self.current.is_empty()).then_some(self.current)
    }
}

/// Iterator adapter returned by [`partition_blocks`].
pub struct Blocks<I> {
    inner: I,
    builder: Option<BlockBuilder>,
}

impl<I, S> Iterator for Blocks<I>
where
    I: Iterator<Item = S>,
    S: AsRef<[Symbol]>,
{
    type Item = ReadBlock;

    fn next(&mut self) -> Option<ReadBlock> {
        let builder = self.builder.as_mut()?;
        for s in self.inner.by_ref() {
            if let Some(block) = builder.push(s.as_ref()) {
                return Some(block);
            }
        }
        self.builder.take().and_then(BlockBuilder::finish)
    }
}

/// Split a string stream into blocks of at least `target` suffixes each
/// (the last block may be smaller). Strings are never split and keep their
/// input order.
pub fn partition_blocks<I, S>(strings: I, target: usize, base_index: u64) -> Blocks<I::IntoIter>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[Symbol]>,
{
    Blocks {
        inner: strings.into_iter(),
        builder: Some(BlockBuilder::new(target, base_index)),
    }
}
