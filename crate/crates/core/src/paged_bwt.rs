//! The external BWT as a flat array of pages.
//!
//! A single-level B+ tree: pages hold between `⌈p/2⌉` and `p` symbols, and a
//! flat offset directory `O` records the global position of each page's first
//! symbol so a batch of insertion points can be resolved with independent
//! binary searches. For ranking, every page carries 64-bit occurrence counts
//! of each real symbol over all preceding pages, and 32-bit in-page counts
//! sampled every `spacing` symbols. Terminator counts are never stored; they
//! are the prefix length minus the real-symbol counts.

use rayon::prelude::*;

use crate::alphabet::{Symbol, MAX_SIGMA, TERMINATOR};
use crate::error::{Error, Result};

pub const DEFAULT_PAGE_SIZE: usize = 8192;
pub const DEFAULT_SAMPLE_SPACING: usize = 128;
pub const DEFAULT_SIGMA: usize = 5;

/// Batches smaller than this locate their pages sequentially.
const PARALLEL_LOCATE: usize = 4096;

#[derive(Debug, Clone)]
struct Page {
    symbols: Vec<Symbol>,
    /// In-page occurrences of each real symbol.
    counts: Box<[u32]>,
    /// Row `t - 1` holds counts over the first `t * spacing` symbols.
    samples: Vec<u32>,
}

impl Page {
    fn build(symbols: Vec<Symbol>, sigma: usize, spacing: usize) -> Self {
        let mut counts = vec![0u32; sigma].into_boxed_slice();
        let mut samples = Vec::with_capacity((symbols.len() / spacing) * sigma);
        for chunk in symbols.chunks(spacing) {
            for &s in chunk {
                if s != TERMINATOR {
                    counts[s as usize - 1] += 1;
                }
            }
            if chunk.len() == spacing {
                samples.extend_from_slice(&counts);
            }
        }
        Self {
            symbols,
            counts,
            samples,
        }
    }

    fn len(&self) -> usize {
        self.symbols.len()
    }

    #[inline]
    fn rank(&self, c: Symbol, local: usize, sigma: usize, spacing: usize) -> u64 {
        let row = local / spacing;
        let base = match row {
            0 => 0,
            r => self.samples[(r - 1) * sigma + c as usize - 1] as u64,
        };
        let tail = &self.symbols[row * spacing..local];
        base + tail.iter().filter(|&&s| s == c).count() as u64
    }
}

/// Dynamic symbol sequence supporting batched insertion and rank.
#[derive(Debug, Clone)]
pub struct PagedBwt {
    sigma: usize,
    page_size: usize,
    spacing: usize,
    pages: Vec<Page>,
    offsets: Vec<u64>,
    /// `sigma` counters per page, over all preceding pages.
    prefix: Vec<u64>,
    len: u64,
    terminators: u64,
}

impl PagedBwt {
    /// Empty store over the default DNA alphabet.
    pub fn new(page_size: usize, spacing: usize) -> Result<Self> {
        Self::with_sigma(DEFAULT_SIGMA, page_size, spacing)
    }

    pub fn with_sigma(sigma: usize, page_size: usize, spacing: usize) -> Result<Self> {
        if spacing == 0 {
            return Err(Error::InvalidConfig(
                "sample spacing must be at least 1".into(),
            ));
        }
        if page_size < 2 * spacing {
            return Err(Error::InvalidConfig(format!(
                "page size {page_size} must be at least twice the sample spacing {spacing}"
            )));
        }
        if page_size > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "page size {page_size} exceeds the 32-bit in-page counter range"
            )));
        }
        if sigma == 0 || sigma > MAX_SIGMA {
            return Err(Error::InvalidConfig(format!(
                "sigma must be between 1 and {MAX_SIGMA}, got {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            page_size,
            spacing,
            pages: Vec::new(),
            offsets: Vec::new(),
            prefix: Vec::new(),
            len: 0,
            terminators: 0,
        })
    }

    /// Rebuild a store from page contents, e.g. when loading from disk.
    pub fn from_pages(
        sigma: usize,
        page_size: usize,
        spacing: usize,
        pages: Vec<Vec<Symbol>>,
    ) -> Result<Self> {
        let mut bwt = Self::with_sigma(sigma, page_size, spacing)?;
        for (k, page) in pages.iter().enumerate() {
            if page.len() > page_size {
                return Err(Error::Corrupt(format!(
                    "page {k} holds {} symbols, capacity is {page_size}",
                    page.len()
                )));
            }
            if let Some(&s) = page.iter().find(|&&s| s as usize > sigma) {
                return Err(Error::InvalidSymbol(s));
            }
        }
        bwt.pages = pages
            .into_par_iter()
            .map(|symbols| {
                let mut owned = Vec::with_capacity(page_size);
                owned.extend_from_slice(&symbols);
                Page::build(owned, sigma, spacing)
            })
            .collect();
        bwt.terminators = bwt.count_terminators();
        bwt.refresh_directory();
        bwt.audit()?;
        Ok(bwt)
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn sample_spacing(&self) -> usize {
        self.spacing
    }

    /// Total symbols, `n`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Terminator count, which is the number of indexed strings.
    pub fn terminators(&self) -> u64 {
        self.terminators
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn page_fills(&self) -> Vec<usize> {
        self.pages.iter().map(Page::len).collect()
    }

    pub fn page(&self, k: usize) -> &[Symbol] {
        &self.pages[k].symbols
    }

    /// Symbols reserved across all pages.
    pub fn allocated_capacity(&self) -> usize {
        self.pages.iter().map(|p| p.symbols.capacity()).sum()
    }

    /// Occurrences of each code (terminator first) in the whole sequence.
    pub fn symbol_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.sigma + 1];
        counts[0] = self.terminators;
        if let Some(last) = self.pages.len().checked_sub(1) {
            let base = &self.prefix[last * self.sigma..(last + 1) * self.sigma];
            for (c, (&b, &n)) in base.iter().zip(self.pages[last].counts.iter()).enumerate() {
                counts[c + 1] = b + n as u64;
            }
        }
        counts
    }

    fn check_symbol(&self, c: Symbol) -> Result<()> {
        if c as usize > self.sigma {
            return Err(Error::InvalidSymbol(c));
        }
        Ok(())
    }

    /// Occurrences of `c` in the first `i` symbols.
    pub fn rank(&self, c: Symbol, i: u64) -> Result<u64> {
        self.check_symbol(c)?;
        if i > self.len {
            return Err(Error::PositionOutOfRange {
                position: i,
                len: self.len,
            });
        }
        if c == TERMINATOR {
            let real: u64 = (1..=self.sigma as Symbol).map(|s| self.occ(s, i)).sum();
            return Ok(i - real);
        }
        Ok(self.occ(c, i))
    }

    /// [`PagedBwt::rank`] for a real symbol and `i <= n`, without checks.
    #[inline]
    pub(crate) fn occ(&self, c: Symbol, i: u64) -> u64 {
        debug_assert!(c != TERMINATOR && c as usize <= self.sigma && i <= self.len);
        if self.pages.is_empty() {
            return 0;
        }
        let k = self.offsets.partition_point(|&o| o <= i) - 1;
        let local = (i - self.offsets[k]) as usize;
        self.prefix[k * self.sigma + c as usize - 1]
            + self.pages[k].rank(c, local, self.sigma, self.spacing)
    }

    pub fn symbol_at(&self, i: u64) -> Result<Symbol> {
        if i >= self.len {
            return Err(Error::PositionOutOfRange {
                position: i,
                len: self.len,
            });
        }
        let k = self.offsets.partition_point(|&o| o <= i) - 1;
        Ok(self.pages[k].symbols[(i - self.offsets[k]) as usize])
    }

    /// Page receiving an insertion at each position. A position on a page
    /// boundary goes to the page on its left.
    pub fn locate_pages(&self, positions: &[u64]) -> Vec<usize> {
        let find = |&p: &u64| self.offsets.partition_point(|&o| o < p).saturating_sub(1);
        if positions.len() >= PARALLEL_LOCATE {
            positions.par_iter().map(find).collect()
        } else {
            positions.iter().map(find).collect()
        }
    }

    /// Insert `symbols[i]` so that it lands at absolute position
    /// `positions[i] + i`. Positions refer to the sequence before the batch and
    /// must be non-decreasing; equal positions keep batch order.
    pub fn bulk_insert(&mut self, symbols: &[Symbol], positions: &[u64]) -> Result<()> {
        if symbols.len() != positions.len() {
            return Err(Error::BatchLengthMismatch {
                symbols: symbols.len(),
                positions: positions.len(),
            });
        }
        if let Some(index) = positions.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::UnsortedPositions { index: index + 1 });
        }
        match positions.last() {
            None => return Ok(()),
            Some(&last) if last > self.len => {
                return Err(Error::PositionOutOfRange {
                    position: last,
                    len: self.len,
                })
            }
            Some(_) => {}
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize > self.sigma) {
            return Err(Error::InvalidSymbol(s));
        }

        if self.pages.is_empty() {
            self.pages.push(Page::build(
                Vec::with_capacity(self.page_size),
                self.sigma,
                self.spacing,
            ));
            self.refresh_directory();
        }

        let assignment = self.locate_pages(positions);
        let mut jobs = Vec::new();
        let mut lo = 0;
        while lo < assignment.len() {
            let page = assignment[lo];
            let hi = lo + assignment[lo..].iter().take_while(|&&k| k == page).count();
            jobs.push((page, lo, hi));
            lo = hi;
        }

        let rebuilt: Vec<Vec<Page>> = jobs
            .par_iter()
            .map(|&(k, lo, hi)| self.merge_into_page(k, &symbols[lo..hi], &positions[lo..hi]))
            .collect();

        let old = std::mem::take(&mut self.pages);
        let mut pages = Vec::with_capacity(old.len() + rebuilt.iter().map(Vec::len).sum::<usize>());
        let mut replacements = jobs.iter().map(|j| j.0).zip(rebuilt).peekable();
        for (k, page) in old.into_iter().enumerate() {
            match replacements.peek() {
                Some(&(target, _)) if target == k => {
                    let (_, new_pages) = replacements.next().expect("peeked");
                    pages.extend(new_pages);
                }
                _ => pages.push(page),
            }
        }
        self.pages = pages;
        self.terminators += symbols.iter().filter(|&&s| s == TERMINATOR).count() as u64;
        self.refresh_directory();
        Ok(())
    }

    /// Merge a run of insertions into page `k`, splitting the result into
    /// `⌈s/p⌉` near-equal pages when it overflows.
    fn merge_into_page(&self, k: usize, symbols: &[Symbol], positions: &[u64]) -> Vec<Page> {
        let page = &self.pages[k].symbols;
        let base = self.offsets[k];
        let mut merged = Vec::with_capacity(page.len() + symbols.len());
        let mut consumed = 0;
        for (&s, &p) in symbols.iter().zip(positions) {
            let local = (p - base) as usize;
            merged.extend_from_slice(&page[consumed..local]);
            consumed = local;
            merged.push(s);
        }
        merged.extend_from_slice(&page[consumed..]);

        let total = merged.len();
        let parts = total.div_ceil(self.page_size).max(1);
        let (small, extra) = (total / parts, total % parts);
        let mut out = Vec::with_capacity(parts);
        let mut start = 0;
        for part in 0..parts {
            let size = small + usize::from(part < extra);
            let mut buf = Vec::with_capacity(self.page_size);
            buf.extend_from_slice(&merged[start..start + size]);
            out.push(Page::build(buf, self.sigma, self.spacing));
            start += size;
        }
        out
    }

    /// Recompute in-page samples, the offset directory and the prefix
    /// counters from the page contents.
    pub fn rebuild_directory(&mut self) {
        let (sigma, spacing) = (self.sigma, self.spacing);
        self.pages.par_iter_mut().for_each(|page| {
            let symbols = std::mem::take(&mut page.symbols);
            *page = Page::build(symbols, sigma, spacing);
        });
        self.terminators = self.count_terminators();
        self.refresh_directory();
    }

    fn count_terminators(&self) -> u64 {
        self.pages
            .par_iter()
            .map(|p| p.symbols.iter().filter(|&&s| s == TERMINATOR).count() as u64)
            .sum()
    }

    fn refresh_directory(&mut self) {
        self.offsets.clear();
        self.prefix.clear();
        self.offsets.reserve(self.pages.len());
        self.prefix.reserve(self.pages.len() * self.sigma);
        let mut running = vec![0u64; self.sigma];
        let mut position = 0u64;
        for page in &self.pages {
            self.offsets.push(position);
            self.prefix.extend_from_slice(&running);
            for (r, &c) in running.iter_mut().zip(page.counts.iter()) {
                *r += c as u64;
            }
            position += page.len() as u64;
        }
        self.len = position;
    }

    /// Concatenation of all pages.
    pub fn extract_all(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.len as usize);
        for page in &self.pages {
            out.extend_from_slice(&page.symbols);
        }
        out
    }

    /// Check every structural invariant against the page contents.
    pub fn audit(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Audit(msg));
        if self.offsets.len() != self.pages.len()
            || self.prefix.len() != self.pages.len() * self.sigma
        {
            return fail("directory length does not match page count".into());
        }
        let min_fill = self.page_size.div_ceil(2);
        let sole = self.pages.len() == 1;
        let mut position = 0u64;
        let mut running = vec![0u64; self.sigma];
        let mut terminators = 0u64;
        for (k, page) in self.pages.iter().enumerate() {
            let fill = page.len();
            if fill > self.page_size || (!sole && fill < min_fill) {
                return fail(format!(
                    "page {k} fill {fill} outside [{min_fill}, {}]",
                    self.page_size
                ));
            }
            if self.offsets[k] != position {
                return fail(format!(
                    "offset of page {k} is {}, expected {position}",
                    self.offsets[k]
                ));
            }
            if self.prefix[k * self.sigma..(k + 1) * self.sigma] != running[..] {
                return fail(format!("prefix counters of page {k} are stale"));
            }
            let mut counts = vec![0u64; self.sigma];
            for (t, &s) in page.symbols.iter().enumerate() {
                if t > 0 && t % self.spacing == 0 {
                    let row = &page.samples[(t / self.spacing - 1) * self.sigma..][..self.sigma];
                    if row.iter().zip(&counts).any(|(&a, &b)| a as u64 != b) {
                        return fail(format!("sample {} of page {k} is stale", t / self.spacing));
                    }
                }
                match s {
                    TERMINATOR => terminators += 1,
                    s if s as usize <= self.sigma => counts[s as usize - 1] += 1,
                    s => return fail(format!("page {k} holds invalid symbol {s}")),
                }
            }
            let rows = fill / self.spacing;
            if page.samples.len() != rows * self.sigma {
                return fail(format!(
                    "page {k} has {} sample values, expected {}",
                    page.samples.len(),
                    rows * self.sigma
                ));
            }
            if rows > 0 && fill % self.spacing == 0 {
                let row = &page.samples[(rows - 1) * self.sigma..];
                if row.iter().zip(&counts).any(|(&a, &b)| a as u64 != b) {
                    return fail(format!("last sample of page {k} is stale"));
                }
            }
            if page
                .counts
                .iter()
                .zip(&counts)
                .any(|(&a, &b)| a as u64 != b)
            {
                return fail(format!("page {k} totals are stale"));
            }
            for (r, c) in running.iter_mut().zip(&counts) {
                *r += c;
            }
            position += fill as u64;
        }
        if position != self.len {
            return fail(format!(
                "length {} does not match page fills {position}",
                self.len
            ));
        }
        if terminators != self.terminators {
            return fail(format!(
                "terminator count {} does not match contents {terminators}",
                self.terminators
            ));
        }
        if self.allocated_capacity() > 2 * self.len as usize + self.page_size {
            return fail(format!(
                "allocated capacity {} exceeds 2n + p = {}",
                self.allocated_capacity(),
                2 * self.len as usize + self.page_size
            ));
        }
        Ok(())
    }

    /// Number of pages per fill-ratio bucket, `bins` equal-width buckets over
    /// `[0, p]`.
    pub fn fill_histogram(&self, bins: usize) -> Vec<usize> {
        let mut hist = vec![0; bins.max(1)];
        let last = hist.len() - 1;
        for page in &self.pages {
            let b = (page.len() * hist.len()) / self.page_size;
            hist[b.min(last)] += 1;
        }
        hist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::oracle::{naive_insert, naive_rank};
    use proptest::prelude::*;

    fn syms(s: &str) -> Vec<u8> {
        Alphabet::dna().parse_rendered(s.as_bytes()).unwrap()
    }

    #[test]
    fn config_validation() {
        let bwt = PagedBwt::new(8192, 128).unwrap();
        assert_eq!(bwt.len(), 0);
        assert!(PagedBwt::new(256, 128).unwrap().is_empty());
        assert!(matches!(
            PagedBwt::new(100, 128),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(PagedBwt::new(16, 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn insert_worked_example() {
        let mut bwt = PagedBwt::new(256, 128).unwrap();
        bwt.bulk_insert(&syms("C$A"), &[0, 0, 0]).unwrap();
        assert_eq!(bwt.extract_all(), syms("C$A"));
        bwt.bulk_insert(&syms("G$"), &[1, 3]).unwrap();
        assert_eq!(bwt.extract_all(), syms("CG$A$"));
        assert_eq!(bwt.terminators(), 2);
        assert_eq!(bwt.symbol_at(2).unwrap(), TERMINATOR);
        assert_eq!(bwt.symbol_at(0).unwrap(), 2);
        assert!(matches!(
            bwt.symbol_at(5),
            Err(Error::PositionOutOfRange { .. })
        ));
        bwt.audit().unwrap();
    }

    #[test]
    fn rank_examples() {
        let mut bwt = PagedBwt::new(256, 128).unwrap();
        assert_eq!(bwt.rank(1, 0).unwrap(), 0);
        bwt.bulk_insert(&syms("C$A"), &[0, 0, 0]).unwrap();
        assert_eq!(bwt.rank(2, 3).unwrap(), 1);
        assert_eq!(bwt.rank(TERMINATOR, 3).unwrap(), 1);
        for c in 0..=5u8 {
            assert_eq!(bwt.rank(c, 0).unwrap(), 0);
        }
        let counts = bwt.symbol_counts();
        for c in 0..=5u8 {
            assert_eq!(bwt.rank(c, 3).unwrap(), counts[c as usize]);
        }
        assert!(matches!(
            bwt.rank(1, 4),
            Err(Error::PositionOutOfRange { .. })
        ));
        assert!(matches!(bwt.rank(9, 1), Err(Error::InvalidSymbol(9))));
    }

    #[test]
    fn locate_left_attaches_boundaries() {
        let mut bwt =
            PagedBwt::from_pages(5, 8, 4, vec![vec![1; 5], vec![2; 4], vec![3; 4]]).unwrap();
        assert_eq!(bwt.offsets(), &[0, 5, 9]);
        assert_eq!(bwt.locate_pages(&[0, 5, 9]), [0, 0, 1]);
        assert_eq!(bwt.locate_pages(&[]), Vec::<usize>::new());
        bwt.bulk_insert(&[4], &[5]).unwrap();
        assert_eq!(bwt.page_fills(), [6, 4, 4]);

        let single = PagedBwt::from_pages(5, 8, 4, vec![vec![1; 3]]).unwrap();
        assert_eq!(single.locate_pages(&[0, 1, 3]), [0, 0, 0]);
    }

    #[test]
    fn rejects_bad_batches() {
        let mut bwt = PagedBwt::new(256, 128).unwrap();
        bwt.bulk_insert(&syms("C$A"), &[0, 0, 0]).unwrap();
        assert!(matches!(
            bwt.bulk_insert(&[1], &[4]),
            Err(Error::PositionOutOfRange { .. })
        ));
        assert!(matches!(
            bwt.bulk_insert(&[1, 2], &[2, 1]),
            Err(Error::UnsortedPositions { index: 1 })
        ));
        assert!(matches!(
            bwt.bulk_insert(&[1], &[]),
            Err(Error::BatchLengthMismatch { .. })
        ));
        assert!(matches!(
            bwt.bulk_insert(&[7], &[0]),
            Err(Error::InvalidSymbol(7))
        ));
        assert_eq!(bwt.extract_all(), syms("C$A"));
    }

    #[test]
    fn overflow_splits_near_equal() {
        let mut bwt = PagedBwt::new(16, 4).unwrap();
        bwt.bulk_insert(&[1; 10], &[0; 10]).unwrap();
        bwt.bulk_insert(&[2; 30], &[5; 30]).unwrap();
        // 40 symbols in one page of capacity 16: three pages of 14, 13, 13
        assert_eq!(bwt.page_fills(), [14, 13, 13]);
        bwt.audit().unwrap();
    }

    #[test]
    fn rebuild_directory_two_pages() {
        let mut bwt = PagedBwt::from_pages(5, 4, 2, vec![syms("CG$"), syms("A$")]).unwrap();
        bwt.rebuild_directory();
        assert_eq!(bwt.offsets(), &[0, 3]);
        assert_eq!(&bwt.prefix[..5], &[0; 5]);
        assert_eq!(&bwt.prefix[5..], &[0, 1, 1, 0, 0]);
        assert_eq!(bwt.rank(TERMINATOR, 3).unwrap(), 1);
        bwt.audit().unwrap();

        let mut one = PagedBwt::from_pages(5, 4, 2, vec![syms("CG")]).unwrap();
        one.rebuild_directory();
        assert_eq!(one.offsets(), &[0]);
        assert_eq!(&one.prefix[..], &[0; 5]);
    }

    #[test]
    fn extract_empty() {
        let bwt = PagedBwt::new(256, 16).unwrap();
        assert!(bwt.extract_all().is_empty());
        assert_eq!(bwt.symbol_counts(), vec![0; 6]);
        bwt.audit().unwrap();
    }

    fn batch_strategy() -> impl Strategy<Value = Vec<(Vec<u8>, Vec<u64>)>> {
        proptest::collection::vec(
            (1usize..200).prop_flat_map(|len| {
                (
                    proptest::collection::vec(0u8..=5, len),
                    proptest::collection::vec(0u64..=u64::MAX, len),
                )
            }),
            1..8,
        )
    }

    proptest! {
        #[test]
        fn matches_flat_model(batches in batch_strategy(), small_pages in any::<bool>()) {
            let (p, s) = if small_pages { (16, 4) } else { (64, 8) };
            let mut bwt = PagedBwt::new(p, s).unwrap();
            let mut model: Vec<u8> = Vec::new();
            for (symbols, raw) in batches {
                let n = model.len() as u64;
                let mut positions: Vec<u64> = raw.iter().map(|r| r % (n + 1)).collect();
                positions.sort_unstable();
                bwt.bulk_insert(&symbols, &positions).unwrap();
                naive_insert(&mut model, &symbols, &positions);
                prop_assert_eq!(bwt.extract_all(), model.clone());
                bwt.audit().unwrap();
            }
            let n = model.len();
            for i in 0..=n {
                let mut total = 0;
                for c in 0..=5u8 {
                    let r = bwt.rank(c, i as u64).unwrap();
                    prop_assert_eq!(r, naive_rank(c, i, &model));
                    total += r;
                }
                prop_assert_eq!(total, i as u64);
            }
        }
    }
}
