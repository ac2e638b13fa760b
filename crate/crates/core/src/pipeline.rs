//! Blockwise construction driver.
//!
//! Each block is suffix sorted on its own, its suffixes are ranked against
//! the index built so far, and its BWT symbols are scattered into the paged
//! BWT at `g_sa[i] + i`. Strings only ever extend the index, so a saved index
//! can be reopened and appended to.
//!
//! With a pipeline depth above one, ingest and suffix sorting run on their
//! own threads ahead of the ranking/insertion stage, connected by bounded
//! queues. Ranking block `k + 1` needs block `k` already inserted, so those
//! two stages always run in order on the calling thread.

use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::alphabet::{Symbol, TERMINATOR};
use crate::block::{BlockBuilder, ReadBlock};
use crate::error::{Error, Result};
use crate::paged_bwt::{PagedBwt, DEFAULT_PAGE_SIZE, DEFAULT_SAMPLE_SPACING, DEFAULT_SIGMA};
use crate::ranker::{compute_c, compute_ranks, lf_step, reorder_by_sa};
use crate::suffix_sort::{construct_sa_with_stats, extract_bwt, BlockSuffixArray, SortStats};

pub const DEFAULT_BLOCK_SUFFIXES: usize = 1 << 25;
pub const DEFAULT_PIPELINE_DEPTH: usize = 2;

/// Shape of the paged BWT. Fixed for the lifetime of an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub sigma: usize,
    pub page_size: usize,
    pub sample_spacing: usize,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            page_size: DEFAULT_PAGE_SIZE,
            sample_spacing: DEFAULT_SAMPLE_SPACING,
        }
    }
}

/// Knobs that may change between runs over the same index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildConfig {
    /// Target suffixes per block (`M`).
    pub block_suffixes: usize,
    pub workers: usize,
    /// Blocks in flight; 1 runs every stage on the calling thread.
    pub pipeline_depth: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            block_suffixes: DEFAULT_BLOCK_SUFFIXES,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
            pipeline_depth: DEFAULT_PIPELINE_DEPTH,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_suffixes == 0 {
            return Err(Error::InvalidConfig(
                "block size must be at least one suffix".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig(
                "need at least one worker thread".into(),
            ));
        }
        if self.pipeline_depth == 0 {
            return Err(Error::InvalidConfig(
                "pipeline depth must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn thread_pool(&self) -> Result<ThreadPool> {
        ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .thread_name(|i| format!("setbwt-worker-{i}"))
            .build()
            .map_err(|e| Error::Worker(e.to_string()))
    }
}

/// A block with its suffix array and block-local BWT.
#[derive(Debug, Clone)]
pub struct SortedBlock {
    pub block: ReadBlock,
    pub sa: BlockSuffixArray,
    pub bwt: Vec<Symbol>,
    pub stats: SortStats,
    pub sort_time: Duration,
}

impl SortedBlock {
    pub fn prepare(block: ReadBlock) -> Result<Self> {
        let started = Instant::now();
        let (sa, stats) = construct_sa_with_stats(&block)?;
        let bwt = extract_bwt(&block, &sa);
        Ok(Self {
            block,
            sa,
            bwt,
            stats,
            sort_time: started.elapsed(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct BlockReport {
    pub strings: usize,
    pub chars: usize,
    pub suffixes: usize,
    pub sort: SortStats,
    pub sort_time: Duration,
    pub rank_time: Duration,
    pub insert_time: Duration,
}

/// Totals over one `build` or `append` run.
#[derive(Debug, Clone, Default)]
pub struct BuildReport {
    pub blocks: Vec<BlockReport>,
    pub ingest_time: Duration,
    pub wall_time: Duration,
}

impl BuildReport {
    pub fn strings(&self) -> usize {
        self.blocks.iter().map(|b| b.strings).sum()
    }

    pub fn chars(&self) -> usize {
        self.blocks.iter().map(|b| b.chars).sum()
    }

    pub fn suffixes(&self) -> usize {
        self.blocks.iter().map(|b| b.suffixes).sum()
    }

    pub fn sort_time(&self) -> Duration {
        self.blocks.iter().map(|b| b.sort_time).sum()
    }

    pub fn rank_time(&self) -> Duration {
        self.blocks.iter().map(|b| b.rank_time).sum()
    }

    pub fn insert_time(&self) -> Duration {
        self.blocks.iter().map(|b| b.insert_time).sum()
    }

    /// Input megabases per second of busy time for each stage.
    pub fn stage_throughputs(&self) -> Vec<(&'static str, f64)> {
        let mbp = self.chars() as f64 / 1e6;
        let rate = |d: Duration| match d.as_secs_f64() {
            s if s > 0.0 => mbp / s,
            _ => f64::INFINITY,
        };
        vec![
            ("Suffix Sorting", rate(self.sort_time())),
            ("Ranking", rate(self.rank_time())),
            ("Insertion", rate(self.insert_time())),
        ]
    }
}

/// The index under construction: the paged BWT plus its string count.
#[derive(Debug, Clone)]
pub struct IndexState {
    bwt: PagedBwt,
}

impl IndexState {
    pub fn new(layout: Layout) -> Result<Self> {
        Ok(Self {
            bwt: PagedBwt::with_sigma(layout.sigma, layout.page_size, layout.sample_spacing)?,
        })
    }

    pub fn from_bwt(bwt: PagedBwt) -> Self {
        Self { bwt }
    }

    pub fn layout(&self) -> Layout {
        Layout {
            sigma: self.bwt.sigma(),
            page_size: self.bwt.page_size(),
            sample_spacing: self.bwt.sample_spacing(),
        }
    }

    pub fn bwt(&self) -> &PagedBwt {
        &self.bwt
    }

    pub fn into_bwt(self) -> PagedBwt {
        self.bwt
    }

    /// Suffixes indexed, `n_ext`.
    pub fn n_ext(&self) -> u64 {
        self.bwt.len()
    }

    /// Strings indexed, `m_ext`.
    pub fn m_ext(&self) -> u64 {
        self.bwt.terminators()
    }

    pub fn extract_all(&self) -> Vec<Symbol> {
        self.bwt.extract_all()
    }

    /// Index one block whose first string is string number `m_ext`.
    pub fn add_block(&mut self, block: ReadBlock) -> Result<BlockReport> {
        if block.base_index() != self.m_ext() {
            return Err(Error::BaseIndexMismatch {
                expected: self.m_ext(),
                found: block.base_index(),
            });
        }
        if block.is_empty() {
            return Ok(BlockReport::default());
        }
        let sorted = SortedBlock::prepare(block)?;
        self.insert_sorted(sorted)
    }

    /// Rank a sorted block against the index and insert its symbols.
    pub fn insert_sorted(&mut self, sorted: SortedBlock) -> Result<BlockReport> {
        let SortedBlock {
            block,
            sa,
            bwt,
            stats,
            sort_time,
        } = sorted;
        if block.base_index() != self.m_ext() {
            return Err(Error::BaseIndexMismatch {
                expected: self.m_ext(),
                found: block.base_index(),
            });
        }
        let started = Instant::now();
        let g = compute_ranks(&block, &self.bwt, self.m_ext());
        let g_sa = reorder_by_sa(&g, &sa);
        drop(g);
        let rank_time = started.elapsed();

        let started = Instant::now();
        self.bwt.bulk_insert(&bwt, &g_sa)?;
        let insert_time = started.elapsed();

        Ok(BlockReport {
            strings: block.num_strings(),
            chars: block.n_chars(),
            suffixes: block.n_suffixes(),
            sort: stats,
            sort_time,
            rank_time,
            insert_time,
        })
    }

    /// Add `reads` after the strings already indexed.
    pub fn append<I>(&mut self, reads: I, config: &BuildConfig) -> Result<BuildReport>
    where
        I: IntoIterator<Item = Result<Vec<Symbol>>>,
        I::IntoIter: Send,
    {
        config.validate()?;
        let pool = config.thread_pool()?;
        let started = Instant::now();
        let mut report = if config.pipeline_depth == 1 {
            self.append_sequential(reads.into_iter(), config, &pool)?
        } else {
            self.append_pipelined(reads.into_iter(), config, &pool)?
        };
        report.wall_time = started.elapsed();
        Ok(report)
    }

    fn append_sequential(
        &mut self,
        reads: impl Iterator<Item = Result<Vec<Symbol>>>,
        config: &BuildConfig,
        pool: &ThreadPool,
    ) -> Result<BuildReport> {
        let mut report = BuildReport::default();
        let mut builder = BlockBuilder::new(config.block_suffixes, self.m_ext());
        let mut ingest_started = Instant::now();
        for read in reads {
            let read = read?;
            if let Some(block) = builder.push(&read) {
                report.ingest_time += ingest_started.elapsed();
                report.blocks.push(pool.install(|| self.add_block(block))?);
                ingest_started = Instant::now();
            }
        }
        report.ingest_time += ingest_started.elapsed();
        if let Some(block) = builder.finish() {
            report.blocks.push(pool.install(|| self.add_block(block))?);
        }
        Ok(report)
    }

    fn append_pipelined(
        &mut self,
        reads: impl Iterator<Item = Result<Vec<Symbol>>> + Send,
        config: &BuildConfig,
        pool: &ThreadPool,
    ) -> Result<BuildReport> {
        let capacity = config.pipeline_depth - 1;
        let (block_tx, block_rx) = sync_channel::<Result<ReadBlock>>(capacity);
        let (sorted_tx, sorted_rx) = sync_channel::<Result<SortedBlock>>(capacity);
        let target = config.block_suffixes;
        let base = self.m_ext();

        thread::scope(|scope| {
            let ingest = thread::Builder::new()
                .name("setbwt-ingest".into())
                .spawn_scoped(scope, move || ingest_stage(reads, target, base, block_tx))
                .map_err(Error::Io)?;
            thread::Builder::new()
                .name("setbwt-sort".into())
                .spawn_scoped(scope, move || sort_stage(block_rx, sorted_tx, pool))
                .map_err(Error::Io)?;

            let mut report = BuildReport::default();
            let mut outcome = Ok(());
            for sorted in sorted_rx.iter() {
                match sorted.and_then(|s| pool.install(|| self.insert_sorted(s))) {
                    Ok(block) => report.blocks.push(block),
                    Err(e) => {
                        outcome = Err(e);
                        break;
                    }
                }
            }
            // unblock upstream stages before joining
            drop(sorted_rx);
            report.ingest_time = ingest
                .join()
                .map_err(|_| Error::Worker("ingest stage panicked".into()))?;
            outcome.map(|()| report)
        })
    }

    /// Occurrences of `pattern` across all indexed strings, found by backward
    /// search.
    pub fn count(&self, pattern: &[Symbol]) -> Result<u64> {
        fm_count(&self.bwt, pattern)
    }

    pub fn audit(&self) -> Result<()> {
        self.bwt.audit()
    }
}

fn ingest_stage(
    reads: impl Iterator<Item = Result<Vec<Symbol>>>,
    target: usize,
    base: u64,
    out: SyncSender<Result<ReadBlock>>,
) -> Duration {
    let mut busy = Duration::ZERO;
    let mut builder = BlockBuilder::new(target, base);
    let mut started = Instant::now();
    for read in reads {
        let block = match read {
            Ok(read) => builder.push(&read),
            Err(e) => {
                let _ = out.send(Err(e));
                return busy + started.elapsed();
            }
        };
        if let Some(block) = block {
            busy += started.elapsed();
            if out.send(Ok(block)).is_err() {
                return busy;
            }
            started = Instant::now();
        }
    }
    busy += started.elapsed();
    if let Some(block) = builder.finish() {
        let _ = out.send(Ok(block));
    }
    busy
}

fn sort_stage(
    blocks: Receiver<Result<ReadBlock>>,
    out: SyncSender<Result<SortedBlock>>,
    pool: &ThreadPool,
) {
    for block in blocks {
        let sorted = block.and_then(|b| pool.install(|| SortedBlock::prepare(b)));
        let failed = sorted.is_err();
        if out.send(sorted).is_err() || failed {
            return;
        }
    }
}

/// Build an index over `reads` from scratch.
pub fn build<I>(reads: I, layout: Layout, config: &BuildConfig) -> Result<(IndexState, BuildReport)>
where
    I: IntoIterator<Item = Result<Vec<Symbol>>>,
    I::IntoIter: Send,
{
    let mut state = IndexState::new(layout)?;
    let report = state.append(reads, config)?;
    Ok((state, report))
}

/// Backward search: occurrences of `pattern` as a substring of the indexed
/// strings.
pub fn fm_count(bwt: &PagedBwt, pattern: &[Symbol]) -> Result<u64> {
    if pattern.is_empty() {
        return Err(Error::InvalidPattern("pattern is empty".into()));
    }
    if let Some(&c) = pattern
        .iter()
        .find(|&&c| c == TERMINATOR || c as usize > bwt.sigma())
    {
        return Err(Error::InvalidSymbol(c));
    }
    let less = compute_c(bwt);
    let (mut lo, mut hi) = (0, bwt.len());
    for &c in pattern.iter().rev() {
        lo = lf_step(c, lo, bwt, &less);
        hi = lf_step(c, hi, bwt, &less);
        if lo >= hi {
            return Ok(0);
        }
    }
    Ok(hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::oracle::{brute_force_bwt, naive_count_occurrences};
    use crate::ranker::compute_ranks;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn enc(strings: &[&str]) -> Vec<Vec<u8>> {
        let dna = Alphabet::dna();
        strings
            .iter()
            .map(|s| dna.encode(s.as_bytes(), Default::default()).unwrap())
            .collect()
    }

    fn small_layout() -> Layout {
        Layout {
            sigma: 5,
            page_size: 32,
            sample_spacing: 8,
        }
    }

    fn config(m: usize, workers: usize, depth: usize) -> BuildConfig {
        BuildConfig {
            block_suffixes: m,
            workers,
            pipeline_depth: depth,
        }
    }

    fn build_all(strings: &[Vec<u8>], cfg: &BuildConfig) -> IndexState {
        build(strings.iter().cloned().map(Ok), small_layout(), cfg)
            .unwrap()
            .0
    }

    fn render(symbols: &[u8]) -> String {
        String::from_utf8(Alphabet::dna().decode(symbols).unwrap()).unwrap()
    }

    #[test]
    fn add_block_worked_example() {
        let mut state = IndexState::new(small_layout()).unwrap();
        state
            .add_block(ReadBlock::from_strings(0, &enc(&["AC"])))
            .unwrap();
        assert_eq!(render(&state.extract_all()), "C$A");

        let block = ReadBlock::from_strings(1, &enc(&["G"]));
        let sorted = SortedBlock::prepare(block.clone()).unwrap();
        let g = compute_ranks(&block, state.bwt(), state.m_ext());
        assert_eq!(reorder_by_sa(&g, &sorted.sa), [1, 3]);
        state.insert_sorted(sorted).unwrap();
        assert_eq!(render(&state.extract_all()), "CG$A$");
        assert_eq!((state.n_ext(), state.m_ext()), (5, 2));

        state.add_block(ReadBlock::new(2)).unwrap();
        assert_eq!(render(&state.extract_all()), "CG$A$");
    }

    #[test]
    fn add_block_checks_base_index() {
        let mut state = IndexState::new(small_layout()).unwrap();
        let err = state
            .add_block(ReadBlock::from_strings(3, &enc(&["A"])))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::BaseIndexMismatch {
                expected: 0,
                found: 3
            }
        ));
    }

    #[test]
    fn build_small_sets() {
        for m in [1, 2, 3, 100] {
            for depth in [1, 2, 3] {
                let state = build_all(&enc(&["AC", "G"]), &config(m, 2, depth));
                assert_eq!(render(&state.extract_all()), "CG$A$");
            }
        }
        let state = build_all(&[], &config(4, 1, 2));
        assert!(state.extract_all().is_empty());
    }

    #[test]
    fn append_equals_one_shot() {
        let strings = enc(&["ACGT", "", "GGA", "ACGT", "TTTT", "NA"]);
        let one_shot = build_all(&strings, &config(5, 2, 2));
        let mut state = build_all(&strings[..2], &config(5, 2, 2));
        state
            .append(strings[2..4].iter().cloned().map(Ok), &config(3, 1, 1))
            .unwrap();
        state.append(std::iter::empty(), &config(3, 1, 1)).unwrap();
        state
            .append(strings[4..].iter().cloned().map(Ok), &config(100, 4, 2))
            .unwrap();
        assert_eq!(state.extract_all(), one_shot.extract_all());
        assert_eq!(one_shot.extract_all(), brute_force_bwt(&strings));
    }

    #[test]
    fn input_errors_stop_the_build() {
        for depth in [1, 2] {
            let reads = vec![
                Ok(vec![1, 2]),
                Err(Error::InvalidRead {
                    ordinal: 1,
                    position: 0,
                    byte: b'x',
                }),
                Ok(vec![3]),
            ];
            let err = build(reads, small_layout(), &config(1, 2, depth)).unwrap_err();
            assert!(matches!(err, Error::InvalidRead { ordinal: 1, .. }));
        }
    }

    #[test]
    fn count_examples() {
        let state = build_all(&enc(&["AC", "G"]), &config(8, 1, 1));
        assert_eq!(state.count(&[1]).unwrap(), 1);
        assert_eq!(state.count(&[1, 2, 3, 4]).unwrap(), 0);
        let state = build_all(&enc(&["AA"]), &config(8, 1, 1));
        assert_eq!(state.count(&[1]).unwrap(), 2);
        assert!(state.count(&[]).is_err());
        assert!(state.count(&[1, 0]).is_err());
    }

    #[test]
    fn random_sets_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for round in 0..60 {
            let m = rng.gen_range(1..30);
            let strings: Vec<Vec<u8>> = (0..m)
                .map(|_| {
                    let len = rng.gen_range(0..20);
                    (0..len).map(|_| rng.gen_range(1..=5)).collect()
                })
                .collect();
            let expected = brute_force_bwt(&strings);
            let block = [1, 7, 40, usize::MAX][round % 4];
            let state = build_all(&strings, &config(block, 1 + round % 3, 1 + round % 2));
            assert_eq!(state.extract_all(), expected);
            state.audit().unwrap();

            for _ in 0..10 {
                let len = rng.gen_range(1..4);
                let pattern: Vec<u8> = (0..len).map(|_| rng.gen_range(1..=5)).collect();
                assert_eq!(
                    state.count(&pattern).unwrap(),
                    naive_count_occurrences(&pattern, &strings)
                );
            }
        }
    }

    #[test]
    fn report_covers_every_block() {
        let strings = enc(&["ACGT"; 10]);
        let (_, report) = build(
            strings.into_iter().map(Ok),
            small_layout(),
            &config(10, 2, 2),
        )
        .unwrap();
        assert_eq!(report.blocks.len(), 5);
        assert_eq!(report.strings(), 10);
        assert_eq!(report.chars(), 40);
        assert_eq!(report.suffixes(), 50);
        let names: Vec<_> = report.stage_throughputs().iter().map(|s| s.0).collect();
        assert_eq!(names, ["Suffix Sorting", "Ranking", "Insertion"]);
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [config(0, 1, 1), config(1, 0, 1), config(1, 1, 0)] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        }
    }
}
