//! Ranking a new block's suffixes against the external BWT.
//!
//! If suffix `X` is larger than exactly `i` external suffixes, then `cX` is
//! larger than exactly `C[c] + rank(c, i)` of them. Walking each new string
//! right to left from its terminator yields the rank of every one of its
//! suffixes with one backward step per symbol.

use rayon::prelude::*;

use crate::alphabet::{Symbol, TERMINATOR};
use crate::block::ReadBlock;
use crate::paged_bwt::PagedBwt;
use crate::suffix_sort::BlockSuffixArray;

/// `C[c]`: symbols of the external BWT strictly smaller than `c`, indexed by
/// code with the terminator at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CCounts(Vec<u64>);

impl CCounts {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut total = 0;
        let mut less = Vec::with_capacity(counts.len());
        for &n in counts {
            less.push(total);
            total += n;
        }
        Self(less)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

impl std::ops::Index<Symbol> for CCounts {
    type Output = u64;

    fn index(&self, c: Symbol) -> &u64 {
        &self.0[c as usize]
    }
}

pub fn compute_c(bwt: &PagedBwt) -> CCounts {
    CCounts::from_counts(&bwt.symbol_counts())
}

/// Number of external suffixes smaller than `c` followed by the suffix of
/// rank `i`. `c` must be a real symbol and `i <= n`.
#[inline]
pub fn lf_step(c: Symbol, i: u64, bwt: &PagedBwt, less: &CCounts) -> u64 {
    assert!(c != TERMINATOR, "backward steps never consume a terminator");
    assert!(
        i <= bwt.len(),
        "rank position {i} beyond BWT length {}",
        bwt.len()
    );
    less[c] + bwt.occ(c, i)
}

/// Per-suffix external ranks in block text layout: slot `p` belongs to the
/// suffix starting at [`ReadBlock::text`] position `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalRankArray(Vec<u64>);

impl GlobalRankArray {
    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

/// Rank every suffix of `block` against `bwt`, which holds `m_ext` strings.
///
/// The terminator of a new string is larger than exactly the `m_ext`
/// terminators already indexed and smaller than everything else.
pub fn compute_ranks(block: &ReadBlock, bwt: &PagedBwt, m_ext: u64) -> GlobalRankArray {
    let less = compute_c(bwt);
    let text = block.text();
    let starts = block.starts();
    let mut g = vec![0u64; text.len()];

    let shards = shard_strings(starts, rayon::current_num_threads() * 8);
    let mut slices = Vec::with_capacity(shards.len());
    let mut rest: &mut [u64] = &mut g;
    for &(lo, hi) in &shards {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(starts[hi] - starts[lo]);
        slices.push((lo, hi, head));
        rest = tail;
    }

    slices.into_par_iter().for_each(|(lo, hi, out)| {
        let shard_base = starts[lo];
        for j in lo..hi {
            let (start, end) = (starts[j], starts[j + 1]);
            let slots = &mut out[start - shard_base..end - shard_base];
            let last = slots.len() - 1;
            slots[last] = m_ext;
            let mut i = m_ext;
            for k in (0..last).rev() {
                i = lf_step(text[start + k], i, bwt, &less);
                slots[k] = i;
            }
        }
    });
    GlobalRankArray(g)
}

/// Split strings into at most `target` contiguous shards of similar suffix
/// count, as `(first, end)` string ranges.
fn shard_strings(starts: &[usize], target: usize) -> Vec<(usize, usize)> {
    let m = starts.len() - 1;
    let total = starts[m];
    if m == 0 {
        return Vec::new();
    }
    let per_shard = total.div_ceil(target.max(1)).max(1);
    let mut shards = Vec::new();
    let mut lo = 0;
    while lo < m {
        let goal = starts[lo] + per_shard;
        let hi = starts.partition_point(|&s| s < goal).clamp(lo + 1, m);
        shards.push((lo, hi));
        lo = hi;
    }
    shards
}

/// `g_sa[i] = g[sa[i]]`, which is non-decreasing.
pub fn reorder_by_sa(g: &GlobalRankArray, sa: &BlockSuffixArray) -> Vec<u64> {
    sa.positions()
        .par_iter()
        .map(|&p| g.0[p as usize])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::oracle::{count_smaller_suffixes, naive_rank};
    use crate::suffix_sort::construct_sa;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bwt_of(rendered: &str) -> PagedBwt {
        let symbols = Alphabet::dna().parse_rendered(rendered.as_bytes()).unwrap();
        let mut bwt = PagedBwt::new(256, 16).unwrap();
        let zeros = vec![0; symbols.len()];
        bwt.bulk_insert(&symbols, &zeros).unwrap();
        bwt
    }

    #[test]
    fn c_counts() {
        assert_eq!(compute_c(&bwt_of("C$A")).as_slice(), &[0, 1, 2, 3, 3, 3]);
        assert_eq!(compute_c(&bwt_of("")).as_slice(), &[0; 6]);
        assert_eq!(compute_c(&bwt_of("$$$$")).as_slice(), &[0, 4, 4, 4, 4, 4]);
    }

    #[test]
    fn lf_examples() {
        let bwt = bwt_of("C$A");
        let less = compute_c(&bwt);
        assert_eq!(lf_step(3, 1, &bwt, &less), 3);
        assert_eq!(lf_step(1, 0, &bwt, &less), less[1]);
        assert_eq!(lf_step(2, 3, &bwt, &less), 3);
    }

    #[test]
    fn ranks_of_worked_example() {
        let bwt = bwt_of("C$A");
        let block = ReadBlock::from_strings(1, &[vec![3u8]]);
        let g = compute_ranks(&block, &bwt, 1);
        assert_eq!(g.as_slice(), &[3, 1]);
        let sa = construct_sa(&block).unwrap();
        assert_eq!(reorder_by_sa(&g, &sa), [1, 3]);

        let block = ReadBlock::from_strings(1, &[vec![1u8, 2]]);
        assert_eq!(compute_ranks(&block, &bwt, 1).as_slice(), &[2, 3, 1]);
    }

    #[test]
    fn empty_index_ranks_are_zero() {
        let bwt = PagedBwt::new(256, 16).unwrap();
        let block = ReadBlock::from_strings(0, &[vec![1u8], vec![1u8]]);
        let g = compute_ranks(&block, &bwt, 0);
        assert_eq!(g.as_slice(), &[0, 0, 0, 0]);
        let sa = construct_sa(&block).unwrap();
        assert_eq!(reorder_by_sa(&g, &sa), [0, 0, 0, 0]);
    }

    #[test]
    fn identity_order_gathers_unchanged() {
        // a lone empty string sorts trivially
        let bwt = bwt_of("C$A");
        let block = ReadBlock::from_strings(1, &[Vec::<u8>::new()]);
        let g = compute_ranks(&block, &bwt, 1);
        let sa = construct_sa(&block).unwrap();
        assert_eq!(reorder_by_sa(&g, &sa), g.as_slice());
    }

    #[test]
    fn shards_cover_all_strings() {
        let block =
            ReadBlock::from_strings(0, &[vec![1u8; 3], vec![], vec![2; 10], vec![1], vec![]]);
        for target in 1..8 {
            let shards = shard_strings(block.starts(), target);
            assert_eq!(shards.first().unwrap().0, 0);
            assert_eq!(shards.last().unwrap().1, 5);
            assert!(shards.windows(2).all(|w| w[0].1 == w[1].0));
            assert!(shards.iter().all(|&(lo, hi)| lo < hi));
        }
        assert!(shard_strings(&[0], 4).is_empty());
    }

    #[test]
    fn matches_brute_force_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let gen = |rng: &mut ChaCha8Rng, m: usize| -> Vec<Vec<u8>> {
                (0..m)
                    .map(|_| {
                        let len = rng.gen_range(0..12);
                        (0..len).map(|_| rng.gen_range(1..=3)).collect()
                    })
                    .collect()
            };
            let m_old = rng.gen_range(0..10);
            let old = gen(&mut rng, m_old);
            let m_new = rng.gen_range(1..6);
            let new = gen(&mut rng, m_new);

            let mut bwt = PagedBwt::new(16, 4).unwrap();
            let flat = crate::oracle::brute_force_bwt(&old);
            bwt.bulk_insert(&flat, &vec![0; flat.len()]).unwrap();

            let block = ReadBlock::from_strings(m_old as u64, &new);
            let g = compute_ranks(&block, &bwt, m_old as u64);
            for (j, s) in new.iter().enumerate() {
                for k in 0..=s.len() {
                    let expected = count_smaller_suffixes(&old, &s[k..], (m_old + j) as u64);
                    assert_eq!(g.as_slice()[block.position(j, k)], expected);
                }
            }
            let sa = construct_sa(&block).unwrap();
            let g_sa = reorder_by_sa(&g, &sa);
            assert!(g_sa.windows(2).all(|w| w[0] <= w[1]));

            for c in 1..=5u8 {
                for i in 0..=flat.len() {
                    assert_eq!(
                        lf_step(c, i as u64, &bwt, &compute_c(&bwt)),
                        compute_c(&bwt)[c] + naive_rank(c, i, &flat)
                    );
                }
            }
        }
    }
}
