//! Brute-force reference implementations.
//!
//! Everything here works directly on the definition of the multi-string BWT
//! and is quadratic in the worst case. None of it shares code with the
//! construction path.

use std::cmp::Ordering;

use crate::alphabet::{Symbol, TERMINATOR};

/// The text `S_0 $_0 S_1 $_1 ... S_{m-1} $_{m-1}`, where terminator `$_i`
/// is identified by its string index and every terminator is smaller than
/// every real symbol.
pub struct ConceptualText<'a> {
    strings: Vec<&'a [Symbol]>,
}

impl<'a> ConceptualText<'a> {
    pub fn new<S: AsRef<[Symbol]>>(strings: &'a [S]) -> Self {
        Self {
            strings: strings.iter().map(AsRef::as_ref).collect(),
        }
    }

    /// Number of suffixes, Σ(|S_i| + 1).
    pub fn len(&self) -> usize {
        self.strings.iter().map(|s| s.len() + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// Every suffix as `(string index, offset)`, sorted.
    pub fn suffix_array(&self) -> Vec<(usize, usize)> {
        let mut suffixes: Vec<(usize, usize)> = self
            .strings
            .iter()
            .enumerate()
            .flat_map(|(j, s)| (0..=s.len()).map(move |k| (j, k)))
            .collect();
        suffixes.sort_by(|&(i, k), &(j, l)| {
            compare_suffixes(
                &self.strings[i][k..],
                i as u64,
                &self.strings[j][l..],
                j as u64,
            )
        });
        suffixes
    }

    /// `B[i] = T[(SA[i] - 1) mod n]` with terminators collapsed to one code.
    pub fn bwt(&self) -> Vec<Symbol> {
        self.suffix_array()
            .into_iter()
            .map(|(j, k)| match k {
                0 => TERMINATOR,
                k => self.strings[j][k - 1],
            })
            .collect()
    }
}

/// Compare two string suffixes, each implicitly followed by its own
/// terminator `$_index`.
pub fn compare_suffixes(a: &[Symbol], a_index: u64, b: &[Symbol], b_index: u64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    match a.len().cmp(&b.len()) {
        // the shorter suffix reaches its terminator against a real symbol
        Ordering::Less => Ordering::Less,
        Ordering::Greater => Ordering::Greater,
        Ordering::Equal => a_index.cmp(&b_index),
    }
}

pub fn brute_force_bwt<S: AsRef<[Symbol]>>(strings: &[S]) -> Vec<Symbol> {
    ConceptualText::new(strings).bwt()
}

/// Number of suffixes of `strings` (global indices `0..m`) smaller than
/// `suffix`, which belongs to string `index`.
pub fn count_smaller_suffixes<S: AsRef<[Symbol]>>(
    strings: &[S],
    suffix: &[Symbol],
    index: u64,
) -> u64 {
    let mut count = 0;
    for (j, s) in strings.iter().enumerate() {
        let s = s.as_ref();
        for k in 0..=s.len() {
            if compare_suffixes(&s[k..], j as u64, suffix, index) == Ordering::Less {
                count += 1;
            }
        }
    }
    count
}

/// `|{j < i : seq[j] = c}|`.
pub fn naive_rank(c: Symbol, i: usize, sequence: &[Symbol]) -> u64 {
    sequence[..i].iter().filter(|&&s| s == c).count() as u64
}

/// Overlapping occurrences of `pattern` summed over all strings.
pub fn naive_count_occurrences<S: AsRef<[Symbol]>>(pattern: &[Symbol], strings: &[S]) -> u64 {
    assert!(!pattern.is_empty(), "pattern must be non-empty");
    strings
        .iter()
        .map(|s| {
            s.as_ref()
                .windows(pattern.len())
                .filter(|w| *w == pattern)
                .count() as u64
        })
        .sum()
}

/// Insert `symbols[i]` at absolute position `positions[i] + i`, one at a
/// time, into a flat sequence.
pub fn naive_insert(sequence: &mut Vec<Symbol>, symbols: &[Symbol], positions: &[u64]) {
    for (i, (&s, &p)) in symbols.iter().zip(positions).enumerate() {
        sequence.insert(p as usize + i, s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;

    fn enc(strings: &[&str]) -> Vec<Vec<u8>> {
        let dna = Alphabet::dna();
        strings
            .iter()
            .map(|s| dna.encode(s.as_bytes(), Default::default()).unwrap())
            .collect()
    }

    fn render(bwt: &[u8]) -> String {
        String::from_utf8(Alphabet::dna().decode(bwt).unwrap()).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(render(&brute_force_bwt(&enc(&["AC"]))), "C$A");
        assert_eq!(render(&brute_force_bwt(&enc(&["AC", "G"]))), "CG$A$");
        assert_eq!(render(&brute_force_bwt(&enc(&[""]))), "$");
        assert_eq!(render(&brute_force_bwt(&enc(&["G"]))), "G$");
        assert!(brute_force_bwt(&enc(&[])).is_empty());
    }

    #[test]
    fn duplicate_strings_order_by_index() {
        let sa = ConceptualText::new(&enc(&["A", "A"])).suffix_array();
        assert_eq!(sa, [(0, 1), (1, 1), (0, 0), (1, 0)]);
    }

    #[test]
    fn rank_and_count_examples() {
        let dna = Alphabet::dna();
        let seq = dna.parse_rendered(b"C$A").unwrap();
        assert_eq!(naive_rank(1, 3, &seq), 1);
        assert_eq!(naive_rank(3, 0, &seq), 0);
        let seq = dna.parse_rendered(b"CG$A$").unwrap();
        assert_eq!(naive_rank(3, 5, &seq), 1);

        assert_eq!(naive_count_occurrences(&[1], &enc(&["AA"])), 2);
        assert_eq!(naive_count_occurrences(&[1, 2], &enc(&["G"])), 0);
        assert_eq!(naive_count_occurrences(&[1], &enc(&["AC", "G"])), 1);
    }

    #[test]
    fn smaller_suffix_counts() {
        let old = enc(&["AC"]);
        // "G$1" is larger than "$0", "AC$0", "C$0"
        assert_eq!(count_smaller_suffixes(&old, &[3], 1), 3);
        // "$1" is larger than "$0" only
        assert_eq!(count_smaller_suffixes(&old, &[], 1), 1);
        assert_eq!(count_smaller_suffixes(&old, &[1, 2], 1), 2);
    }

    #[test]
    fn bwt_is_a_permutation() {
        let strings = enc(&["ACGT", "", "TTA", "ACGT", "NNA"]);
        let bwt = brute_force_bwt(&strings);
        let mut expected: Vec<u8> = strings.iter().flatten().copied().collect();
        expected.extend(std::iter::repeat_n(TERMINATOR, strings.len()));
        let mut got = bwt.clone();
        expected.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, expected);
    }

    #[test]
    fn naive_insert_is_stable() {
        let mut seq = vec![];
        naive_insert(&mut seq, &[2, 0, 1], &[0, 0, 0]);
        assert_eq!(seq, [2, 0, 1]);
        let mut seq = vec![2, 0, 1];
        naive_insert(&mut seq, &[3, 0], &[1, 3]);
        assert_eq!(render(&seq), "CG$A$");
    }
}
