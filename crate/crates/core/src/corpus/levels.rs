//! Label derivation for non-adjacent readability levels.
//!
//! Adjacent-level annotations (level L against L+1) are chained: a sentence
//! pair two or more levels apart gets the best label over all intermediate
//! paths, where a path is only as strong as its weakest link.

use std::collections::{BTreeMap, HashMap};

use super::AlignmentLabelKind;
use crate::error::{Error, Result};

/// (lower level, higher level)
pub type LevelPair = (i32, i32);

/// Sparse labels between sentences of two levels, keyed by
/// (sentence index at the lower level, sentence index at the higher level).
/// Absent keys are `NotAligned`.
pub type LabelSet = BTreeMap<(usize, usize), AlignmentLabelKind>;

/// Weakest-link composition of two labels along a path.
pub fn compose(a: AlignmentLabelKind, b: AlignmentLabelKind) -> AlignmentLabelKind {
    a.min(b)
}

/// Max over intermediate sentences of the composed labels.
pub fn compose_sets(first: &LabelSet, second: &LabelSet) -> LabelSet {
    let mut by_middle: HashMap<usize, Vec<(usize, AlignmentLabelKind)>> = HashMap::new();
    for (&(y, z), &label) in second {
        if label != AlignmentLabelKind::NotAligned {
            by_middle.entry(y).or_default().push((z, label));
        }
    }
    let mut out = LabelSet::new();
    for (&(x, y), &left) in first {
        if left == AlignmentLabelKind::NotAligned {
            continue;
        }
        for &(z, right) in by_middle.get(&y).map(Vec::as_slice).unwrap_or(&[]) {
            let label = compose(left, right);
            let slot = out.entry((x, z)).or_insert(label);
            *slot = (*slot).max(label);
        }
    }
    out
}

/// Derives label sets for every level pair at distance >= 2 from a
/// contiguous chain of adjacent-level label sets.
pub fn derive_nonadjacent(
    adjacent: &BTreeMap<LevelPair, LabelSet>,
) -> Result<BTreeMap<LevelPair, LabelSet>> {
    for &(a, b) in adjacent.keys() {
        if b != a + 1 {
            return Err(Error::InvalidArgument(format!(
                "level pair ({a}, {b}) is not adjacent"
            )));
        }
    }
    let mut out = BTreeMap::new();
    let (Some(&(lo, _)), Some(&(_, hi))) = (adjacent.keys().next(), adjacent.keys().last()) else {
        return Ok(out);
    };
    for level in lo..hi {
        if !adjacent.contains_key(&(level, level + 1)) {
            return Err(Error::MissingLevel(level + 1));
        }
    }
    for start in lo..hi - 1 {
        let mut acc = adjacent[&(start, start + 1)].clone();
        for end in start + 2..=hi {
            acc = compose_sets(&acc, &adjacent[&(end - 1, end)]);
            out.insert((start, end), acc.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AlignmentLabelKind::*;

    fn set(entries: &[((usize, usize), AlignmentLabelKind)]) -> LabelSet {
        entries.iter().copied().collect()
    }

    fn get(s: &LabelSet, k: (usize, usize)) -> AlignmentLabelKind {
        s.get(&k).copied().unwrap_or(NotAligned)
    }

    #[test]
    fn rule_table_all_nine() {
        // Written-out table: Aligned only from two Aligned links, Partial if
        // Partial appears without NotAligned, NotAligned otherwise.
        let expected = |a, b| match (a, b) {
            (Aligned, Aligned) => Aligned,
            (NotAligned, _) | (_, NotAligned) => NotAligned,
            _ => PartiallyAligned,
        };
        for a in AlignmentLabelKind::ALL {
            for b in AlignmentLabelKind::ALL {
                assert_eq!(compose(a, b), expected(a, b), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn chain_examples() {
        let mut adj = BTreeMap::new();
        adj.insert((0, 1), set(&[((0, 0), Aligned), ((1, 1), Aligned)]));
        adj.insert((1, 2), set(&[((0, 0), Aligned), ((1, 0), PartiallyAligned)]));
        let out = derive_nonadjacent(&adj).unwrap();
        let d = &out[&(0, 2)];
        assert_eq!(get(d, (0, 0)), Aligned);
        assert_eq!(get(d, (1, 0)), PartiallyAligned);
        assert_eq!(out.len(), 1);

        // x with no aligned intermediate sentence
        adj.insert((0, 1), set(&[((0, 0), NotAligned)]));
        let out = derive_nonadjacent(&adj).unwrap();
        assert_eq!(get(&out[&(0, 2)], (0, 0)), NotAligned);
    }

    #[test]
    fn best_path_wins() {
        let mut adj = BTreeMap::new();
        adj.insert((0, 1), set(&[((0, 0), PartiallyAligned), ((0, 1), Aligned)]));
        adj.insert((1, 2), set(&[((0, 0), Aligned), ((1, 0), Aligned)]));
        let out = derive_nonadjacent(&adj).unwrap();
        assert_eq!(get(&out[&(0, 2)], (0, 0)), Aligned);
    }

    #[test]
    fn longer_chain_derives_all_distances() {
        let link = set(&[((0, 0), Aligned)]);
        let adj: BTreeMap<_, _> = (0..4).map(|l| ((l, l + 1), link.clone())).collect();
        let out = derive_nonadjacent(&adj).unwrap();
        let keys: Vec<_> = out.keys().copied().collect();
        assert_eq!(keys, vec![(0, 2), (0, 3), (0, 4), (1, 3), (1, 4), (2, 4)]);
        assert!(out.values().all(|s| get(s, (0, 0)) == Aligned));
    }

    #[test]
    fn gap_in_chain_is_error() {
        let mut adj = BTreeMap::new();
        adj.insert((0, 1), LabelSet::new());
        adj.insert((2, 3), LabelSet::new());
        assert!(matches!(derive_nonadjacent(&adj), Err(Error::MissingLevel(2))));
        let mut bad = BTreeMap::new();
        bad.insert((0, 2), LabelSet::new());
        assert!(derive_nonadjacent(&bad).is_err());
    }

    fn arb_set() -> impl Strategy<Value = LabelSet> {
        proptest::collection::vec(0usize..3, 9).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(k, l)| ((k / 3, k % 3), AlignmentLabelKind::ALL[l]))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn composition_is_associative(a in arb_set(), b in arb_set(), c in arb_set()) {
            let left = compose_sets(&compose_sets(&a, &b), &c);
            let right = compose_sets(&a, &compose_sets(&b, &c));
            for x in 0..3 {
                for z in 0..3 {
                    prop_assert_eq!(get(&left, (x, z)), get(&right, (x, z)));
                }
            }
        }

        #[test]
        fn matches_brute_force(a in arb_set(), b in arb_set()) {
            let got = compose_sets(&a, &b);
            for x in 0..3 {
                for z in 0..3 {
                    let want = (0..3)
                        .map(|y| compose(get(&a, (x, y)), get(&b, (y, z))))
                        .max()
                        .unwrap();
                    prop_assert_eq!(get(&got, (x, z)), want);
                }
            }
        }
    }
}
