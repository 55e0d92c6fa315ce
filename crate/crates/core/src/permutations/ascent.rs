use serde::Serialize;

use crate::btree::{run_permutation, BTreeShape, History, KeyedBTree};
use crate::combinatorics::standardize;
use crate::error::{Error, Result};

/// Keys pushed out of a leaf during an insertion run, in the order the splits happened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AscentRecord {
    /// 1-based insertion times at which a leaf split.
    pub split_times: Vec<usize>,
    /// The key each of those splits pushed up.
    pub pushed_key_values: Vec<usize>,
    /// Relative order of `pushed_key_values`.
    pub standardized: Vec<usize>,
}

/// Inserts `pi` and records the keys that leave the leaf level.
pub fn psi(m: usize, pi: &[usize]) -> Result<AscentRecord> {
    let (_, _, traces) = run_permutation(m, pi)?;
    let mut split_times = Vec::new();
    let mut pushed_key_values = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        if let Some(&k) = trace.pushed_keys.first() {
            split_times.push(i + 2);
            pushed_key_values.push(k);
        }
    }
    let standardized = standardize(&pushed_key_values);
    Ok(AscentRecord { split_times, pushed_key_values, standardized })
}

/// Final values of the pushed keys, reconstructed from the leaf choices alone.
pub fn psi_hat_values(h: &History) -> Result<Vec<usize>> {
    if h.n != h.leaf_choices.len() + 1 {
        return Err(Error::InvalidHistory { step: 0, reason: "n does not match the number of choices".into() });
    }
    let m = h.m;
    let mut shape = BTreeShape::new_singleton(m)?;
    // values[i] is the current rank of the i-th pushed key among all keys so far
    let mut values: Vec<usize> = Vec::new();
    let mut sorted: Vec<usize> = Vec::new();
    for (step, &leaf) in h.leaf_choices.iter().enumerate() {
        let (next, trace) = shape.insert_at_leaf(leaf).map_err(|e| Error::InvalidHistory {
            step: step + 2,
            reason: e.to_string(),
        })?;
        let below = if leaf == 1 { 0 } else { sorted[leaf - 2] };
        for v in values.iter_mut().chain(sorted.iter_mut()) {
            if *v > below {
                *v += 1;
            }
        }
        if trace.splits_propagated > 0 {
            let k = below + m + 1;
            values.push(k);
            let at = sorted.partition_point(|&x| x < k);
            sorted.insert(at, k);
        }
        shape = next;
    }
    Ok(values)
}

/// The relative order of the pushed keys, computed without knowing the keys.
pub fn psi_hat(h: &History) -> Result<Vec<usize>> {
    Ok(standardize(&psi_hat_values(h)?))
}

/// The non-leaf keys of `t` in increasing order; `iota[i-1]` is the image of `i`.
pub fn iota(t: &KeyedBTree) -> Result<Vec<usize>> {
    if t.height() == 0 {
        return Err(Error::TrimLeafRoot);
    }
    Ok(t.internal_keys())
}

/// Maps each entry of `pi1` through [`iota`].
pub fn lift(pi1: &[usize], t: &KeyedBTree) -> Result<Vec<usize>> {
    let map = iota(t)?;
    pi1.iter()
        .map(|&i| {
            i.checked_sub(1)
                .and_then(|i| map.get(i).copied())
                .ok_or(Error::NotAPermutation(map.len()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::all_permutations;

    const FIG: [usize; 9] = [6, 1, 2, 4, 7, 5, 9, 8, 3];

    #[test]
    fn worked_example() {
        let rec = psi(1, &FIG).unwrap();
        assert_eq!(rec.pushed_key_values, vec![2, 6, 8, 4]);
        assert_eq!(rec.standardized, vec![1, 3, 4, 2]);
        assert_eq!(rec.split_times, vec![3, 5, 8, 9]);
        let (t, h, _) = run_permutation(1, &FIG).unwrap();
        assert_eq!(psi_hat(&h).unwrap(), vec![1, 3, 4, 2]);
        assert_eq!(iota(&t).unwrap(), vec![2, 4, 6, 8]);
        assert_eq!(lift(&[1, 3, 4, 2], &t).unwrap(), vec![2, 6, 8, 4]);
    }

    #[test]
    fn small_cases() {
        let rec = psi(1, &[1, 2, 3]).unwrap();
        assert_eq!(rec.pushed_key_values, vec![2]);
        assert_eq!(rec.standardized, vec![1]);
        assert!(psi(2, &[3, 1, 4, 2]).unwrap().pushed_key_values.is_empty());
        let h = History::new(2, vec![1, 1, 1]).unwrap();
        assert!(psi_hat(&h).unwrap().is_empty());
        let leaf = KeyedBTree::singleton(1, 1).unwrap();
        assert!(iota(&leaf).is_err());
    }

    #[test]
    fn psi_hat_agrees_with_psi() {
        for m in 1..=2 {
            let max = if m == 1 { 8 } else { 7 };
            for n in 1..=max {
                for pi in all_permutations(n) {
                    let rec = psi(m, &pi).unwrap();
                    let (t, h, _) = run_permutation(m, &pi).unwrap();
                    assert_eq!(psi_hat_values(&h).unwrap(), rec.pushed_key_values, "{pi:?}");
                    if t.height() > 0 {
                        let map = iota(&t).unwrap();
                        assert!(map.windows(2).all(|w| w[0] < w[1]));
                        let mut keys = rec.pushed_key_values.clone();
                        keys.sort_unstable();
                        assert_eq!(keys, map);
                    }
                }
            }
        }
    }
}
