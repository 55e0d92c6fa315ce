//! Which insertion orders produce a given B-tree or historic tree.
//!
//! The sets are built recursively: the keys pushed above the leaf level form a permutation of
//! the trimmed tree, that permutation fixes a DAG whose labellings are the admissible
//! historic trees, and each historic tree fixes its insertion orders up to local choices.

mod ascent;
mod dag;
mod step3;

use num_bigint::BigUint;
use num_traits::One;

pub use ascent::{iota, lift, psi, psi_hat, psi_hat_values, AscentRecord};
pub use dag::{build_dag, topological_labellings, InsertionDag, TopologicalLabellings};
pub use step3::{enumerate_perms, PermutationStream};

use crate::btree::KeyedBTree;
use crate::combinatorics::{all_permutations, factorial, split_factor};
use crate::historic::HistoricTree;

/// `|π̲(H)|`: the number of insertion orders with historic tree `h`.
pub fn count_perms(h: &HistoricTree) -> BigUint {
    let m = h.m();
    let b = h.branchings().len();
    if b == 0 {
        return factorial(h.len());
    }
    let s = h.s_values().expect("a branching implies enough vertices");
    let leaves = s.iter().fold(BigUint::one(), |acc, &s| acc * factorial(m + s));
    split_factor(m).pow(b as u32) * leaves
}

/// Every insertion order (of `1..=n`) producing the shape and key layout of `t`.
///
/// Keys of `t` are first replaced by their ranks.
pub fn underline_pi(t: &KeyedBTree) -> Box<dyn Iterator<Item = Vec<usize>> + Send> {
    let t = t.standardized();
    if t.height() == 0 {
        return Box::new(all_permutations(t.key_count()));
    }
    let trimmed = t.trim().expect("height at least 1").standardized();
    Box::new(underline_pi(&trimmed).flat_map(move |pi1| {
        let pi_iota = lift(&pi1, &t).expect("height at least 1");
        let dag = build_dag(&t, &pi1).expect("pushed-key order fits the tree");
        let trees: Vec<HistoricTree> = dag.topological_labellings().expect("construction is acyclic").collect();
        trees.into_iter().flat_map(move |h| {
            enumerate_perms(&h, &pi_iota).expect("labelling is consistent with the pushed keys")
        })
    }))
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::btree::{run_permutation, History};
    use crate::historic::Slot::{Left, Only, Right};

    type Perm = Vec<usize>;

    /// Brute force: permutations of `1..=n` grouped by their historic tree.
    fn by_tree(m: usize, n: usize) -> BTreeMap<HistoricTree, (Vec<usize>, BTreeSet<Perm>)> {
        let mut out: BTreeMap<HistoricTree, (Vec<usize>, BTreeSet<Perm>)> = BTreeMap::new();
        for pi in all_permutations(n) {
            let (_, h, _) = run_permutation(m, &pi).unwrap();
            let tree = HistoricTree::from_history(&h).unwrap();
            let keys = psi(m, &pi).unwrap().pushed_key_values;
            let entry = out.entry(tree).or_insert_with(|| (keys.clone(), BTreeSet::new()));
            assert_eq!(entry.0, keys, "pushed keys depend only on the tree");
            entry.1.insert(pi);
        }
        out
    }

    #[test]
    fn worked_tree_count() {
        let h = HistoricTree::new(
            1,
            &[0, 1, 2, 3, 4, 5, 5, 7, 6],
            &[Only, Only, Only, Right, Only, Left, Right, Only, Only],
        )
        .unwrap();
        assert_eq!(count_perms(&h), BigUint::from(1296u32));
        let p3 = HistoricTree::new(1, &[0, 1, 2], &[Only; 3]).unwrap();
        assert_eq!(count_perms(&p3), BigUint::from(6u32));
        let p2 = HistoricTree::new(1, &[0, 1], &[Only; 2]).unwrap();
        assert_eq!(count_perms(&p2), BigUint::from(2u32));
    }

    #[test]
    fn streams_match_brute_force() {
        for (m, max) in [(1, 7), (2, 7)] {
            for n in 1..=max {
                let groups = by_tree(m, n);
                let mut total = BigUint::from(0u32);
                for (tree, (keys, perms)) in &groups {
                    let streamed: Vec<Perm> = enumerate_perms(tree, keys).unwrap().collect();
                    let set: BTreeSet<Perm> = streamed.iter().cloned().collect();
                    assert_eq!(set.len(), streamed.len(), "duplicate in stream");
                    assert_eq!(&set, perms, "m={m} n={n}");
                    assert_eq!(count_perms(tree), BigUint::from(perms.len()));
                    total += count_perms(tree);
                }
                assert_eq!(total, factorial(n));
                let trees: BTreeSet<&HistoricTree> = groups.keys().collect();
                assert_eq!(trees.len(), HistoricTree::enumerate_all(m, n).unwrap().len());
            }
        }
    }

    #[test]
    fn partition_law_n8() {
        let groups = by_tree(1, 8);
        let all = HistoricTree::enumerate_all(1, 8).unwrap();
        assert_eq!(groups.len(), all.len());
        let total: BigUint = all.iter().map(count_perms).sum();
        assert_eq!(total, factorial(8));
        for (tree, (keys, perms)) in &groups {
            assert_eq!(enumerate_perms(tree, keys).unwrap().len_hint(), Some(perms.len() as u128));
        }
    }

    #[test]
    fn labellings_match_histories() {
        for (m, n) in [(1, 8), (2, 8)] {
            let mut expected: BTreeMap<(KeyedBTree, Perm), BTreeSet<HistoricTree>> = BTreeMap::new();
            for pi in all_permutations(n) {
                let (t, h, _) = run_permutation(m, &pi).unwrap();
                if t.height() == 0 {
                    continue;
                }
                let shape_key = t.standardized();
                expected
                    .entry((shape_key, psi_hat(&h).unwrap()))
                    .or_default()
                    .insert(HistoricTree::from_history(&h).unwrap());
            }
            for ((t, pi1), trees) in expected {
                let dag = build_dag(&t, &pi1).unwrap();
                assert_eq!(dag.vertex_count(), n);
                let got: Vec<HistoricTree> = dag.topological_labellings().unwrap().collect();
                let set: BTreeSet<HistoricTree> = got.iter().cloned().collect();
                assert_eq!(set.len(), got.len());
                assert_eq!(set, trees, "t={t:?} pi1={pi1:?}");
            }
        }
    }

    #[test]
    fn labellings_cover_all_histories_with_given_order() {
        for n in 3..=8 {
            let mut by_order: BTreeMap<(Vec<usize>, Perm), BTreeSet<HistoricTree>> = BTreeMap::new();
            for h in History::enumerate_all(1, n).unwrap() {
                let tree = HistoricTree::from_history(&h).unwrap();
                by_order
                    .entry((h.final_shape().unwrap().leaf_sizes(), psi_hat(&h).unwrap()))
                    .or_default()
                    .insert(tree);
            }
            for ((sizes, pi1), trees) in by_order {
                let dag = InsertionDag::from_leaf_sizes(1, &pi1, &sizes).unwrap();
                let got: BTreeSet<HistoricTree> = dag.topological_labellings().unwrap().collect();
                assert_eq!(got, trees);
            }
        }
    }

    #[test]
    fn order_property_of_pushed_keys() {
        for (m, max) in [(1, 8), (2, 7)] {
            for pi in all_permutations(max) {
                let (_, h, _) = run_permutation(m, &pi).unwrap();
                let tree = HistoricTree::from_history(&h).unwrap();
                let rec = psi(m, &pi).unwrap();
                assert_eq!(rec.split_times, tree.branchings());
                for (&i, &k) in rec.split_times.iter().zip(&rec.pushed_key_values) {
                    for j in i + 1..=max {
                        assert_eq!(pi[j - 1] > k, tree.is_right_of(i, j).unwrap(), "pi={pi:?} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn underline_pi_matches_brute_force() {
        for (m, max) in [(1, 8), (2, 7)] {
            let mut groups: BTreeMap<KeyedBTree, BTreeSet<Perm>> = BTreeMap::new();
            for pi in all_permutations(max) {
                let (t, _, _) = run_permutation(m, &pi).unwrap();
                groups.entry(t).or_default().insert(pi);
            }
            for (t, perms) in groups {
                let got: Vec<Perm> = underline_pi(&t).collect();
                let set: BTreeSet<Perm> = got.iter().cloned().collect();
                assert_eq!(set.len(), got.len());
                assert_eq!(set, perms);
            }
        }
    }

    #[test]
    fn underline_pi_small() {
        let leaf = KeyedBTree::from_keys(1, &[2, 1]).unwrap();
        assert_eq!(underline_pi(&leaf).count(), 2);
        let t3 = KeyedBTree::from_keys(1, &[1, 2, 3]).unwrap();
        assert_eq!(underline_pi(&t3).count(), 6);
        let (t, _, _) = run_permutation(1, &[6, 1, 2, 4, 7, 5, 9, 8, 3]).unwrap();
        assert!(underline_pi(&t).any(|p| p == vec![6, 1, 2, 4, 7, 5, 9, 8, 3]));
    }
}
