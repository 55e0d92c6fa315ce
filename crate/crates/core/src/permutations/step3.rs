use itertools::Itertools;

use crate::combinatorics::unrank_permutation;
use crate::error::{Error, Result};
use crate::historic::{HistoricTree, Slot};

/// One node of the recursion: either a free block or a split around its first pushed key.
#[derive(Clone, Debug)]
enum Plan {
    /// Positions `1..=size` take the values `lo..lo+size` in any order.
    Free { lo: usize, size: usize },
    Split {
        size: usize,
        key: usize,
        /// For positions after the first `2m+1`: whether the value is below `key`.
        tail_small: Vec<bool>,
        below: Box<Plan>,
        above: Box<Plan>,
    },
}

fn checked_factorial(n: usize) -> Result<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k)).ok_or_else(|| {
        Error::Inconsistent(format!("{n}! exceeds the machine word used for stream indexing"))
    })
}

/// Vertices strictly below `v`, ascending.
fn descendants(h: &HistoricTree, v: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = h.children(v);
    while let Some(c) = stack.pop() {
        out.push(c);
        stack.extend(h.children(c));
    }
    out.sort_unstable();
    out
}

/// A stem of `m` vertices with `subtree` (labels of `h`, rooted at a child of a branching)
/// hung below its last vertex.
fn side_tree(h: &HistoricTree, subtree: &[usize]) -> Result<HistoricTree> {
    let m = h.m();
    let mut parent: Vec<usize> = (0..m).collect();
    let mut slot = vec![Slot::Only; m];
    let new_label = |old: usize| subtree.binary_search(&old).ok().map(|i| m + 1 + i);
    for &v in subtree {
        let p = h.parent(v).expect("subtree vertices are not the root");
        match new_label(p) {
            Some(np) => {
                parent.push(np);
                slot.push(h.slot(v));
            }
            None => {
                parent.push(m);
                slot.push(Slot::Only);
            }
        }
    }
    HistoricTree::new(m, &parent, &slot)
}

impl Plan {
    fn build(h: &HistoricTree, lo: usize, keys: &[usize]) -> Result<Plan> {
        let m = h.m();
        let size = h.len();
        let branchings = h.branchings();
        if keys.len() != branchings.len() {
            return Err(Error::Inconsistent(format!(
                "{} keys for {} branchings",
                keys.len(),
                branchings.len()
            )));
        }
        if let Some(&k) = keys.iter().find(|&&k| k < lo || k >= lo + size) {
            return Err(Error::Inconsistent(format!("key {k} outside {lo}..{}", lo + size)));
        }
        if size <= 2 * m {
            return Ok(Plan::Free { lo, size });
        }
        let top = 2 * m + 1;
        let key = keys[0];
        let kids = h.children(top);
        let side = |s: Slot| -> Vec<usize> {
            kids.iter()
                .find(|&&c| h.slot(c) == s)
                .map(|&c| {
                    let mut d = descendants(h, c);
                    d.insert(0, c);
                    d.sort_unstable();
                    d
                })
                .unwrap_or_default()
        };
        let left = side(Slot::Left);
        let right = side(Slot::Right);
        if m + left.len() != key - lo {
            return Err(Error::Inconsistent(format!(
                "key {key} needs {} smaller values but the left side holds {}",
                key - lo,
                m + left.len()
            )));
        }
        let tail_small = (top + 1..=size).map(|v| left.binary_search(&v).is_ok()).collect();
        let below_keys: Vec<usize> = keys[1..].iter().copied().filter(|&k| k < key).collect();
        let above_keys: Vec<usize> = keys[1..].iter().copied().filter(|&k| k > key).collect();
        let below = Plan::build(&side_tree(h, &left)?, lo, &below_keys)?;
        let above = Plan::build(&side_tree(h, &right)?, key + 1, &above_keys)?;
        Ok(Plan::Split { size, key, tail_small, below: Box::new(below), above: Box::new(above) })
    }

    /// Radices in pre-order: this node, then the lower side, then the upper side.
    fn radices(&self, m: usize, subsets: usize, out: &mut Vec<usize>) -> Result<()> {
        match self {
            Plan::Free { size, .. } => out.push(checked_factorial(*size)?),
            Plan::Split { below, above, .. } => {
                out.push((2 * m + 1) * subsets);
                below.radices(m, subsets, out)?;
                above.radices(m, subsets, out)?;
            }
        }
        Ok(())
    }

    /// Builds the permutation selected by `digits`, consuming them in pre-order.
    fn realize(&self, m: usize, subsets: &[Vec<usize>], digits: &mut std::slice::Iter<'_, usize>) -> Vec<usize> {
        let d = *digits.next().expect("one digit per plan node");
        match self {
            Plan::Free { lo, size } => {
                let values: Vec<usize> = (*lo..lo + size).collect();
                unrank_permutation(&values, d)
            }
            Plan::Split { size, key, tail_small, below, above } => {
                let head = 2 * m + 1;
                let at = d / subsets.len();
                let subset = &subsets[d % subsets.len()];
                let others: Vec<usize> = (0..head).filter(|&p| p != at).collect();
                let mut small = Vec::with_capacity(*size);
                let mut large = Vec::with_capacity(*size);
                for (i, &p) in others.iter().enumerate() {
                    if subset.contains(&i) {
                        small.push(p);
                    } else {
                        large.push(p);
                    }
                }
                for (i, &is_small) in tail_small.iter().enumerate() {
                    if is_small {
                        small.push(head + i);
                    } else {
                        large.push(head + i);
                    }
                }
                let lower = below.realize(m, subsets, digits);
                let upper = above.realize(m, subsets, digits);
                let mut p = vec![0; *size];
                p[at] = *key;
                for (&pos, v) in small.iter().zip(lower) {
                    p[pos] = v;
                }
                for (&pos, v) in large.iter().zip(upper) {
                    p[pos] = v;
                }
                p
            }
        }
    }
}

/// Lazily lists every insertion order whose historic tree is `h`, given the pushed keys.
pub struct PermutationStream {
    m: usize,
    plan: Plan,
    subsets: Vec<Vec<usize>>,
    radices: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl PermutationStream {
    pub fn new(h: &HistoricTree, pi_iota: &[usize]) -> Result<Self> {
        let m = h.m();
        let plan = Plan::build(h, 1, pi_iota)?;
        let subsets: Vec<Vec<usize>> = (0..2 * m).combinations(m).collect();
        let mut radices = Vec::new();
        plan.radices(m, subsets.len(), &mut radices)?;
        let digits = vec![0; radices.len()];
        Ok(PermutationStream { m, plan, subsets, radices, digits, done: false })
    }

    /// Number of permutations the stream yields, if it fits in a `u128`.
    pub fn len_hint(&self) -> Option<u128> {
        self.radices.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
    }

    /// One radix per recursion node in pre-order. A split node's digit `d` places the pushed
    /// key at head position `d / C(2m,m)` and picks the `(d mod C(2m,m))`-th lexicographic
    /// m-subset of the remaining head positions as the smaller values; a free node's digit
    /// ranks its values lexicographically.
    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Mixed-radix digits of the `index`-th element of the stream.
    pub fn choices(&self, mut index: u128) -> Vec<usize> {
        let mut digits = vec![0; self.radices.len()];
        for (d, &r) in digits.iter_mut().zip(&self.radices).rev() {
            *d = (index % r as u128) as usize;
            index /= r as u128;
        }
        digits
    }

    /// The permutation selected by an explicit choice sequence.
    pub fn permutation_for(&self, digits: &[usize]) -> Option<Vec<usize>> {
        let fits = digits.len() == self.radices.len() && digits.iter().zip(&self.radices).all(|(d, r)| d < r);
        fits.then(|| self.plan.realize(self.m, &self.subsets, &mut digits.iter()))
    }
}

impl Iterator for PermutationStream {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let p = self.plan.realize(self.m, &self.subsets, &mut self.digits.iter());
        self.done = true;
        for i in (0..self.digits.len()).rev() {
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                self.done = false;
                break;
            }
            self.digits[i] = 0;
        }
        Some(p)
    }
}

pub fn enumerate_perms(h: &HistoricTree, pi_iota: &[usize]) -> Result<PermutationStream> {
    PermutationStream::new(h, pi_iota)
}
