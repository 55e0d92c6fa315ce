//! Small exact-arithmetic and permutation helpers shared by the other modules.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `(2m+1)! / (m!)^2`, the number of ways to lay out one leaf split.
pub fn split_factor(m: usize) -> BigUint {
    factorial(2 * m + 1) / (factorial(m) * factorial(m))
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * BigUint::from(n - k) / BigUint::from(k + 1);
        row.push(c.clone());
    }
    row
}

/// Checks that `pi` is a permutation of `1..=pi.len()`.
pub fn check_permutation(pi: &[usize]) -> Result<()> {
    let n = pi.len();
    let mut seen = vec![false; n];
    for &v in pi {
        if v == 0 || v > n || seen[v - 1] {
            return Err(Error::NotAPermutation(n));
        }
        seen[v - 1] = true;
    }
    Ok(())
}

/// Replaces each entry by its rank among the entries (1-based).
pub fn standardize(values: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by_key(|&i| values[i]);
    let mut out = vec![0; values.len()];
    for (rank, i) in order.into_iter().enumerate() {
        out[i] = rank + 1;
    }
    out
}

/// The `index`-th permutation (lexicographic, 0-based) of `values`, which must be sorted.
pub fn unrank_permutation(values: &[usize], mut index: usize) -> Vec<usize> {
    let mut pool = values.to_vec();
    let mut out = Vec::with_capacity(pool.len());
    let mut fact: usize = (1..pool.len()).product();
    while !pool.is_empty() {
        let k = pool.len() - 1;
        let pick = index / fact.max(1);
        index %= fact.max(1);
        out.push(pool.remove(pick));
        fact = fact.checked_div(k).unwrap_or(fact);
    }
    out
}

/// All permutations of `1..=n` in lexicographic order.
pub fn all_permutations(n: usize) -> impl Iterator<Item = Vec<usize>> {
    use itertools::Itertools;
    (1..=n).permutations(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_factor_small_orders() {
        assert_eq!(split_factor(1), BigUint::from(6u32));
        assert_eq!(split_factor(2), BigUint::from(30u32));
        assert_eq!(split_factor(3), BigUint::from(140u32));
    }

    #[test]
    fn binomial_rows() {
        let row: Vec<u64> = binomial_row(5).iter().map(|c| c.try_into().unwrap()).collect();
        assert_eq!(row, vec![1, 5, 10, 10, 5, 1]);
        assert_eq!(binomial_row(0).len(), 1);
    }

    #[test]
    fn standardize_ranks() {
        assert_eq!(standardize(&[2, 6, 8, 4]), vec![1, 3, 4, 2]);
        assert_eq!(standardize(&[]), Vec::<usize>::new());
    }

    #[test]
    fn unranking_matches_lexicographic_order() {
        let lex: Vec<Vec<usize>> = all_permutations(4).collect();
        for (i, p) in lex.iter().enumerate() {
            assert_eq!(&unrank_permutation(&[1, 2, 3, 4], i), p);
        }
        assert_eq!(unrank_permutation(&[7], 0), vec![7]);
        assert!(unrank_permutation(&[], 0).is_empty());
    }

    #[test]
    fn permutation_check() {
        assert!(check_permutation(&[3, 1, 2]).is_ok());
        assert!(check_permutation(&[1, 1, 2]).is_err());
        assert!(check_permutation(&[0, 1]).is_err());
        assert!(check_permutation(&[1, 4]).is_err());
    }
}
