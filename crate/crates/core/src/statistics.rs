//! Weighted enumeration and the number of leaves of random B-trees.
//!
//! Each reduced historic tree `T` is weighted by the number of insertion orders producing it,
//! `w(T) = ((2m+1)!/(m!)²)^{b(T)} · Π (m+sᵢ)!`, and marked by `u^{e(T)}` where `e(T)` counts
//! external slots, i.e. leaves of the B-tree. With `wₙ(u) = Σ_{|T|=n} w(T) u^{e(T)}`,
//!
//! ```text
//! w_{n+m+1}(u) = (2m+1)!/(m!)² · Σ C(n,k) w_k(u) w_{n-k}(u),    wᵢ(u) = (m+i)! u  (i ≤ m),
//! ```
//!
//! and `wₙ(1) = (n+m)!`, so `[uᵉ] wₙ(u) / (n+m)!` is the probability that `n+m` random keys
//! produce `e` leaves. Differentiating in `u` at `u = 1` gives scalar recurrences for the
//! first two factorial moments, which is what the moment functions use.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::btree::KeyedBTree;
use crate::combinatorics::{binomial_row, factorial, split_factor};
use crate::error::{Error, Result};
use crate::historic::{HistoricTree, ReducedHistoricTree};
use crate::permutations::count_perms;

/// Polynomial in `u` with non-negative integer coefficients, stored from its lowest power.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UPoly {
    low: usize,
    coeffs: Vec<BigUint>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly::default()
    }

    pub fn monomial(c: BigUint, degree: usize) -> Self {
        UPoly { low: degree, coeffs: vec![c] }.normalized()
    }

    fn normalized(mut self) -> Self {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        self.coeffs.drain(..lead);
        self.low = if self.coeffs.is_empty() { 0 } else { self.low + lead };
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_degree(&self) -> Option<usize> {
        (!self.is_zero()).then_some(self.low)
    }

    pub fn max_degree(&self) -> Option<usize> {
        (!self.is_zero()).then(|| self.low + self.coeffs.len() - 1)
    }

    pub fn coefficient(&self, degree: usize) -> BigUint {
        degree
            .checked_sub(self.low)
            .and_then(|i| self.coeffs.get(i).cloned())
            .unwrap_or_default()
    }

    /// `(degree, coefficient)` for every non-zero term, ascending.
    pub fn terms(&self) -> Vec<(usize, BigUint)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.low + i, c.clone()))
            .collect()
    }

    pub fn eval_one(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    pub fn mul(&self, other: &UPoly) -> UPoly {
        if self.is_zero() || other.is_zero() {
            return UPoly::zero();
        }
        let mut coeffs = vec![BigUint::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        UPoly { low: self.low + other.low, coeffs }
    }

    pub fn scale(&self, c: &BigUint) -> UPoly {
        UPoly { low: self.low, coeffs: self.coeffs.iter().map(|x| x * c).collect() }.normalized()
    }

    pub fn add(&self, other: &UPoly) -> UPoly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let low = self.low.min(other.low);
        let high = self.max_degree().max(other.max_degree()).expect("non-zero");
        let coeffs = (low..=high).map(|d| self.coefficient(d) + other.coefficient(d)).collect();
        UPoly { low, coeffs }.normalized()
    }
}

impl std::fmt::Display for UPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms().iter().map(|(d, c)| format!("{c}u^{d}")).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Leaf-marked weighted counts `w₀(u)..=w_N(u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedSeriesTable {
    pub m: usize,
    pub w: Vec<UPoly>,
}

fn initial_weight(m: usize, i: usize) -> BigUint {
    factorial(m + i)
}

pub fn bivariate_counts(m: usize, n_max: usize) -> Result<WeightedSeriesTable> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let c = split_factor(m);
    let mut w: Vec<UPoly> = Vec::with_capacity(n_max + 1);
    for t in 0..=n_max {
        if t <= m {
            w.push(UPoly::monomial(initial_weight(m, t), 1));
            continue;
        }
        let n = t - m - 1;
        let row = binomial_row(n);
        let term = |k: usize| w[k].mul(&w[n - k]).scale(&row[k]);
        let half = (0..n.div_ceil(2)).into_par_iter().map(term).reduce(UPoly::zero, |a, b| a.add(&b));
        let mut total = half.scale(&BigUint::from(2u32));
        if n.is_multiple_of(2) {
            total = total.add(&term(n / 2));
        }
        w.push(total.scale(&c));
    }
    Ok(WeightedSeriesTable { m, w })
}

/// `wₙ(1)`, `wₙ'(1)` and `wₙ''(1)` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentSeries {
    pub m: usize,
    pub w: Vec<BigUint>,
    pub d1: Vec<BigUint>,
    pub d2: Vec<BigUint>,
}

pub fn moment_series(m: usize, n_max: usize) -> Result<MomentSeries> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let c = split_factor(m);
    let (mut w, mut d1, mut d2) = (Vec::new(), Vec::new(), Vec::<BigUint>::new());
    for t in 0..=n_max {
        if t <= m {
            w.push(initial_weight(m, t));
            d1.push(initial_weight(m, t));
            d2.push(BigUint::zero());
            continue;
        }
        let n = t - m - 1;
        let row = binomial_row(n);
        let (mut s0, mut s1, mut s2) = (BigUint::zero(), BigUint::zero(), BigUint::zero());
        for k in 0..=n {
            let j = n - k;
            s0 += &row[k] * &w[k] * &w[j];
            s1 += &row[k] * &w[k] * &d1[j];
            s2 += &row[k] * (&w[k] * &d2[j] + &d1[k] * &d1[j]);
        }
        w.push(&c * s0);
        d1.push(&c * s1 * 2u32);
        d2.push(&c * s2 * 2u32);
    }
    Ok(MomentSeries { m, w, d1, d2 })
}

fn ratio(a: &BigUint, b: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

/// Weight of a tree: the number of insertion orders whose history it encodes.
pub trait TreeWeight {
    fn weight(&self) -> BigUint;
}

impl TreeWeight for HistoricTree {
    fn weight(&self) -> BigUint {
        count_perms(self)
    }
}

impl TreeWeight for ReducedHistoricTree {
    fn weight(&self) -> BigUint {
        count_perms(&self.unreduce())
    }
}

pub fn tree_weight<T: TreeWeight>(t: &T) -> BigUint {
    t.weight()
}

/// Exact leaf-count statistics of a B-tree built from `key_count` random keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeafMoments {
    pub m: usize,
    pub key_count: usize,
    #[serde(serialize_with = "crate::serde_num::ratio")]
    pub mean: BigRational,
    #[serde(serialize_with = "crate::serde_num::ratio")]
    pub variance: BigRational,
    /// `(leaves, probability)` pairs, ascending in leaves.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "distribution_strings")]
    pub distribution: Option<Vec<(usize, BigRational)>>,
}

fn distribution_strings<S: serde::Serializer>(
    d: &Option<Vec<(usize, BigRational)>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<(usize, String)> =
        d.as_deref().unwrap_or_default().iter().map(|(e, p)| (*e, p.to_string())).collect();
    serde::Serialize::serialize(&pairs, s)
}

/// Mean and variance from the moment recurrences; the distribution, when requested, from
/// the full polynomial series.
pub fn leaf_moments(m: usize, key_count: usize, with_distribution: bool) -> Result<LeafMoments> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if key_count == 0 {
        return Err(Error::Inconsistent("a B-tree holds at least one key".into()));
    }
    if key_count <= 2 * m {
        return Ok(LeafMoments {
            m,
            key_count,
            mean: BigRational::one(),
            variance: BigRational::zero(),
            distribution: with_distribution.then(|| vec![(1, BigRational::one())]),
        });
    }
    let n = key_count - m;
    let s = moment_series(m, n)?;
    let mean = ratio(&s.d1[n], &s.w[n]);
    let variance = ratio(&s.d2[n], &s.w[n]) + &mean - &mean * &mean;
    let distribution = if with_distribution {
        let total = factorial(key_count);
        let poly = &bivariate_counts(m, n)?.w[n];
        Some(poly.terms().iter().map(|(e, c)| (*e, ratio(c, &total))).collect())
    } else {
        None
    };
    Ok(LeafMoments { m, key_count, mean, variance, distribution })
}

/// `mean_n / (n+m+1)` for reduced sizes `n = m+1..=N`, i.e. mean leaves per key plus one.
pub fn mean_ratio_trend(m: usize, n_max: usize) -> Result<Vec<(usize, BigRational)>> {
    let s = moment_series(m, n_max)?;
    Ok((m + 1..=n_max)
        .map(|n| {
            let mean = ratio(&s.d1[n], &s.w[n]);
            (n, mean / BigRational::from_integer(BigInt::from(n + m + 1)))
        })
        .collect())
}

pub fn harmonic(k: usize) -> BigRational {
    (1..=k).fold(BigRational::zero(), |acc, j| acc + BigRational::new(BigInt::one(), BigInt::from(j)))
}

/// Limit of mean leaves per key, `κₘ/(m+1)! = 1/(2(m+1)(H_{2m+2} − H_{m+1}))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KappaConstant {
    pub m: usize,
    #[serde(serialize_with = "crate::serde_num::ratio")]
    pub value: BigRational,
    /// `κₘ = m!/(2(H_{2m+2} − H_{m+1}))`.
    #[serde(serialize_with = "crate::serde_num::ratio")]
    pub kappa: BigRational,
    #[serde(serialize_with = "crate::serde_num::ratio")]
    pub h_2m_plus_2: BigRational,
    #[serde(serialize_with = "crate::serde_num::ratio")]
    pub h_m_plus_1: BigRational,
}

pub fn kappa(m: usize) -> Result<KappaConstant> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let h_2m_plus_2 = harmonic(2 * m + 2);
    let h_m_plus_1 = harmonic(m + 1);
    let diff = &h_2m_plus_2 - &h_m_plus_1;
    let int = |x: BigUint| BigRational::from_integer(BigInt::from(x));
    let value = (&diff * int(BigUint::from(2 * (m + 1)))).recip();
    let kappa = int(factorial(m)) / (&diff * int(BigUint::from(2u32)));
    Ok(KappaConstant { m, value, kappa, h_2m_plus_2, h_m_plus_1 })
}

/// Sample statistics of leaf counts over random insertion orders.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub m: usize,
    pub key_count: usize,
    pub trials: usize,
    pub seed: u64,
    pub partitions: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
    pub skewness: f64,
    /// Leaf count to number of trials.
    pub histogram: BTreeMap<usize, usize>,
}

pub const DEFAULT_PARTITIONS: usize = 8;

/// Leaf count of a tree built from `keys` inserted in order.
pub fn leaves_after_inserting(m: usize, keys: &[usize]) -> Result<usize> {
    let (first, rest) = keys
        .split_first()
        .ok_or_else(|| Error::Inconsistent("a B-tree holds at least one key".into()))?;
    let mut t = KeyedBTree::singleton(m, *first)?;
    for &k in rest {
        t.insert_untracked(k)?;
    }
    Ok(t.leaf_count())
}

/// Trials are split into `partitions` contiguous blocks; block `p` draws from ChaCha8 seeded
/// with `seed` on stream `p`, shuffling `1..=key_count` by Fisher–Yates for each trial.
pub fn monte_carlo_leaves_partitioned(
    m: usize,
    key_count: usize,
    trials: usize,
    seed: u64,
    partitions: usize,
) -> Result<MonteCarloReport> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if trials == 0 || key_count == 0 || partitions == 0 {
        return Err(Error::Inconsistent("trials, key count and partitions must be positive".into()));
    }
    let blocks: Vec<Vec<usize>> = (0..partitions)
        .into_par_iter()
        .map(|p| {
            let from = p * trials / partitions;
            let to = (p + 1) * trials / partitions;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut keys: Vec<usize> = (1..=key_count).collect();
            (from..to)
                .map(|_| {
                    keys.shuffle(&mut rng);
                    leaves_after_inserting(m, &keys).expect("distinct keys")
                })
                .collect()
        })
        .collect();
    let samples: Vec<usize> = blocks.into_iter().flatten().collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<usize>() as f64 / n;
    let central = |k: i32| samples.iter().map(|&x| (x as f64 - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3) = (central(2), central(3));
    let variance = if samples.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let mut histogram = BTreeMap::new();
    for &x in &samples {
        *histogram.entry(x).or_insert(0) += 1;
    }
    Ok(MonteCarloReport {
        m,
        key_count,
        trials,
        seed,
        partitions,
        mean,
        variance,
        std_error: (variance / n).sqrt(),
        skewness,
        histogram,
    })
}

pub fn monte_carlo_leaves(m: usize, key_count: usize, trials: usize, seed: u64) -> Result<MonteCarloReport> {
    monte_carlo_leaves_partitioned(m, key_count, trials, seed, DEFAULT_PARTITIONS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::all_permutations;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn u(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn first_polynomials_m1() {
        let w = bivariate_counts(1, 3).unwrap().w;
        assert_eq!(w[0], UPoly::monomial(u(1), 1));
        assert_eq!(w[1], UPoly::monomial(u(2), 1));
        assert_eq!(w[2], UPoly::monomial(u(6), 2));
        assert_eq!(w[3], UPoly::monomial(u(24), 2));
        assert_eq!(w[3].to_string(), "24u^2");
    }

    #[test]
    fn totals_are_factorials() {
        for m in 1..=3 {
            let t = bivariate_counts(m, 40).unwrap();
            let s = moment_series(m, 40).unwrap();
            for (n, p) in t.w.iter().enumerate() {
                assert_eq!(p.eval_one(), factorial(n + m));
                assert_eq!(s.w[n], factorial(n + m));
                let d1: BigUint = p.terms().iter().map(|(e, c)| c * BigUint::from(*e)).sum();
                let d2: BigUint = p.terms().iter().map(|(e, c)| c * BigUint::from(e * e.saturating_sub(1))).sum();
                assert_eq!(s.d1[n], d1);
                assert_eq!(s.d2[n], d2);
            }
        }
    }

    #[test]
    fn weights_of_small_trees() {
        let trees = ReducedHistoricTree::enumerate_all(1, 2).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(tree_weight(&trees[0]), u(6));
        let trees = ReducedHistoricTree::enumerate_all(1, 3).unwrap();
        assert!(trees.iter().all(|t| tree_weight(t) == u(12)));
        for m in 1..=3 {
            for n in 0..=m {
                let t = &ReducedHistoricTree::enumerate_all(m, n).unwrap()[0];
                assert_eq!(tree_weight(t), factorial(n + m));
            }
        }
    }

    #[test]
    fn polynomial_identity_by_enumeration() {
        for (m, max) in [(1, 8), (2, 7)] {
            let table = bivariate_counts(m, max).unwrap();
            for n in 0..=max {
                let mut poly = UPoly::zero();
                for t in ReducedHistoricTree::enumerate_all(m, n).unwrap() {
                    poly = poly.add(&UPoly::monomial(tree_weight(&t), t.external_slot_count()));
                }
                assert_eq!(poly, table.w[n], "m={m} n={n}");
            }
        }
    }

    #[test]
    fn closed_form_values() {
        let l13 = leaf_moments(1, 13, false).unwrap();
        assert_eq!(l13.mean, q(6, 1));
        assert_eq!(l13.variance, q(24, 91));
        let l3 = leaf_moments(1, 3, true).unwrap();
        assert_eq!((l3.mean, l3.variance), (q(2, 1), q(0, 1)));
        let l6 = leaf_moments(1, 6, false).unwrap();
        assert_eq!((l6.mean, l6.variance), (q(3, 1), q(0, 1)));
        assert_eq!(leaf_moments(1, 5, false).unwrap().mean, q(13, 5));
        for keys in 6..=60 {
            let l = leaf_moments(1, keys, false).unwrap();
            assert_eq!(l.mean, q(3 * (keys as i64 + 1), 7));
            if keys > 11 {
                assert_eq!(l.variance, q(12 * (keys as i64 + 1), 637));
            }
        }
    }

    #[test]
    fn distributions_match_brute_force() {
        for (m, keys) in [(1, 5), (1, 7), (2, 7)] {
            let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
            for pi in all_permutations(keys) {
                *counts.entry(leaves_after_inserting(m, &pi).unwrap()).or_default() += 1;
            }
            let total = factorial(keys);
            let expected: Vec<(usize, BigRational)> =
                counts.iter().map(|(&e, &c)| (e, ratio(&BigUint::from(c), &total))).collect();
            let got = leaf_moments(m, keys, true).unwrap();
            assert_eq!(got.distribution.unwrap(), expected);
        }
    }

    #[test]
    fn small_key_counts() {
        let l = leaf_moments(2, 3, true).unwrap();
        assert_eq!(l.mean, q(1, 1));
        assert_eq!(l.distribution.unwrap(), vec![(1, q(1, 1))]);
        assert!(leaf_moments(1, 0, false).is_err());
    }

    #[test]
    fn kappa_table() {
        let expected = [
            (3, 7),
            (10, 37),
            (105, 533),
            (252, 1627),
            (2310, 18107),
            (25740, 237371),
            (9009, 95549),
            (136136, 1632341),
            (11639628, 155685007),
            (10581480, 156188887),
        ];
        for (m, (a, b)) in (1..=10).zip(expected) {
            assert_eq!(kappa(m).unwrap().value, q(a, b), "m={m}");
        }
        assert_eq!(kappa(1).unwrap().kappa, q(6, 7));
    }

    #[test]
    fn trend_m1_is_constant() {
        for (n, r) in mean_ratio_trend(1, 40).unwrap() {
            if n > 4 {
                assert_eq!(r, q(3, 7));
            }
        }
    }

    #[test]
    fn monte_carlo_small() {
        let r = monte_carlo_leaves(1, 3, 50, 7).unwrap();
        assert_eq!(r.histogram, BTreeMap::from([(2, 50)]));
        assert_eq!(r.mean, 2.0);
        let a = monte_carlo_leaves(1, 200, 64, 42).unwrap();
        let b = monte_carlo_leaves(1, 200, 64, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, monte_carlo_leaves(1, 200, 64, 43).unwrap());
    }
}
