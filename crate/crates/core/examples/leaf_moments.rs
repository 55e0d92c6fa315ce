//! Exact distribution, mean and variance of the number of leaves of a B-tree built from
//! random keys, together with the limiting leaves-per-key constants.
//!
//! Usage: cargo run --release --example leaf_moments [m] [keys]

use btree_histories::statistics::{kappa, leaf_moments, mean_ratio_trend};
use num_traits::ToPrimitive;

fn main() -> btree_histories::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let keys: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(13);

    let moments = leaf_moments(m, keys, true)?;
    println!("m = {m}, {keys} keys: mean {}, variance {}", moments.mean, moments.variance);
    for (leaves, p) in moments.distribution.unwrap_or_default() {
        println!("  P(L = {leaves:>3}) = {p}");
    }

    let trend = mean_ratio_trend(m, 120)?;
    for (n, r) in trend.iter().filter(|(n, _)| n % 30 == 0) {
        println!("  n = {n:>3}: mean/(n+m+1) = {:.6}", r.to_f64().unwrap_or(f64::NAN));
    }
    for m in 1..=10 {
        let k = kappa(m)?;
        println!("κ_{m}/({}!) = {}", m + 1, k.value);
    }
    Ok(())
}
