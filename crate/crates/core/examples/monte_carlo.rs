//! Builds B-trees from random insertion orders and compares the average number of leaves
//! with the exact value.
//!
//! Usage: cargo run --release --example monte_carlo [m] [keys] [trials] [seed]

use btree_histories::statistics::{kappa, leaf_moments, monte_carlo_leaves};
use num_traits::ToPrimitive;

fn main() -> btree_histories::Result<()> {
    let arg = |i: usize, default: u64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (m, keys, trials, seed) = (arg(1, 1) as usize, arg(2, 10_000) as usize, arg(3, 1000) as usize, arg(4, 2024));

    let report = monte_carlo_leaves(m, keys, trials, seed)?;
    println!("m = {m}, {keys} keys, {trials} trials, seed {seed}");
    println!("sample mean     {:.4} ± {:.4}", report.mean, report.std_error);
    println!("sample variance {:.4}", report.variance);
    println!("skewness        {:.4}", report.skewness);

    let approx = kappa(m)?.value.to_f64().unwrap_or(f64::NAN);
    println!("κₘ/(m+1)! · (keys+1) = {:.4}", approx * (keys + 1) as f64);
    if keys <= 400 {
        let exact = leaf_moments(m, keys, false)?;
        println!("exact mean {} , exact variance {}", exact.mean, exact.variance);
    }
    Ok(())
}
