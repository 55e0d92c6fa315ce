//! Exact history counts from the coefficient recurrence, checked against explicit growth of
//! reduced historic trees and against replaying every B-tree insertion history.
//!
//! Usage: cargo run --release --example history_counts [m] [N]

use btree_histories::enumeration::{brute_force_historic_count, brute_force_history_count, history_counts};

fn main() -> btree_histories::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let n: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let table = history_counts(m, n)?;
    println!("{:>3} {:>8} {:>30} {:>10} {:>10}", "n", "keys", "h_n", "trees", "histories");
    for (k, h) in table.h.iter().enumerate() {
        let (trees, histories) = if k <= 9 {
            (brute_force_historic_count(m, k)?.to_string(), brute_force_history_count(m, k + m)?.to_string())
        } else {
            ("-".into(), "-".into())
        };
        println!("{k:>3} {:>8} {h:>30} {trees:>10} {histories:>10}", k + m);
    }
    Ok(())
}
