//! Inserts a permutation into a B-tree of order 2m+1, printing each step's receiving leaf and
//! splits, then the final tree as JSON and Graphviz.
//!
//! Usage: cargo run --example insertion_history [m] [comma-separated keys]

use btree_histories::run_permutation;

fn main() -> btree_histories::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let keys: Vec<usize> = std::env::args()
        .nth(2)
        .map(|s| s.split(',').filter_map(|k| k.trim().parse().ok()).collect())
        .unwrap_or_else(|| vec![6, 1, 2, 4, 7, 5, 9, 8, 3]);

    let (tree, history, traces) = run_permutation(m, &keys)?;
    for (key, trace) in keys[1..].iter().zip(&traces) {
        print!("insert {key:>3} into leaf {}", trace.receiving_leaf_index);
        if trace.splits_propagated > 0 {
            print!("  splits {}, pushed {:?}", trace.splits_propagated, trace.pushed_keys);
        }
        if trace.root_split {
            print!(", new root");
        }
        println!();
    }
    println!("history      {}", history.to_json());
    println!("tree         {}", tree.to_json());
    println!("leaf sizes   {:?}", tree.leaf_sizes());
    println!("valid        {}", tree.validate().is_valid());
    print!("{}", tree.to_dot());
    Ok(())
}
