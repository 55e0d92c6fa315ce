//! Maps every insertion history of a given length to its historic tree and back, checking
//! that the correspondence is one-to-one and that slots, branchings and s-values line up
//! with the B-tree after every step.
//!
//! Usage: cargo run --release --example history_bijection [m] [keys]

use std::collections::HashSet;

use btree_histories::{HistoricTree, History};

fn main() -> btree_histories::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let n: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(8);

    let histories = History::enumerate_all(m, n)?;
    let mut trees = HashSet::new();
    let mut violations = 0;
    for h in &histories {
        let tree = HistoricTree::from_history(h)?;
        assert_eq!(&tree.to_history(), h, "round trip");
        violations += tree.check_correspondence().violations.len();
        trees.insert(tree);
    }
    println!("m = {m}, {n} keys: {} histories, {} distinct historic trees", histories.len(), trees.len());
    println!("per-step correspondence violations: {violations}");

    let example = History::new(1, vec![1, 1, 2, 2, 2, 3, 3, 2])?;
    let tree = HistoricTree::from_history(&example)?;
    println!("history {:?}", example.leaf_choices);
    println!("tree    {}", tree.to_json());
    println!("reduced {}", tree.reduce()?.to_json());
    println!("branchings {:?}, s-values {:?}", tree.branchings(), tree.s_values()?);
    Ok(())
}
