//! Follows one insertion order through the whole recursive description: pushed keys, the
//! trimmed tree's permutation, its lift, the dependency graph and its labellings, and the
//! regeneration of the original order from its historic tree.

use btree_histories::permutations::{build_dag, count_perms, enumerate_perms, iota, lift, psi, psi_hat, underline_pi};
use btree_histories::{run_permutation, HistoricTree};

fn main() -> btree_histories::Result<()> {
    let pi = [6, 1, 2, 4, 7, 5, 9, 8, 3];
    let (tree, history, _) = run_permutation(1, &pi)?;
    println!("pi            {pi:?}");
    println!("history       {:?}", history.leaf_choices);

    let record = psi(1, &pi)?;
    println!("pushed keys   {:?} at times {:?}", record.pushed_key_values, record.split_times);
    println!("pi^(1)        {:?} (from the history alone: {:?})", record.standardized, psi_hat(&history)?);
    println!("iota          {:?}", iota(&tree)?);
    let pi_iota = lift(&record.standardized, &tree)?;
    println!("pi_iota       {pi_iota:?}");

    let dag = build_dag(&tree, &record.standardized)?;
    let labellings: Vec<HistoricTree> = dag.topological_labellings()?.collect();
    println!("dag           {} vertices, {} labellings", dag.vertex_count(), labellings.len());

    let h = HistoricTree::from_history(&history)?;
    let index = labellings.iter().position(|t| t == &h).expect("the history's tree is a labelling");
    println!("labelling #{index} is the historic tree of pi: {}", h.to_json());

    let stream = enumerate_perms(&h, &pi_iota)?;
    let total = count_perms(&h);
    let probe = enumerate_perms(&h, &pi_iota)?;
    let position = probe.enumerate().find(|(_, p)| p == &pi).map(|(i, _)| i).expect("pi is regenerated");
    let digits = stream.choices(position as u128);
    println!("pi is element #{position} of the {total} orders with this historic tree");
    println!("choice digits {digits:?} with radices {:?}", stream.radices());
    println!("regenerated   {:?}", stream.permutation_for(&digits).expect("digits in range"));
    println!("orders giving the same B-tree: {}", underline_pi(&tree).count());
    Ok(())
}
