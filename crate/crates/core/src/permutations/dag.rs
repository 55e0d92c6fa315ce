use std::collections::VecDeque;

use serde::Serialize;

use crate::btree::KeyedBTree;
use crate::combinatorics::check_permutation;
use crate::error::{Error, Result};
use crate::historic::{HistoricTree, Slot};

/// Unlabelled historic skeleton plus a red path through its branchings.
///
/// Every topological labelling of this graph yields a historic tree whose histories all
/// push their keys in the order prescribed by the permutation the graph was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InsertionDag {
    m: usize,
    parent: Vec<Option<usize>>,
    slot: Vec<Slot>,
    /// Branching vertices in the order of the permutation.
    red_path: Vec<usize>,
    /// Vertices hung above each external slot, left to right.
    chain_lengths: Vec<usize>,
}

#[derive(Default)]
struct Bst {
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl Bst {
    /// Node `v` stores value `v + 1`.
    fn from_sequence(pi: &[usize]) -> (Bst, usize) {
        let n = pi.len();
        let mut bst = Bst { left: vec![None; n], right: vec![None; n] };
        let root = pi[0] - 1;
        for &v in &pi[1..] {
            let v = v - 1;
            let mut at = root;
            loop {
                let next = if v < at { &mut bst.left[at] } else { &mut bst.right[at] };
                match *next {
                    Some(c) => at = c,
                    None => {
                        *next = Some(v);
                        break;
                    }
                }
            }
        }
        (bst, root)
    }

    fn null_count(&self) -> usize {
        self.left.iter().chain(&self.right).filter(|c| c.is_none()).count()
    }
}

impl InsertionDag {
    /// Builds the graph for a tree `t` of height at least 1 and a permutation `pi1` of its
    /// non-leaf keys.
    pub fn new(t: &KeyedBTree, pi1: &[usize]) -> Result<Self> {
        if t.height() == 0 {
            return Err(Error::TrimLeafRoot);
        }
        Self::from_leaf_sizes(t.m(), pi1, &t.leaf_sizes())
    }

    /// Same as [`InsertionDag::new`] with only the leaf sizes of the tree.
    pub fn from_leaf_sizes(m: usize, pi1: &[usize], leaf_sizes: &[usize]) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        if pi1.is_empty() {
            return Err(Error::Inconsistent("the permutation of non-leaf keys is empty".into()));
        }
        check_permutation(pi1)?;
        if leaf_sizes.len() != pi1.len() + 1 {
            return Err(Error::Inconsistent(format!(
                "{} leaves but {} non-leaf keys",
                leaf_sizes.len(),
                pi1.len()
            )));
        }
        if let Some(&bad) = leaf_sizes.iter().find(|&&s| s < m || s > 2 * m) {
            return Err(Error::Inconsistent(format!("leaf of size {bad} outside [{m}, {}]", 2 * m)));
        }
        let (bst, root) = Bst::from_sequence(pi1);
        debug_assert_eq!(bst.null_count(), leaf_sizes.len());

        let mut dag = InsertionDag {
            m,
            parent: Vec::new(),
            slot: Vec::new(),
            red_path: Vec::new(),
            chain_lengths: leaf_sizes.iter().map(|s| s - m).collect(),
        };
        let mut prev = None;
        for _ in 0..2 * m {
            prev = Some(dag.push(prev, Slot::Only));
        }
        let mut branching_of = vec![0; pi1.len()];
        let mut leaves = dag.chain_lengths.clone().into_iter();
        dag.grow(&bst, root, prev, Slot::Only, &mut branching_of, &mut leaves);
        dag.red_path = pi1.iter().map(|&v| branching_of[v - 1]).collect();
        Ok(dag)
    }

    fn push(&mut self, parent: Option<usize>, slot: Slot) -> usize {
        self.parent.push(parent);
        self.slot.push(slot);
        self.parent.len() - 1
    }

    fn chain(&mut self, parent: usize, side: Slot, len: usize) -> Option<usize> {
        let mut at = None;
        for i in 0..len {
            let (p, s) = if i == 0 { (parent, side) } else { (at.unwrap(), Slot::Only) };
            at = Some(self.push(Some(p), s));
        }
        at
    }

    fn grow(
        &mut self,
        bst: &Bst,
        node: usize,
        parent: Option<usize>,
        slot: Slot,
        branching_of: &mut [usize],
        leaves: &mut impl Iterator<Item = usize>,
    ) {
        let v = self.push(parent, slot);
        branching_of[node] = v;
        for (side, child) in [(Slot::Left, bst.left[node]), (Slot::Right, bst.right[node])] {
            match child {
                Some(c) => {
                    let above = self.chain(v, side, self.m).expect("m >= 1");
                    self.grow(bst, c, Some(above), Slot::Only, branching_of, leaves);
                }
                None => {
                    let s = leaves.next().expect("one chain per null child");
                    self.chain(v, side, s);
                }
            }
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn branching_count(&self) -> usize {
        self.red_path.len()
    }

    pub fn red_path(&self) -> &[usize] {
        &self.red_path
    }

    pub fn chain_lengths(&self) -> &[usize] {
        &self.chain_lengths
    }

    /// Black tree edges followed by red path edges, as `(from, to)` vertex ids.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> =
            self.parent.iter().enumerate().filter_map(|(v, p)| p.map(|p| (p, v))).collect();
        out.extend(self.red_path.windows(2).map(|w| (w[0], w[1])));
        out
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.vertex_count()];
        for (a, b) in self.edges() {
            succ[a].push(b);
        }
        succ
    }

    /// Kahn's algorithm; fails if some vertex is never freed.
    pub fn check_acyclic(&self) -> Result<()> {
        let succ = self.successors();
        let mut indeg = vec![0usize; succ.len()];
        succ.iter().flatten().for_each(|&b| indeg[b] += 1);
        let mut queue: VecDeque<usize> = (0..succ.len()).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        if seen == succ.len() {
            Ok(())
        } else {
            Err(Error::Cycle)
        }
    }

    /// The historic tree induced by giving vertex `v` the label `labels[v]`.
    pub fn induced_tree(&self, labels: &[usize]) -> Result<HistoricTree> {
        let n = self.vertex_count();
        let mut parent = vec![0; n];
        let mut slot = vec![Slot::Only; n];
        for v in 0..n {
            parent[labels[v] - 1] = self.parent[v].map_or(0, |p| labels[p]);
            slot[labels[v] - 1] = self.slot[v];
        }
        HistoricTree::new(self.m, &parent, &slot)
    }

    /// Lazily lists every topological labelling, as induced historic trees.
    pub fn topological_labellings(&self) -> Result<TopologicalLabellings<'_>> {
        self.check_acyclic()?;
        Ok(TopologicalLabellings::new(self))
    }
}

pub fn build_dag(t: &KeyedBTree, pi1: &[usize]) -> Result<InsertionDag> {
    InsertionDag::new(t, pi1)
}

pub fn topological_labellings(g: &InsertionDag) -> Result<TopologicalLabellings<'_>> {
    g.topological_labellings()
}

/// Backtracking enumeration; at each depth the free sources are tried in ascending id.
pub struct TopologicalLabellings<'a> {
    dag: &'a InsertionDag,
    succ: Vec<Vec<usize>>,
    indeg: Vec<usize>,
    used: Vec<bool>,
    /// (sources available at this depth, index of the chosen one)
    frames: Vec<(Vec<usize>, usize)>,
    started: bool,
    done: bool,
}

impl<'a> TopologicalLabellings<'a> {
    fn new(dag: &'a InsertionDag) -> Self {
        let succ = dag.successors();
        let mut indeg = vec![0usize; succ.len()];
        succ.iter().flatten().for_each(|&b| indeg[b] += 1);
        TopologicalLabellings {
            dag,
            used: vec![false; succ.len()],
            succ,
            indeg,
            frames: Vec::new(),
            started: false,
            done: false,
        }
    }

    fn take(&mut self, v: usize) {
        self.used[v] = true;
        for &w in &self.succ[v] {
            self.indeg[w] -= 1;
        }
    }

    fn release(&mut self, v: usize) {
        self.used[v] = false;
        for &w in &self.succ[v] {
            self.indeg[w] += 1;
        }
    }

    fn descend(&mut self) {
        while self.frames.len() < self.succ.len() {
            let free: Vec<usize> = (0..self.succ.len()).filter(|&v| !self.used[v] && self.indeg[v] == 0).collect();
            let first = free[0];
            self.frames.push((free, 0));
            self.take(first);
        }
    }

    /// Moves to the next choice; false when exhausted.
    fn advance(&mut self) -> bool {
        while let Some((free, idx)) = self.frames.pop() {
            self.release(free[idx]);
            if idx + 1 < free.len() {
                let v = free[idx + 1];
                self.frames.push((free, idx + 1));
                self.take(v);
                return true;
            }
        }
        false
    }
}

impl Iterator for TopologicalLabellings<'_> {
    type Item = HistoricTree;

    fn next(&mut self) -> Option<HistoricTree> {
        if self.done {
            return None;
        }
        if self.started {
            if !self.advance() {
                self.done = true;
                return None;
            }
        } else {
            self.started = true;
        }
        self.descend();
        let mut labels = vec![0; self.succ.len()];
        for (pos, (free, idx)) in self.frames.iter().enumerate() {
            labels[free[*idx]] = pos + 1;
        }
        Some(self.dag.induced_tree(&labels).expect("a topological labelling induces a historic tree"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btree::run_permutation;
    use crate::historic::Slot::{Left, Only, Right};

    #[test]
    fn worked_example_dag() {
        let (t, _, _) = run_permutation(1, &[6, 1, 2, 4, 7, 5, 9, 8, 3]).unwrap();
        let g = build_dag(&t, &[1, 3, 4, 2]).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.branching_count(), 4);
        let trees: Vec<HistoricTree> = g.topological_labellings().unwrap().collect();
        assert_eq!(trees.len(), 3);
        let fig = HistoricTree::new(
            1,
            &[0, 1, 2, 3, 4, 5, 5, 7, 6],
            &[Only, Only, Only, Right, Only, Left, Right, Only, Only],
        )
        .unwrap();
        assert!(trees.contains(&fig));
    }

    #[test]
    fn single_branching_is_a_path() {
        let g = InsertionDag::from_leaf_sizes(1, &[1], &[1, 1]).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.topological_labellings().unwrap().count(), 1);
        let g = InsertionDag::from_leaf_sizes(2, &[1], &[3, 4]).unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert_eq!(g.chain_lengths(), &[1, 2]);
    }

    #[test]
    fn inconsistent_inputs() {
        assert!(InsertionDag::from_leaf_sizes(1, &[1, 2], &[1, 1]).is_err());
        assert!(InsertionDag::from_leaf_sizes(1, &[1], &[1, 3]).is_err());
        assert!(InsertionDag::from_leaf_sizes(1, &[2, 2], &[1, 1, 1]).is_err());
        let leaf = crate::btree::KeyedBTree::singleton(1, 1).unwrap();
        assert!(build_dag(&leaf, &[1]).is_err());
    }

    #[test]
    fn cycle_detected() {
        let mut g = InsertionDag::from_leaf_sizes(1, &[1, 2], &[1, 1, 1]).unwrap();
        g.red_path.reverse();
        g.red_path.push(0);
        assert!(matches!(g.check_acyclic(), Err(Error::Cycle)));
        assert!(g.topological_labellings().is_err());
    }
}
