//! B-trees of order `2m+1`, at the shape level (key counts only) and the keyed level.
//!
//! Every node holds between `m` and `2m` keys, except the root, which holds between 1 and
//! `2m`. Inserting into a full node splits it: the lowest `m` keys stay, the median moves up
//! into the parent, and the largest `m` keys form a new right sibling. A split of the root
//! creates a new one-key root.
//!
//! Leaf indices are 1-based and counted left to right throughout the crate.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::combinatorics::check_permutation;
use crate::error::{Error, Result};

/// What happened during a single insertion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTrace {
    /// 1-based index of the leaf that received the key, before any splits.
    pub receiving_leaf_index: usize,
    pub splits_propagated: usize,
    pub root_split: bool,
    /// Medians moved out of their node, lowest level first. Always empty for shape-level
    /// insertion, where keys carry no values.
    pub pushed_keys: Vec<usize>,
}

/// A node of a [`BTreeShape`]. In JSON a leaf is its key count and an internal node is the
/// array of its children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeNode {
    Leaf(usize),
    Internal(Vec<ShapeNode>),
}

impl ShapeNode {
    pub fn leaf_count(&self) -> usize {
        match self {
            ShapeNode::Leaf(_) => 1,
            ShapeNode::Internal(children) => children.iter().map(ShapeNode::leaf_count).sum(),
        }
    }

    pub fn key_count(&self) -> usize {
        match self {
            ShapeNode::Leaf(k) => *k,
            ShapeNode::Internal(children) => {
                children.len() - 1 + children.iter().map(ShapeNode::key_count).sum::<usize>()
            }
        }
    }

    fn collect_leaf_sizes(&self, out: &mut Vec<usize>) {
        match self {
            ShapeNode::Leaf(k) => out.push(*k),
            ShapeNode::Internal(children) => {
                children.iter().for_each(|c| c.collect_leaf_sizes(out))
            }
        }
    }
}

/// Isomorphism class of a B-tree of order `2m+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BTreeShape {
    m: usize,
    root: ShapeNode,
}

impl BTreeShape {
    /// The one-key tree every history starts from.
    pub fn new_singleton(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(BTreeShape { m, root: ShapeNode::Leaf(1) })
    }

    /// Builds a shape and checks every B-tree invariant.
    pub fn new(m: usize, root: ShapeNode) -> Result<Self> {
        let shape = Self::from_root_unchecked(m, root);
        let report = shape.validate();
        if report.is_valid() {
            Ok(shape)
        } else {
            Err(Error::InvalidTree(report.to_string()))
        }
    }

    /// Builds a shape without validation; use [`BTreeShape::validate`] to inspect it.
    pub fn from_root_unchecked(m: usize, root: ShapeNode) -> Self {
        BTreeShape { m, root }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn root(&self) -> &ShapeNode {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn key_count(&self) -> usize {
        self.root.key_count()
    }

    pub fn height(&self) -> usize {
        let mut node = &self.root;
        let mut h = 0;
        while let ShapeNode::Internal(children) = node {
            node = &children[0];
            h += 1;
        }
        h
    }

    /// Key counts of the leaves, left to right.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.root.collect_leaf_sizes(&mut out);
        out
    }

    /// Number of keys stored outside the leaves.
    pub fn internal_key_count(&self) -> usize {
        self.key_count() - self.leaf_sizes().iter().sum::<usize>()
    }

    /// Inserts one key into the `leaf_index`-th leaf (1-based). The position inside the leaf
    /// does not affect the resulting isomorphism class.
    pub fn insert_at_leaf(&self, leaf_index: usize) -> Result<(BTreeShape, SplitTrace)> {
        let leaves = self.leaf_count();
        if leaf_index == 0 || leaf_index > leaves {
            return Err(Error::LeafIndexOutOfRange { index: leaf_index, leaves });
        }
        let mut root = self.root.clone();
        let mut splits = 0;
        let overflow = insert_shape(&mut root, leaf_index - 1, self.m, &mut splits);
        let root_split = overflow.is_some();
        if let Some(right) = overflow {
            root = ShapeNode::Internal(vec![root, right]);
        }
        let trace = SplitTrace {
            receiving_leaf_index: leaf_index,
            splits_propagated: splits,
            root_split,
            pushed_keys: Vec::new(),
        };
        Ok((BTreeShape { m: self.m, root }, trace))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.m == 0 {
            report.violations.push(Violation::ZeroOrder);
            return report;
        }
        let mut leaf_depth = None;
        validate_shape(&self.root, self.m, &mut Vec::new(), &mut leaf_depth, &mut report);
        report
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("shape serializes")
    }

    /// Parses and validates a shape.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: BTreeShape = serde_json::from_str(s)?;
        Self::new(raw.m, raw.root)
    }
}

fn insert_shape(node: &mut ShapeNode, idx: usize, m: usize, splits: &mut usize) -> Option<ShapeNode> {
    match node {
        ShapeNode::Leaf(k) => {
            *k += 1;
            if *k > 2 * m {
                *k = m;
                *splits += 1;
                Some(ShapeNode::Leaf(m))
            } else {
                None
            }
        }
        ShapeNode::Internal(children) => {
            let mut idx = idx;
            let mut i = 0;
            loop {
                let lc = children[i].leaf_count();
                if idx < lc {
                    break;
                }
                idx -= lc;
                i += 1;
            }
            let right = insert_shape(&mut children[i], idx, m, splits)?;
            children.insert(i + 1, right);
            if children.len() > 2 * m + 1 {
                let upper = children.split_off(m + 1);
                *splits += 1;
                Some(ShapeNode::Internal(upper))
            } else {
                None
            }
        }
    }
}

fn validate_shape(
    node: &ShapeNode,
    m: usize,
    path: &mut Vec<usize>,
    leaf_depth: &mut Option<usize>,
    report: &mut ValidationReport,
) {
    let is_root = path.is_empty();
    match node {
        ShapeNode::Leaf(k) => {
            let (lo, hi) = if is_root { (1, 2 * m) } else { (m, 2 * m) };
            if *k < lo || *k > hi {
                report.violations.push(Violation::KeyCount { path: path.clone(), keys: *k, min: lo, max: hi });
            }
            check_depth(path, leaf_depth, report);
        }
        ShapeNode::Internal(children) => {
            let (lo, hi) = if is_root { (2, 2 * m + 1) } else { (m + 1, 2 * m + 1) };
            if children.len() < lo || children.len() > hi {
                report.violations.push(Violation::ChildCount {
                    path: path.clone(),
                    children: children.len(),
                    min: lo,
                    max: hi,
                });
            }
            for (i, c) in children.iter().enumerate() {
                path.push(i);
                validate_shape(c, m, path, leaf_depth, report);
                path.pop();
            }
        }
    }
}

fn check_depth(path: &[usize], leaf_depth: &mut Option<usize>, report: &mut ValidationReport) {
    match *leaf_depth {
        None => *leaf_depth = Some(path.len()),
        Some(d) if d != path.len() => report.violations.push(Violation::LeafDepth {
            path: path.to_vec(),
            depth: path.len(),
            expected: d,
        }),
        _ => {}
    }
}

/// A single broken invariant. `path` lists child indices from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ZeroOrder,
    KeyCount { path: Vec<usize>, keys: usize, min: usize, max: usize },
    ChildCount { path: Vec<usize>, children: usize, min: usize, max: usize },
    KeysPerChildren { path: Vec<usize>, keys: usize, children: usize },
    LeafDepth { path: Vec<usize>, depth: usize, expected: usize },
    KeyOrder { path: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroOrder => write!(f, "m must be at least 1"),
            Violation::KeyCount { path, keys, min, max } => {
                write!(f, "node {path:?} holds {keys} keys, allowed {min}..={max}")
            }
            Violation::ChildCount { path, children, min, max } => {
                write!(f, "node {path:?} has {children} children, allowed {min}..={max}")
            }
            Violation::KeysPerChildren { path, keys, children } => {
                write!(f, "node {path:?} has {keys} keys but {children} children")
            }
            Violation::LeafDepth { path, depth, expected } => {
                write!(f, "leaf {path:?} at depth {depth}, other leaves at depth {expected}")
            }
            Violation::KeyOrder { path } => write!(f, "keys out of order at node {path:?}"),
        }
    }
}

/// Every invariant violated by a tree; empty iff the tree is valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A node of a [`KeyedBTree`]; leaves have no children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyedNode {
    pub keys: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<KeyedNode>,
}

impl KeyedNode {
    pub fn leaf(keys: Vec<usize>) -> Self {
        KeyedNode { keys, children: Vec::new() }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(KeyedNode::leaf_count).sum()
        }
    }

    fn shape(&self) -> ShapeNode {
        if self.is_leaf() {
            ShapeNode::Leaf(self.keys.len())
        } else {
            ShapeNode::Internal(self.children.iter().map(KeyedNode::shape).collect())
        }
    }

    fn in_order(&self, out: &mut Vec<(usize, bool)>) {
        if self.is_leaf() {
            out.extend(self.keys.iter().map(|&k| (k, true)));
            return;
        }
        for (i, child) in self.children.iter().enumerate() {
            child.in_order(out);
            if let Some(&k) = self.keys.get(i) {
                out.push((k, false));
            }
        }
    }

    fn relabel(&mut self, rank: &std::collections::HashMap<usize, usize>) {
        self.keys.iter_mut().for_each(|k| *k = rank[k]);
        self.children.iter_mut().for_each(|c| c.relabel(rank));
    }

    fn trim(&mut self) {
        if self.children.iter().all(KeyedNode::is_leaf) {
            self.children.clear();
        } else {
            self.children.iter_mut().for_each(KeyedNode::trim);
        }
    }
}

/// A B-tree of order `2m+1` with explicit integer keys.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyedBTree {
    m: usize,
    root: KeyedNode,
}

impl KeyedBTree {
    pub fn singleton(m: usize, key: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(KeyedBTree { m, root: KeyedNode::leaf(vec![key]) })
    }

    /// Builds a tree and checks every invariant, including key order.
    pub fn new(m: usize, root: KeyedNode) -> Result<Self> {
        let t = Self::from_root_unchecked(m, root);
        let report = t.validate();
        if report.is_valid() {
            Ok(t)
        } else {
            Err(Error::InvalidTree(report.to_string()))
        }
    }

    pub fn from_root_unchecked(m: usize, root: KeyedNode) -> Self {
        KeyedBTree { m, root }
    }

    /// Inserts `keys` in order into an initially empty tree.
    pub fn from_keys(m: usize, keys: &[usize]) -> Result<Self> {
        let (first, rest) = keys
            .split_first()
            .ok_or_else(|| Error::InvalidTree("a tree holds at least one key".into()))?;
        let mut t = KeyedBTree::singleton(m, *first)?;
        for &k in rest {
            t.insert_key_mut(k)?;
        }
        Ok(t)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn root(&self) -> &KeyedNode {
        &self.root
    }

    pub fn shape(&self) -> BTreeShape {
        BTreeShape { m: self.m, root: self.root.shape() }
    }

    pub fn height(&self) -> usize {
        let mut node = &self.root;
        let mut h = 0;
        while !node.is_leaf() {
            node = &node.children[0];
            h += 1;
        }
        h
    }

    pub fn key_count(&self) -> usize {
        self.in_order().len()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.shape().leaf_sizes()
    }

    /// All keys in order, each tagged with whether it sits in a leaf.
    pub fn in_order(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        self.root.in_order(&mut out);
        out
    }

    /// Keys stored outside the leaves, ascending.
    pub fn internal_keys(&self) -> Vec<usize> {
        self.in_order().into_iter().filter(|&(_, leaf)| !leaf).map(|(k, _)| k).collect()
    }

    /// Inserts `key`, returning the new tree and what the insertion did.
    pub fn insert_key(&self, key: usize) -> Result<(KeyedBTree, SplitTrace)> {
        let mut t = self.clone();
        let trace = t.insert_key_mut(key)?;
        Ok((t, trace))
    }

    /// In-place variant of [`KeyedBTree::insert_key`]. On error the tree is unchanged.
    pub fn insert_key_mut(&mut self, key: usize) -> Result<SplitTrace> {
        self.insert_inner(key, true)
    }

    /// Insertion without leaf-index bookkeeping, for bulk simulation.
    pub(crate) fn insert_untracked(&mut self, key: usize) -> Result<()> {
        self.insert_inner(key, false).map(|_| ())
    }

    fn insert_inner(&mut self, key: usize, track: bool) -> Result<SplitTrace> {
        let mut pushed = Vec::new();
        let mut leaf_offset = 0;
        let overflow = insert_keyed(&mut self.root, key, self.m, &mut pushed, track, &mut leaf_offset)?;
        let root_split = overflow.is_some();
        if let Some((median, right)) = overflow {
            let left = std::mem::replace(&mut self.root, KeyedNode::leaf(Vec::new()));
            self.root = KeyedNode { keys: vec![median], children: vec![left, right] };
        }
        Ok(SplitTrace {
            receiving_leaf_index: leaf_offset + 1,
            splits_propagated: pushed.len(),
            root_split,
            pushed_keys: pushed,
        })
    }

    /// Deletes all leaves; the level above becomes the new leaf level.
    pub fn trim(&self) -> Result<KeyedBTree> {
        if self.root.is_leaf() {
            return Err(Error::TrimLeafRoot);
        }
        let mut root = self.root.clone();
        root.trim();
        Ok(KeyedBTree { m: self.m, root })
    }

    /// Relabels the keys by rank so that they become `1..=n`.
    pub fn standardized(&self) -> KeyedBTree {
        let rank = self
            .in_order()
            .into_iter()
            .enumerate()
            .map(|(i, (k, _))| (k, i + 1))
            .collect();
        let mut root = self.root.clone();
        root.relabel(&rank);
        KeyedBTree { m: self.m, root }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = self.shape().validate();
        let mut path = Vec::new();
        check_keyed_node(&self.root, &mut path, &mut report);
        let keys: Vec<usize> = self.in_order().into_iter().map(|(k, _)| k).collect();
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            report.violations.push(Violation::KeyOrder { path: Vec::new() });
        }
        report
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: KeyedBTree = serde_json::from_str(s)?;
        Self::new(raw.m, raw.root)
    }

    /// Graphviz rendering with one record per node.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph btree {\n  node [shape=record];\n");
        let mut next = 0;
        dot_node(&self.root, &mut next, &mut out);
        out.push_str("}\n");
        out
    }
}

fn check_keyed_node(node: &KeyedNode, path: &mut Vec<usize>, report: &mut ValidationReport) {
    if !node.is_leaf() && node.children.len() != node.keys.len() + 1 {
        report.violations.push(Violation::KeysPerChildren {
            path: path.clone(),
            keys: node.keys.len(),
            children: node.children.len(),
        });
    }
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        check_keyed_node(c, path, report);
        path.pop();
    }
}

fn dot_node(node: &KeyedNode, next: &mut usize, out: &mut String) -> usize {
    let id = *next;
    *next += 1;
    let label = node.keys.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("|");
    let _ = writeln!(out, "  n{id} [label=\"{label}\"];");
    for c in &node.children {
        let cid = dot_node(c, next, out);
        let _ = writeln!(out, "  n{id} -> n{cid};");
    }
    id
}

fn insert_keyed(
    node: &mut KeyedNode,
    key: usize,
    m: usize,
    pushed: &mut Vec<usize>,
    track: bool,
    leaf_offset: &mut usize,
) -> Result<Option<(usize, KeyedNode)>> {
    let pos = match node.keys.binary_search(&key) {
        Ok(_) => return Err(Error::DuplicateKey(key)),
        Err(pos) => pos,
    };
    if node.is_leaf() {
        node.keys.insert(pos, key);
    } else {
        if track {
            *leaf_offset += node.children[..pos].iter().map(KeyedNode::leaf_count).sum::<usize>();
        }
        let Some((median, right)) = insert_keyed(&mut node.children[pos], key, m, pushed, track, leaf_offset)?
        else {
            return Ok(None);
        };
        node.keys.insert(pos, median);
        node.children.insert(pos + 1, right);
    }
    if node.keys.len() <= 2 * m {
        return Ok(None);
    }
    let right_keys = node.keys.split_off(m + 1);
    let median = node.keys.pop().expect("overfull node has a median");
    let right_children = if node.is_leaf() { Vec::new() } else { node.children.split_off(m + 1) };
    pushed.push(median);
    Ok(Some((median, KeyedNode { keys: right_keys, children: right_children })))
}

/// An insertion history, stored as the leaf receiving each key after the first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct History {
    pub m: usize,
    pub n: usize,
    /// `leaf_choices[t-2]` is the leaf of `T_{t-1}` receiving key `t`, for `t = 2..=n`.
    pub leaf_choices: Vec<usize>,
}

impl History {
    /// Checks the choices by replaying them.
    pub fn new(m: usize, leaf_choices: Vec<usize>) -> Result<Self> {
        let h = History { m, n: leaf_choices.len() + 1, leaf_choices };
        h.replay()?;
        Ok(h)
    }

    /// The trees `T_1, ..., T_n`.
    pub fn replay(&self) -> Result<Vec<BTreeShape>> {
        if self.n != self.leaf_choices.len() + 1 {
            return Err(Error::InvalidHistory {
                step: 0,
                reason: format!("n = {} but {} leaf choices", self.n, self.leaf_choices.len()),
            });
        }
        let mut trees = Vec::with_capacity(self.n);
        trees.push(BTreeShape::new_singleton(self.m)?);
        for (i, &leaf) in self.leaf_choices.iter().enumerate() {
            let (next, _) = trees[i].insert_at_leaf(leaf).map_err(|e| Error::InvalidHistory {
                step: i + 2,
                reason: e.to_string(),
            })?;
            trees.push(next);
        }
        Ok(trees)
    }

    pub fn final_shape(&self) -> Result<BTreeShape> {
        Ok(self.replay()?.pop().expect("history holds at least one tree"))
    }

    /// Every history of length `n`, in lexicographic order of the choice sequences.
    pub fn enumerate_all(m: usize, n: usize) -> Result<Vec<History>> {
        let start = BTreeShape::new_singleton(m)?;
        let mut out = Vec::new();
        if n == 0 {
            return Ok(out);
        }
        let mut choices = Vec::new();
        enumerate_from(&start, n, &mut choices, &mut out);
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("history serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            m: usize,
            n: usize,
            leaf_choices: Vec<usize>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        if raw.m == 0 {
            return Err(Error::ZeroOrder);
        }
        let h = History { m: raw.m, n: raw.n, leaf_choices: raw.leaf_choices };
        h.replay()?;
        Ok(h)
    }
}

fn enumerate_from(tree: &BTreeShape, n: usize, choices: &mut Vec<usize>, out: &mut Vec<History>) {
    if choices.len() + 1 == n {
        out.push(History { m: tree.m, n, leaf_choices: choices.clone() });
        return;
    }
    for leaf in 1..=tree.leaf_count() {
        let (next, _) = tree.insert_at_leaf(leaf).expect("leaf index in range");
        choices.push(leaf);
        enumerate_from(&next, n, choices, out);
        choices.pop();
    }
}

/// Inserts `pi(1), ..., pi(n)` and records the history and every split trace.
pub fn run_permutation(m: usize, pi: &[usize]) -> Result<(KeyedBTree, History, Vec<SplitTrace>)> {
    check_permutation(pi)?;
    let (first, rest) = pi.split_first().ok_or(Error::NotAPermutation(0))?;
    let mut tree = KeyedBTree::singleton(m, *first)?;
    let mut traces = Vec::with_capacity(rest.len());
    for &k in rest {
        traces.push(tree.insert_key_mut(k)?);
    }
    let history = History {
        m,
        n: pi.len(),
        leaf_choices: traces.iter().map(|t| t.receiving_leaf_index).collect(),
    };
    Ok((tree, history, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ShapeNode::{Internal, Leaf};

    const WORKED_PERM: [usize; 9] = [6, 1, 2, 4, 7, 5, 9, 8, 3];

    #[test]
    fn singleton_and_zero_order() {
        for m in 1..=3 {
            assert_eq!(BTreeShape::new_singleton(m).unwrap().root(), &Leaf(1));
        }
        assert!(matches!(BTreeShape::new_singleton(0), Err(Error::ZeroOrder)));
    }

    #[test]
    fn first_split_creates_root() {
        let t = BTreeShape::from_root_unchecked(1, Leaf(2));
        let (t2, trace) = t.insert_at_leaf(1).unwrap();
        assert_eq!(t2.root(), &Internal(vec![Leaf(1), Leaf(1)]));
        assert_eq!(trace.splits_propagated, 1);
        assert!(trace.root_split);
    }

    #[test]
    fn insert_without_overflow() {
        let t = BTreeShape::new_singleton(1).unwrap();
        let (t2, trace) = t.insert_at_leaf(1).unwrap();
        assert_eq!(t2.root(), &Leaf(2));
        assert_eq!(trace.splits_propagated, 0);
        assert!(!trace.root_split);
    }

    #[test]
    fn leaf_index_out_of_range() {
        let t = BTreeShape::new_singleton(1).unwrap();
        assert!(matches!(t.insert_at_leaf(2), Err(Error::LeafIndexOutOfRange { index: 2, leaves: 1 })));
        assert!(t.insert_at_leaf(0).is_err());
    }

    #[test]
    fn keyed_first_split() {
        let t = KeyedBTree::from_keys(1, &[1, 2]).unwrap();
        let (t2, trace) = t.insert_key(3).unwrap();
        assert_eq!(t2.root().keys, vec![2]);
        assert_eq!(t2.root().children, vec![KeyedNode::leaf(vec![1]), KeyedNode::leaf(vec![3])]);
        assert_eq!(trace.pushed_keys, vec![2]);
    }

    #[test]
    fn keyed_m2_ascending() {
        let t = KeyedBTree::from_keys(2, &[1, 2, 3, 4]).unwrap();
        let (t2, trace) = t.insert_key(5).unwrap();
        assert_eq!(t2.root().keys, vec![3]);
        assert_eq!(t2.root().children, vec![KeyedNode::leaf(vec![1, 2]), KeyedNode::leaf(vec![4, 5])]);
        assert_eq!(trace.pushed_keys, vec![3]);
    }

    #[test]
    fn duplicate_key_rejected_and_tree_unchanged() {
        let mut t = KeyedBTree::from_keys(1, &[5, 1, 9, 3]).unwrap();
        let before = t.clone();
        assert!(matches!(t.insert_key_mut(9), Err(Error::DuplicateKey(9))));
        assert!(matches!(t.insert_key_mut(1), Err(Error::DuplicateKey(1))));
        assert_eq!(t, before);
    }

    #[test]
    fn worked_example_tree() {
        let (t, history, traces) = run_permutation(1, &WORKED_PERM).unwrap();
        assert_eq!(t.key_count(), 9);
        assert_eq!(t.leaf_sizes(), vec![1; 5]);
        assert_eq!(t.internal_keys(), vec![2, 4, 6, 8]);
        assert_eq!(history.leaf_choices, vec![1, 1, 2, 2, 2, 3, 3, 2]);
        assert!(t.validate().is_valid());
        // the insertion of 8 splits a leaf and then the root
        assert_eq!(traces[6].pushed_keys, vec![8, 6]);
        assert!(traces[6].root_split);
        let trimmed = t.trim().unwrap();
        assert_eq!(trimmed.key_count(), 4);
        assert_eq!(trimmed.in_order().iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 4, 6, 8]);
        let root_only = trimmed.trim().unwrap();
        assert_eq!(root_only.root(), &KeyedNode::leaf(vec![6]));
        assert!(root_only.trim().is_err());
    }

    #[test]
    fn history_replay_matches_keyed_run() {
        let (t, history, _) = run_permutation(1, &WORKED_PERM).unwrap();
        let trees = history.replay().unwrap();
        assert_eq!(trees.len(), 9);
        assert_eq!(trees.last().unwrap(), &t.shape());
        assert!(trees.iter().all(|s| s.validate().is_valid()));
    }

    #[test]
    fn trivial_permutation() {
        let (t, h, traces) = run_permutation(2, &[1]).unwrap();
        assert_eq!(t.root(), &KeyedNode::leaf(vec![1]));
        assert!(h.leaf_choices.is_empty());
        assert!(traces.is_empty());
        assert!(run_permutation(1, &[1, 3]).is_err());
        assert!(run_permutation(1, &[]).is_err());
    }

    #[test]
    fn all_orders_of_three_keys_agree() {
        let mut seen = std::collections::HashSet::new();
        for pi in crate::combinatorics::all_permutations(3) {
            let (t, h, _) = run_permutation(1, &pi).unwrap();
            seen.insert((t.shape(), h));
        }
        assert_eq!(seen.len(), 1);
        let (shape, h) = seen.into_iter().next().unwrap();
        assert_eq!(shape.root(), &Internal(vec![Leaf(1), Leaf(1)]));
        assert_eq!(h.leaf_choices, vec![1, 1]);
    }

    #[test]
    fn trim_simple() {
        let t = KeyedBTree::from_keys(1, &[1, 2, 3]).unwrap();
        assert_eq!(t.trim().unwrap().root(), &KeyedNode::leaf(vec![2]));
        assert!(matches!(KeyedBTree::singleton(1, 4).unwrap().trim(), Err(Error::TrimLeafRoot)));
    }

    #[test]
    fn validation_reports() {
        let bad_root = BTreeShape::from_root_unchecked(1, Internal(vec![Leaf(1)]));
        assert!(matches!(bad_root.validate().violations[0], Violation::ChildCount { .. }));
        let fat_leaf = BTreeShape::from_root_unchecked(1, Leaf(3));
        assert!(matches!(fat_leaf.validate().violations[0], Violation::KeyCount { .. }));
        let uneven = BTreeShape::from_root_unchecked(1, Internal(vec![Leaf(1), Internal(vec![Leaf(1), Leaf(1)])]));
        assert!(uneven.validate().violations.iter().any(|v| matches!(v, Violation::LeafDepth { .. })));
        let unordered = KeyedBTree::from_root_unchecked(
            1,
            KeyedNode { keys: vec![2], children: vec![KeyedNode::leaf(vec![3]), KeyedNode::leaf(vec![1])] },
        );
        assert!(unordered.validate().violations.iter().any(|v| matches!(v, Violation::KeyOrder { .. })));
        assert!(!unordered.validate().to_string().is_empty());
    }

    #[test]
    fn leaf_sizes_projection() {
        assert_eq!(BTreeShape::from_root_unchecked(2, Leaf(3)).leaf_sizes(), vec![3]);
        let t = KeyedBTree::from_keys(1, &[1, 2, 3, 4]).unwrap();
        assert_eq!(t.leaf_sizes(), vec![1, 2]);
    }

    #[test]
    fn exhaustive_replay_closure() {
        for (m, n) in [(1, 7), (2, 7)] {
            for pi in crate::combinatorics::all_permutations(n) {
                let mut t = KeyedBTree::singleton(m, pi[0]).unwrap();
                let mut shape = t.shape();
                for (step, &k) in pi[1..].iter().enumerate() {
                    let trace = t.insert_key_mut(k).unwrap();
                    assert!(t.validate().is_valid());
                    assert_eq!(t.key_count(), step + 2);
                    let (next, shape_trace) = shape.insert_at_leaf(trace.receiving_leaf_index).unwrap();
                    assert_eq!(next, t.shape());
                    assert_eq!(shape_trace.splits_propagated, trace.splits_propagated);
                    assert_eq!(t.leaf_count() - 1, t.internal_keys().len());
                    shape = next;
                }
            }
        }
    }

    #[test]
    fn history_enumeration_counts() {
        let counts: Vec<usize> = (1..=7).map(|n| History::enumerate_all(1, n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 4, 10, 30]);
    }

    #[test]
    fn json_shapes() {
        let (t, h, _) = run_permutation(1, &WORKED_PERM).unwrap();
        let s = t.shape().to_json();
        assert_eq!(s, r#"{"m":1,"root":[[1,1,1],[1,1]]}"#);
        assert_eq!(BTreeShape::from_json(&s).unwrap(), t.shape());
        assert_eq!(h.to_json(), r#"{"m":1,"n":9,"leaf_choices":[1,1,2,2,2,3,3,2]}"#);
        assert_eq!(History::from_json(&h.to_json()).unwrap(), h);
        assert_eq!(KeyedBTree::from_json(&t.to_json()).unwrap(), t);
        assert!(History::from_json(r#"{"m":1,"n":3,"leaf_choices":[1,2]}"#).is_err());
        assert!(BTreeShape::from_json(r#"{"m":1,"root":[3]}"#).is_err());
        assert!(t.to_dot().contains("label=\"6\""));
    }
}
