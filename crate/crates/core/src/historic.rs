//! Historic trees and their bijection with insertion histories.
//!
//! A `(2m+1)`-historic tree is a plane tree on vertices `1..=n` with labels increasing away
//! from the root (vertex 1, height 0). Only vertices at heights `2m, 3m+1, 4m+2, ...` (the
//! *branchings*) may have two children, which then sit in distinct left/right slots. Every
//! other vertex has at most one child, in its `only` slot.
//!
//! The positions where vertex `n+1` could be attached are the *external slots*. Attaching it
//! at the `i`-th slot from the left mirrors inserting a key into the `i`-th leaf of the
//! corresponding B-tree, which is how [`HistoricTree::from_history`] builds the bijection.
//!
//! A reduced tree drops the forced stem `1..=m`; its branchings sit at heights `≡ -1 (mod m+1)`.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::btree::{BTreeShape, History};
use crate::error::{Error, Result};

/// Plane position of a vertex under its parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Left,
    Right,
    Only,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Left => "left",
            Slot::Right => "right",
            Slot::Only => "only",
        })
    }
}

/// A position where the next vertex may be attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExternalSlot {
    /// Label of the parent vertex; `None` only for the slot of an empty reduced tree.
    pub parent: Option<usize>,
    pub slot: Slot,
    /// 1-based rank among all external slots, left to right.
    pub rank: usize,
}

/// Why a labelled plane tree fails to be historic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HistoricViolation {
    LengthMismatch { parents: usize, slots: usize },
    Empty,
    RootHasParent,
    ParentNotSmaller { vertex: usize, parent: usize },
    TooManyChildren { vertex: usize, height: usize, children: usize },
    SlotMismatch { vertex: usize, slot: Slot },
    DuplicateSlot { vertex: usize, slot: Slot },
}

impl fmt::Display for HistoricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoricViolation::LengthMismatch { parents, slots } => {
                write!(f, "{parents} parents but {slots} slots")
            }
            HistoricViolation::Empty => write!(f, "tree has no vertices"),
            HistoricViolation::RootHasParent => write!(f, "vertex 1 must be the root (parent 0)"),
            HistoricViolation::ParentNotSmaller { vertex, parent } => {
                write!(f, "vertex {vertex} has parent {parent}, labels must increase downwards")
            }
            HistoricViolation::TooManyChildren { vertex, height, children } => {
                write!(f, "vertex {vertex} at height {height} has {children} children")
            }
            HistoricViolation::SlotMismatch { vertex, slot } => {
                write!(f, "vertex {vertex} sits in slot {slot}, not allowed under its parent")
            }
            HistoricViolation::DuplicateSlot { vertex, slot } => {
                write!(f, "vertex {vertex} shares slot {slot} with a sibling")
            }
        }
    }
}

/// Shared representation: 0-based vertex indices, label = index + 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Skeleton {
    m: usize,
    first_branching: usize,
    parent: Vec<Option<usize>>,
    slot: Vec<Slot>,
    height: Vec<usize>,
    children: Vec<Vec<usize>>,
}

enum Item {
    Vertex(usize),
    External(Option<usize>, Slot),
}

impl Skeleton {
    fn empty(m: usize, first_branching: usize) -> Self {
        Skeleton { m, first_branching, parent: vec![], slot: vec![], height: vec![], children: vec![] }
    }

    /// `parent` uses labels with 0 for the root.
    fn from_labels(m: usize, first_branching: usize, parent: &[usize], slot: &[Slot]) -> std::result::Result<Self, HistoricViolation> {
        if parent.len() != slot.len() {
            return Err(HistoricViolation::LengthMismatch { parents: parent.len(), slots: slot.len() });
        }
        let mut sk = Skeleton::empty(m, first_branching);
        for (v, (&p, &s)) in parent.iter().zip(slot).enumerate() {
            let label = v + 1;
            let p = match (v, p) {
                (0, 0) => None,
                (0, _) => return Err(HistoricViolation::RootHasParent),
                (_, p) if p == 0 || p >= label => {
                    return Err(HistoricViolation::ParentNotSmaller { vertex: label, parent: p })
                }
                (_, p) => Some(p - 1),
            };
            sk.push_vertex(p, s);
        }
        sk.check()?;
        Ok(sk)
    }

    fn push_vertex(&mut self, parent: Option<usize>, slot: Slot) {
        let v = self.parent.len();
        self.parent.push(parent);
        self.slot.push(slot);
        self.height.push(parent.map_or(0, |p| self.height[p] + 1));
        self.children.push(Vec::new());
        if let Some(p) = parent {
            let kids = &mut self.children[p];
            kids.push(v);
            let slots = &self.slot;
            kids.sort_by_key(|&c| slots[c]);
        }
    }

    fn check(&self) -> std::result::Result<(), HistoricViolation> {
        for v in 0..self.len() {
            let kids = &self.children[v];
            let branching = self.is_branching(v);
            let max = if branching { 2 } else { 1 };
            if kids.len() > max {
                return Err(HistoricViolation::TooManyChildren {
                    vertex: v + 1,
                    height: self.height[v],
                    children: kids.len(),
                });
            }
            for &c in kids {
                let ok = if branching { self.slot[c] != Slot::Only } else { self.slot[c] == Slot::Only };
                if !ok {
                    return Err(HistoricViolation::SlotMismatch { vertex: c + 1, slot: self.slot[c] });
                }
            }
            if kids.len() == 2 && self.slot[kids[0]] == self.slot[kids[1]] {
                return Err(HistoricViolation::DuplicateSlot { vertex: kids[1] + 1, slot: self.slot[kids[1]] });
            }
        }
        if self.parent.first().is_some_and(|p| p.is_some()) {
            return Err(HistoricViolation::RootHasParent);
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn is_branching_height(&self, h: usize) -> bool {
        h >= self.first_branching && (h - self.first_branching).is_multiple_of(self.m + 1)
    }

    fn is_branching(&self, v: usize) -> bool {
        self.is_branching_height(self.height[v])
    }

    /// External slots of the subtree of vertices with index `< limit`.
    fn external_slots(&self, limit: usize) -> Vec<ExternalSlot> {
        let mut out = Vec::new();
        if limit == 0 {
            out.push(ExternalSlot { parent: None, slot: Slot::Only, rank: 1 });
            return out;
        }
        let mut stack = vec![Item::Vertex(0)];
        while let Some(item) = stack.pop() {
            match item {
                Item::External(parent, slot) => {
                    out.push(ExternalSlot { parent: parent.map(|p| p + 1), slot, rank: out.len() + 1 })
                }
                Item::Vertex(v) => {
                    let kids: Vec<usize> = self.children[v].iter().copied().filter(|&c| c < limit).collect();
                    let sides: &[Slot] = if self.is_branching(v) { &[Slot::Left, Slot::Right] } else { &[Slot::Only] };
                    for &side in sides.iter().rev() {
                        match kids.iter().find(|&&c| self.slot[c] == side) {
                            Some(&c) => stack.push(Item::Vertex(c)),
                            None => stack.push(Item::External(Some(v), side)),
                        }
                    }
                }
            }
        }
        out
    }

    fn attach(&self, rank: usize) -> Result<Self> {
        let slots = self.external_slots(self.len());
        let target = slots.get(rank.wrapping_sub(1)).ok_or_else(|| Error::InvalidHistory {
            step: self.len() + 1,
            reason: format!("slot {rank} requested, only {} available", slots.len()),
        })?;
        let mut next = self.clone();
        next.push_vertex(target.parent.map(|p| p - 1), target.slot);
        Ok(next)
    }

    fn branchings(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_branching(v)).map(|v| v + 1).collect()
    }

    fn closest_branching_distance(&self, mut v: usize) -> Option<usize> {
        let mut s = 0;
        while !self.is_branching(v) {
            s += 1;
            v = self.parent[v]?;
        }
        Some(s)
    }

    fn s_values(&self) -> Result<Vec<usize>> {
        let needed = self.first_branching + 1;
        if self.len() < needed {
            return Err(Error::TooFewVertices { needed, got: self.len() });
        }
        Ok(self
            .external_slots(self.len())
            .iter()
            .map(|e| {
                let p = e.parent.expect("non-empty tree") - 1;
                self.closest_branching_distance(p).expect("a branching lies above every slot")
            })
            .collect())
    }

    fn path_from_root(&self, mut v: usize) -> Vec<usize> {
        let mut path = vec![v];
        while let Some(p) = self.parent[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    }

    fn is_right_of(&self, i: usize, j: usize) -> Option<bool> {
        let pi = self.path_from_root(i);
        let pj = self.path_from_root(j);
        let common = pi.iter().zip(&pj).take_while(|(a, b)| a == b).count();
        let cj = *pj.get(common)?;
        match pi.get(common) {
            Some(&ci) => Some(self.slot[ci] == Slot::Left && self.slot[cj] == Slot::Right),
            None => Some(self.slot[cj] == Slot::Right),
        }
    }

    fn parent_labels(&self) -> Vec<usize> {
        self.parent.iter().map(|p| p.map_or(0, |p| p + 1)).collect()
    }

    fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph {name} {{\n  node [shape=circle, style=filled, fillcolor=black, fontcolor=white];\n");
        for v in 0..self.len() {
            let _ = writeln!(out, "  v{} [label=\"{}\"];", v + 1, v + 1);
            if let Some(p) = self.parent[v] {
                let _ = writeln!(out, "  v{} -> v{};", p + 1, v + 1);
            }
        }
        for e in self.external_slots(self.len()) {
            let _ = writeln!(
                out,
                "  x{r} [label=\"\", style=solid, fillcolor=white, width=0.2];",
                r = e.rank
            );
            if let Some(p) = e.parent {
                let _ = writeln!(out, "  v{p} -> x{} [style=dotted];", e.rank);
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    m: usize,
    labels: usize,
    parent: Vec<usize>,
    slot: Vec<Slot>,
}

/// Checks whether a labelled plane tree is `(2m+1)`-historic, reporting the first violation.
/// `parent[v-1]` is the parent label of vertex `v`, 0 for the root.
pub fn is_historic(m: usize, parent: &[usize], slot: &[Slot]) -> std::result::Result<(), HistoricViolation> {
    if parent.is_empty() {
        return Err(HistoricViolation::Empty);
    }
    Skeleton::from_labels(m, 2 * m, parent, slot).map(|_| ())
}

/// A `(2m+1)`-historic tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoricTree {
    inner: Skeleton,
}

impl HistoricTree {
    pub fn singleton(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        let mut inner = Skeleton::empty(m, 2 * m);
        inner.push_vertex(None, Slot::Only);
        Ok(HistoricTree { inner })
    }

    pub fn new(m: usize, parent: &[usize], slot: &[Slot]) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        is_historic(m, parent, slot).map_err(Error::NotHistoric)?;
        let inner = Skeleton::from_labels(m, 2 * m, parent, slot).map_err(Error::NotHistoric)?;
        Ok(HistoricTree { inner })
    }

    /// Builds the tree by attaching vertex `t` at external slot `l_t` of the tree on `t-1`
    /// vertices, for every step of the history.
    pub fn from_history(h: &History) -> Result<Self> {
        if h.n != h.leaf_choices.len() + 1 {
            return Err(Error::InvalidHistory { step: 0, reason: "n does not match the number of choices".into() });
        }
        let mut t = HistoricTree::singleton(h.m)?;
        for &choice in &h.leaf_choices {
            t = t.attach(choice)?;
        }
        Ok(t)
    }

    /// Inverse of [`HistoricTree::from_history`].
    pub fn to_history(&self) -> History {
        let sk = &self.inner;
        let leaf_choices = (1..sk.len())
            .map(|k| {
                let parent = sk.parent[k].map(|p| p + 1);
                sk.external_slots(k)
                    .into_iter()
                    .find(|e| e.parent == parent && e.slot == sk.slot[k])
                    .expect("vertex occupies an external slot of the earlier tree")
                    .rank
            })
            .collect();
        History { m: sk.m, n: sk.len(), leaf_choices }
    }

    /// Attaches a new vertex at the `rank`-th external slot (1-based).
    pub fn attach(&self, rank: usize) -> Result<Self> {
        Ok(HistoricTree { inner: self.inner.attach(rank)? })
    }

    /// All historic trees on `n` vertices.
    pub fn enumerate_all(m: usize, n: usize) -> Result<Vec<Self>> {
        let mut level = vec![HistoricTree::singleton(m)?];
        for _ in 1..n {
            level = level
                .iter()
                .flat_map(|t| (1..=t.external_slot_count()).map(move |r| t.attach(r).expect("rank in range")))
                .collect();
        }
        Ok(if n == 0 { Vec::new() } else { level })
    }

    pub fn m(&self) -> usize {
        self.inner.m
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len() == 0
    }

    /// Parent label of vertex `v` (`None` for the root).
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.inner.parent[v - 1].map(|p| p + 1)
    }

    pub fn slot(&self, v: usize) -> Slot {
        self.inner.slot[v - 1]
    }

    pub fn height(&self, v: usize) -> usize {
        self.inner.height[v - 1]
    }

    /// Children labels of `v`, in plane order.
    pub fn children(&self, v: usize) -> Vec<usize> {
        self.inner.children[v - 1].iter().map(|c| c + 1).collect()
    }

    pub fn parent_labels(&self) -> Vec<usize> {
        self.inner.parent_labels()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.inner.slot
    }

    pub fn is_branching(&self, v: usize) -> bool {
        self.inner.is_branching(v - 1)
    }

    pub fn external_slots(&self) -> Vec<ExternalSlot> {
        self.inner.external_slots(self.len())
    }

    pub fn external_slot_count(&self) -> usize {
        self.external_slots().len()
    }

    pub fn branchings(&self) -> Vec<usize> {
        self.inner.branchings()
    }

    /// Internal vertices between each external slot and its closest branching above.
    /// Requires at least `2m+1` vertices.
    pub fn s_values(&self) -> Result<Vec<usize>> {
        self.inner.s_values()
    }

    /// Whether vertex `j` lies to the right of vertex `i` (`None` if `j` is `i` or one of its
    /// ancestors).
    pub fn is_right_of(&self, i: usize, j: usize) -> Option<bool> {
        self.inner.is_right_of(i - 1, j - 1)
    }

    /// The subtree on vertices `1..=k`.
    pub fn prefix(&self, k: usize) -> HistoricTree {
        let mut inner = Skeleton::empty(self.m(), 2 * self.m());
        for v in 0..k.min(self.len()) {
            inner.push_vertex(self.inner.parent[v], self.inner.slot[v]);
        }
        HistoricTree { inner }
    }

    /// Drops the stem `1..=m` and shifts labels down by `m`.
    pub fn reduce(&self) -> Result<ReducedHistoricTree> {
        let m = self.m();
        if self.len() < m {
            return Err(Error::TooFewVertices { needed: m, got: self.len() });
        }
        let mut inner = Skeleton::empty(m, m);
        for v in m..self.len() {
            let parent = self.inner.parent[v].and_then(|p| p.checked_sub(m));
            let slot = if parent.is_none() { Slot::Only } else { self.inner.slot[v] };
            inner.push_vertex(parent, slot);
        }
        Ok(ReducedHistoricTree { inner })
    }

    /// Accepts `{"m", "labels", "parent", "slot"}` with parent 0 for the root.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TreeJson = serde_json::from_str(s)?;
        if raw.labels != raw.parent.len() {
            return Err(Error::Inconsistent(format!("labels = {} but {} parents", raw.labels, raw.parent.len())));
        }
        HistoricTree::new(raw.m, &raw.parent, &raw.slot)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeJson {
            m: self.m(),
            labels: self.len(),
            parent: self.parent_labels(),
            slot: self.inner.slot.clone(),
        })
        .expect("tree serializes")
    }

    /// Graphviz rendering: internal vertices filled, external slots hollow and dotted.
    pub fn to_dot(&self) -> String {
        self.inner.to_dot("historic")
    }

    /// Replays the history and compares slot counts, branching counts and leaf sizes with the
    /// B-tree after every step.
    pub fn check_correspondence(&self) -> CorrespondenceReport {
        let m = self.m();
        let history = self.to_history();
        let mut report = CorrespondenceReport::default();
        let trees = match history.replay() {
            Ok(t) => t,
            Err(e) => {
                report.violations.push(format!("history does not replay: {e}"));
                return report;
            }
        };
        for (k, tree) in trees.iter().enumerate() {
            let prefix = self.prefix(k + 1);
            check_step(k + 1, m, &prefix, tree, &mut report);
        }
        report
    }
}

fn check_step(k: usize, m: usize, h: &HistoricTree, t: &BTreeShape, report: &mut CorrespondenceReport) {
    report.steps_checked += 1;
    let slots = h.external_slot_count();
    if slots != t.leaf_count() {
        report.violations.push(format!("step {k}: {slots} external slots but {} leaves", t.leaf_count()));
    }
    let b = h.branchings().len();
    if b != t.internal_key_count() {
        report.violations.push(format!("step {k}: {b} branchings but {} non-leaf keys", t.internal_key_count()));
    }
    if k > 2 * m {
        let expected: Vec<usize> = h.s_values().expect("enough vertices").iter().map(|s| m + s).collect();
        if expected != t.leaf_sizes() {
            report.violations.push(format!("step {k}: m+s = {expected:?} but leaf sizes {:?}", t.leaf_sizes()));
        }
    }
}

/// Outcome of [`HistoricTree::check_correspondence`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CorrespondenceReport {
    pub steps_checked: usize,
    pub violations: Vec<String>,
}

impl CorrespondenceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn history_to_historic(h: &History) -> Result<HistoricTree> {
    HistoricTree::from_history(h)
}

pub fn historic_to_history(t: &HistoricTree) -> History {
    t.to_history()
}

/// A historic tree with its stem of `m` vertices removed. May be empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedHistoricTree {
    inner: Skeleton,
}

impl ReducedHistoricTree {
    pub fn empty(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(ReducedHistoricTree { inner: Skeleton::empty(m, m) })
    }

    pub fn new(m: usize, parent: &[usize], slot: &[Slot]) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        let inner = Skeleton::from_labels(m, m, parent, slot).map_err(Error::NotHistoric)?;
        Ok(ReducedHistoricTree { inner })
    }

    /// Every reduced tree on `n` vertices, grown one vertex at a time.
    pub fn enumerate_all(m: usize, n: usize) -> Result<Vec<Self>> {
        let mut level = vec![ReducedHistoricTree::empty(m)?];
        for _ in 0..n {
            level = level
                .iter()
                .flat_map(|t| (1..=t.external_slot_count()).map(move |r| t.attach(r).expect("rank in range")))
                .collect();
        }
        Ok(level)
    }

    pub fn attach(&self, rank: usize) -> Result<Self> {
        Ok(ReducedHistoricTree { inner: self.inner.attach(rank)? })
    }

    pub fn m(&self) -> usize {
        self.inner.m
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len() == 0
    }

    pub fn height(&self, v: usize) -> usize {
        self.inner.height[v - 1]
    }

    pub fn is_branching(&self, v: usize) -> bool {
        self.inner.is_branching(v - 1)
    }

    pub fn external_slots(&self) -> Vec<ExternalSlot> {
        self.inner.external_slots(self.len())
    }

    pub fn external_slot_count(&self) -> usize {
        self.external_slots().len()
    }

    pub fn branchings(&self) -> Vec<usize> {
        self.inner.branchings()
    }

    /// Requires at least `m+1` vertices (one branching).
    pub fn s_values(&self) -> Result<Vec<usize>> {
        self.inner.s_values()
    }

    pub fn parent_labels(&self) -> Vec<usize> {
        self.inner.parent_labels()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.inner.slot
    }

    /// Puts the stem back on top.
    pub fn unreduce(&self) -> HistoricTree {
        let m = self.m();
        let mut inner = Skeleton::empty(m, 2 * m);
        for v in 0..m {
            inner.push_vertex(v.checked_sub(1), Slot::Only);
        }
        for v in 0..self.len() {
            let parent = Some(self.inner.parent[v].map_or(m - 1, |p| p + m));
            inner.push_vertex(parent, self.inner.slot[v]);
        }
        HistoricTree { inner }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeJson {
            m: self.m(),
            labels: self.len(),
            parent: self.parent_labels(),
            slot: self.inner.slot.clone(),
        })
        .expect("tree serializes")
    }

    pub fn to_dot(&self) -> String {
        self.inner.to_dot("reduced")
    }
}

pub fn reduce(t: &HistoricTree) -> Result<ReducedHistoricTree> {
    t.reduce()
}

pub fn unreduce(r: &ReducedHistoricTree) -> HistoricTree {
    r.unreduce()
}
