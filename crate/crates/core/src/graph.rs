//! Visiting order graphs.
//!
//! A graph is an inclusion forest over visit nodes (every node has exactly one
//! parent, which may be the `ROOT` pseudo-node) plus transition edges that
//! link siblings into simple chains. Raw edge lists live in [`GraphInput`],
//! which can hold arbitrary (possibly broken) structure and reports every
//! breach as a [`Violation`]. [`VisitingOrderGraph`] can only be obtained from
//! input that validates cleanly and is immutable afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Reserved identifier of the pseudo parent of top-level nodes.
pub const ROOT: &str = "ROOT";
/// Reserved identifier of the pseudo successor that ends a chain.
pub const EOS: &str = "EOS";
/// Separator between entity id and visit index in node references.
pub const VISIT_SEPARATOR: char = '#';

/// True for identifiers that may not be used as entity ids.
pub fn is_reserved_id(id: &str) -> bool {
    id == ROOT || id == EOS || id.contains(VISIT_SEPARATOR) || id.is_empty()
}

/// One visit episode of an entity. Single-visit entities have one node with
/// `visit_index == 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VisitNode {
    pub entity_id: String,
    pub visit_index: usize,
}

impl VisitNode {
    pub fn new(entity_id: impl Into<String>, visit_index: usize) -> Self {
        Self {
            entity_id: entity_id.into(),
            visit_index,
        }
    }

    pub fn single(entity_id: impl Into<String>) -> Self {
        Self::new(entity_id, 0)
    }
}

impl fmt::Display for VisitNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.visit_index == 0 {
            f.write_str(&self.entity_id)
        } else {
            write!(f, "{}{}{}", self.entity_id, VISIT_SEPARATOR, self.visit_index)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed node reference `{0}`")]
pub struct NodeRefError(pub String);

impl FromStr for VisitNode {
    type Err = NodeRefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NodeRefError(s.to_string());
        let (entity, index) = match s.split_once(VISIT_SEPARATOR) {
            Some((entity, k)) => {
                if k.is_empty() || !k.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                (entity, k.parse::<usize>().map_err(|_| bad())?)
            }
            None => (s, 0),
        };
        if is_reserved_id(entity) {
            return Err(bad());
        }
        Ok(VisitNode::new(entity, index))
    }
}

impl Serialize for VisitNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VisitNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parent of a node in the inclusion forest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parent {
    Root,
    Node(VisitNode),
}

impl Parent {
    pub fn node(&self) -> Option<&VisitNode> {
        match self {
            Parent::Root => None,
            Parent::Node(n) => Some(n),
        }
    }
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::Root => f.write_str(ROOT),
            Parent::Node(n) => n.fmt(f),
        }
    }
}

impl FromStr for Parent {
    type Err = NodeRefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == ROOT {
            Ok(Parent::Root)
        } else {
            s.parse().map(Parent::Node)
        }
    }
}

impl Serialize for Parent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Parent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Successor of a node in its sibling chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Successor {
    Node(VisitNode),
    Eos,
}

impl Successor {
    pub fn node(&self) -> Option<&VisitNode> {
        match self {
            Successor::Eos => None,
            Successor::Node(n) => Some(n),
        }
    }
}

impl fmt::Display for Successor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Successor::Eos => f.write_str(EOS),
            Successor::Node(n) => n.fmt(f),
        }
    }
}

/// Relative visiting order of two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderRelation {
    Before,
    After,
    Contains,
    ContainedBy,
    Same,
    Incomparable,
}

impl OrderRelation {
    pub fn inverse(self) -> Self {
        match self {
            OrderRelation::Before => OrderRelation::After,
            OrderRelation::After => OrderRelation::Before,
            OrderRelation::Contains => OrderRelation::ContainedBy,
            OrderRelation::ContainedBy => OrderRelation::Contains,
            other => other,
        }
    }
}

/// Structural breach categories. Declaration order is the reporting order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ViolationCode {
    CycleInclusion,
    MultiParent,
    TransitionNotSiblings,
    MultiSuccessor,
    MultiPredecessor,
    TransitionCycle,
    FragmentedChain,
    UnknownTimeNode,
    OverlapBothLinked,
    EmptyVisitPartition,
    DanglingReference,
}

impl ViolationCode {
    pub const ALL: [ViolationCode; 11] = [
        ViolationCode::CycleInclusion,
        ViolationCode::MultiParent,
        ViolationCode::TransitionNotSiblings,
        ViolationCode::MultiSuccessor,
        ViolationCode::MultiPredecessor,
        ViolationCode::TransitionCycle,
        ViolationCode::FragmentedChain,
        ViolationCode::UnknownTimeNode,
        ViolationCode::OverlapBothLinked,
        ViolationCode::EmptyVisitPartition,
        ViolationCode::DanglingReference,
    ];
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A single structural breach, with the node (or edge) it concerns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: String,
}

impl Violation {
    fn new(code: ViolationCode, subject: impl fmt::Display) -> Self {
        Self {
            code,
            subject: subject.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.code, self.subject)
    }
}

/// Whether sibling groups may hold several disjoint chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMode {
    #[default]
    Lenient,
    /// Every sibling group must form one chain covering all of its members
    /// (overlap non-representatives aside).
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("node `{0}` is not in the graph")]
    UnknownNode(VisitNode),
    #[error("invalid visit partitions for entity `{entity}`: {code} ({detail})")]
    Partition {
        entity: String,
        code: ViolationCode,
        detail: String,
    },
}

/// Raw graph edge lists, possibly violating any structural rule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphInput {
    pub nodes: Vec<VisitNode>,
    /// Mention-id partitions of multiply visited entities, one per episode.
    /// Entities without an entry have exactly one episode.
    pub visits: BTreeMap<String, Vec<Vec<String>>>,
    pub inclusion: Vec<(Parent, VisitNode)>,
    pub transition: Vec<(VisitNode, VisitNode)>,
    pub overlap: Vec<(VisitNode, VisitNode)>,
    /// Entities excluded from the graph for having an unknown visit time.
    pub excluded: BTreeSet<String>,
}

/// Edge structure that survived reference checks, shared by validation and
/// construction so both enforce identical rules.
struct Resolved {
    nodes: BTreeSet<VisitNode>,
    parent: BTreeMap<VisitNode, Parent>,
    successor: BTreeMap<VisitNode, VisitNode>,
    predecessor: BTreeMap<VisitNode, VisitNode>,
    overlap: BTreeSet<(VisitNode, VisitNode)>,
    violations: BTreeSet<Violation>,
}

impl GraphInput {
    pub fn validate(&self, mode: ChainMode) -> Vec<Violation> {
        self.resolve(mode).violations.into_iter().collect()
    }

    pub fn build(&self, mode: ChainMode) -> Result<VisitingOrderGraph, Vec<Violation>> {
        let resolved = self.resolve(mode);
        if !resolved.violations.is_empty() {
            return Err(resolved.violations.into_iter().collect());
        }
        let mut children: BTreeMap<Parent, Vec<VisitNode>> = BTreeMap::new();
        for (child, parent) in &resolved.parent {
            children.entry(parent.clone()).or_default().push(child.clone());
        }
        Ok(VisitingOrderGraph {
            nodes: resolved.nodes,
            parent: resolved.parent,
            successor: resolved.successor,
            predecessor: resolved.predecessor,
            children,
            overlap: resolved.overlap,
            excluded: self.excluded.clone(),
            visits: self.visits.clone(),
        })
    }

    fn resolve(&self, mode: ChainMode) -> Resolved {
        use ViolationCode::*;
        let mut violations = BTreeSet::new();
        let mut nodes = BTreeSet::new();

        for (entity, partitions) in &self.visits {
            let mut seen = BTreeSet::new();
            for (k, part) in partitions.iter().enumerate() {
                if part.is_empty() {
                    violations.insert(Violation::new(EmptyVisitPartition, VisitNode::new(entity.as_str(), k)));
                }
                for m in part {
                    if !seen.insert(m) {
                        violations.insert(Violation::new(EmptyVisitPartition, entity));
                    }
                }
            }
            if partitions.is_empty() {
                violations.insert(Violation::new(EmptyVisitPartition, entity));
            }
        }

        for node in &self.nodes {
            if is_reserved_id(&node.entity_id) {
                violations.insert(Violation::new(DanglingReference, &node.entity_id));
                continue;
            }
            if self.excluded.contains(&node.entity_id) {
                violations.insert(Violation::new(UnknownTimeNode, node));
                continue;
            }
            let episodes = self.visits.get(&node.entity_id).map_or(1, Vec::len);
            if node.visit_index >= episodes {
                violations.insert(Violation::new(DanglingReference, node));
                continue;
            }
            nodes.insert(node.clone());
        }

        let known = |n: &VisitNode, violations: &mut BTreeSet<Violation>| -> bool {
            if nodes.contains(n) {
                true
            } else {
                let code = if self.excluded.contains(&n.entity_id) {
                    UnknownTimeNode
                } else {
                    DanglingReference
                };
                violations.insert(Violation::new(code, n));
                false
            }
        };

        // inclusion
        let mut parents_of: BTreeMap<VisitNode, BTreeSet<Parent>> = BTreeMap::new();
        for (p, c) in &self.inclusion {
            let parent_ok = match p {
                Parent::Root => true,
                Parent::Node(pn) => known(pn, &mut violations),
            };
            if !known(c, &mut violations) || !parent_ok {
                continue;
            }
            if p.node() == Some(c) {
                violations.insert(Violation::new(CycleInclusion, c));
                continue;
            }
            parents_of.entry(c.clone()).or_default().insert(p.clone());
        }
        let mut parent: BTreeMap<VisitNode, Parent> = BTreeMap::new();
        for n in &nodes {
            let p = match parents_of.get(n) {
                Some(set) => {
                    if set.len() > 1 {
                        violations.insert(Violation::new(MultiParent, n));
                    }
                    set.iter().next().cloned().unwrap_or(Parent::Root)
                }
                None => Parent::Root,
            };
            parent.insert(n.clone(), p);
        }
        for cycle in functional_cycles(&parent) {
            violations.insert(Violation::new(CycleInclusion, &cycle[0]));
        }

        // transition
        let mut edges: BTreeSet<(VisitNode, VisitNode)> = BTreeSet::new();
        for (a, b) in &self.transition {
            let a_ok = known(a, &mut violations);
            let b_ok = known(b, &mut violations);
            if !a_ok || !b_ok {
                continue;
            }
            if a == b {
                violations.insert(Violation::new(TransitionCycle, a));
                continue;
            }
            edges.insert((a.clone(), b.clone()));
        }
        let mut out_deg: BTreeMap<&VisitNode, usize> = BTreeMap::new();
        let mut in_deg: BTreeMap<&VisitNode, usize> = BTreeMap::new();
        let mut successor = BTreeMap::new();
        let mut predecessor = BTreeMap::new();
        for (a, b) in &edges {
            *out_deg.entry(a).or_default() += 1;
            *in_deg.entry(b).or_default() += 1;
            if parent.get(a) != parent.get(b) {
                violations.insert(Violation::new(TransitionNotSiblings, format!("{a}->{b}")));
            }
            successor.entry(a.clone()).or_insert_with(|| b.clone());
            predecessor.entry(b.clone()).or_insert_with(|| a.clone());
        }
        for (n, d) in &out_deg {
            if *d > 1 {
                violations.insert(Violation::new(MultiSuccessor, n));
            }
        }
        for (n, d) in &in_deg {
            if *d > 1 {
                violations.insert(Violation::new(MultiPredecessor, n));
            }
        }
        for component in cyclic_components(&edges) {
            violations.insert(Violation::new(TransitionCycle, &component[0]));
        }

        // overlap
        let carries_edges = |n: &VisitNode| {
            !matches!(parent.get(n), Some(Parent::Root) | None)
                || parents_of
                    .values()
                    .any(|ps| ps.iter().any(|p| p.node() == Some(n)))
                || edges.iter().any(|(a, b)| a == n || b == n)
        };
        let mut overlap = BTreeSet::new();
        for (a, b) in &self.overlap {
            let a_ok = known(a, &mut violations);
            let b_ok = known(b, &mut violations);
            if !a_ok || !b_ok {
                continue;
            }
            if a == b {
                violations.insert(Violation::new(DanglingReference, format!("{a}~{b}")));
                continue;
            }
            let pair = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if carries_edges(&pair.0) && carries_edges(&pair.1) {
                violations.insert(Violation::new(OverlapBothLinked, format!("{}~{}", pair.0, pair.1)));
            }
            overlap.insert(pair);
        }

        if mode == ChainMode::Strict {
            let shadows = overlap_shadows(&overlap, &parent, &successor, &predecessor);
            let mut heads: BTreeMap<&Parent, usize> = BTreeMap::new();
            for (n, p) in &parent {
                if shadows.contains(n) {
                    continue;
                }
                let entry = heads.entry(p).or_default();
                if !predecessor.contains_key(n) {
                    *entry += 1;
                }
            }
            for (p, h) in heads {
                if h > 1 {
                    violations.insert(Violation::new(FragmentedChain, p));
                }
            }
        }

        Resolved {
            nodes,
            parent,
            successor,
            predecessor,
            overlap,
            violations,
        }
    }
}

/// Builds a graph from raw edge lists, or returns every violation found.
pub fn build_graph(input: &GraphInput, mode: ChainMode) -> Result<VisitingOrderGraph, Vec<Violation>> {
    input.build(mode)
}

/// Non-representative members of overlap pairs: the member without edges when
/// its partner has some, otherwise the larger of the two.
fn overlap_shadows(
    overlap: &BTreeSet<(VisitNode, VisitNode)>,
    parent: &BTreeMap<VisitNode, Parent>,
    successor: &BTreeMap<VisitNode, VisitNode>,
    predecessor: &BTreeMap<VisitNode, VisitNode>,
) -> BTreeSet<VisitNode> {
    let linked = |n: &VisitNode| {
        !matches!(parent.get(n), Some(Parent::Root) | None)
            || parent.values().any(|p| p.node() == Some(n))
            || successor.contains_key(n)
            || predecessor.contains_key(n)
    };
    overlap
        .iter()
        .map(|(a, b)| if linked(b) && !linked(a) { a.clone() } else { b.clone() })
        .collect()
}

/// Cycles of a functional graph given as child -> parent. Each cycle is
/// returned once, rotated so that its smallest member comes first.
fn functional_cycles(parent: &BTreeMap<VisitNode, Parent>) -> Vec<Vec<VisitNode>> {
    let mut state: BTreeMap<&VisitNode, u8> = BTreeMap::new(); // 1 = on path, 2 = done
    let mut cycles = Vec::new();
    for start in parent.keys() {
        if state.contains_key(start) {
            continue;
        }
        let mut path: Vec<&VisitNode> = Vec::new();
        let mut cur = Some(start);
        while let Some(n) = cur {
            match state.get(n) {
                Some(1) => {
                    let pos = path.iter().position(|x| *x == n).expect("on path");
                    let mut cycle: Vec<VisitNode> = path[pos..].iter().map(|x| (*x).clone()).collect();
                    let min = (0..cycle.len()).min_by_key(|&i| &cycle[i]).unwrap_or(0);
                    cycle.rotate_left(min);
                    cycles.push(cycle);
                    break;
                }
                Some(_) => break,
                None => {}
            }
            state.insert(n, 1);
            path.push(n);
            cur = parent.get(n).and_then(Parent::node);
            if let Some(next) = cur {
                if !parent.contains_key(next) {
                    break;
                }
            }
        }
        for n in path {
            state.insert(n, 2);
        }
    }
    cycles
}

/// Strongly connected components with more than one member, each sorted.
fn cyclic_components(edges: &BTreeSet<(VisitNode, VisitNode)>) -> Vec<Vec<VisitNode>> {
    let mut adj: BTreeMap<&VisitNode, Vec<&VisitNode>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default();
    }
    let ids: BTreeMap<&VisitNode, usize> = adj.keys().enumerate().map(|(i, n)| (*n, i)).collect();
    let names: Vec<&VisitNode> = adj.keys().copied().collect();
    let succ: Vec<Vec<usize>> = names.iter().map(|n| adj[n].iter().map(|m| ids[m]).collect()).collect();

    // Tarjan, iterative.
    let n = names.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(names[w].clone());
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 {
                        comp.sort();
                        out.push(comp);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// A validated visiting order graph. Immutable; all queries are reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitingOrderGraph {
    nodes: BTreeSet<VisitNode>,
    parent: BTreeMap<VisitNode, Parent>,
    successor: BTreeMap<VisitNode, VisitNode>,
    predecessor: BTreeMap<VisitNode, VisitNode>,
    children: BTreeMap<Parent, Vec<VisitNode>>,
    overlap: BTreeSet<(VisitNode, VisitNode)>,
    excluded: BTreeSet<String>,
    visits: BTreeMap<String, Vec<Vec<String>>>,
}

impl VisitingOrderGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &VisitNode> {
        self.nodes.iter()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: &VisitNode) -> bool {
        self.nodes.contains(node)
    }

    fn check(&self, node: &VisitNode) -> Result<(), GraphError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(node.clone()))
        }
    }

    pub fn parent(&self, node: &VisitNode) -> Option<&Parent> {
        self.parent.get(node)
    }

    pub fn successor(&self, node: &VisitNode) -> Option<&VisitNode> {
        self.successor.get(node)
    }

    pub fn predecessor(&self, node: &VisitNode) -> Option<&VisitNode> {
        self.predecessor.get(node)
    }

    /// Children of `parent`, in node order.
    pub fn children(&self, parent: &Parent) -> &[VisitNode] {
        self.children.get(parent).map_or(&[], Vec::as_slice)
    }

    /// Every parent that has at least one child, with its children.
    pub fn sibling_groups(&self) -> impl Iterator<Item = (&Parent, &[VisitNode])> {
        self.children.iter().map(|(p, c)| (p, c.as_slice()))
    }

    pub fn overlap(&self) -> &BTreeSet<(VisitNode, VisitNode)> {
        &self.overlap
    }

    pub fn excluded(&self) -> &BTreeSet<String> {
        &self.excluded
    }

    pub fn visits(&self) -> &BTreeMap<String, Vec<Vec<String>>> {
        &self.visits
    }

    /// Overlap members that are not the representative of their pair.
    pub fn overlap_shadows(&self) -> BTreeSet<VisitNode> {
        overlap_shadows(&self.overlap, &self.parent, &self.successor, &self.predecessor)
    }

    /// Number of parent steps to `ROOT`; children of `ROOT` have depth 1.
    pub fn depth(&self, node: &VisitNode) -> Result<usize, GraphError> {
        self.check(node)?;
        Ok(self.ancestors(node).len() + 1)
    }

    /// Proper ancestors of `node`, nearest first, excluding `ROOT`.
    pub fn ancestors(&self, node: &VisitNode) -> Vec<&VisitNode> {
        let mut out = Vec::new();
        let mut cur = self.parent.get(node);
        while let Some(Parent::Node(p)) = cur {
            out.push(p);
            cur = self.parent.get(p);
        }
        out
    }

    /// Siblings of `node` (same parent), excluding the node itself.
    pub fn siblings(&self, node: &VisitNode) -> Result<Vec<&VisitNode>, GraphError> {
        self.check(node)?;
        let parent = &self.parent[node];
        Ok(self.children(parent).iter().filter(|n| *n != node).collect())
    }

    /// True iff following successors from `from` reaches `to`.
    pub fn chain_reaches(&self, from: &VisitNode, to: &VisitNode) -> bool {
        let mut cur = self.successor.get(from);
        let mut steps = 0;
        while let Some(n) = cur {
            if n == to {
                return true;
            }
            steps += 1;
            if steps > self.nodes.len() {
                break;
            }
            cur = self.successor.get(n);
        }
        false
    }

    /// Visiting order of `a` relative to `b`, inferred by lifting transitions
    /// through the inclusion hierarchy to the children of the lowest common
    /// ancestor.
    pub fn order_relation(&self, a: &VisitNode, b: &VisitNode) -> Result<OrderRelation, GraphError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Ok(OrderRelation::Same);
        }
        // Paths from the top-level ancestor down to the node itself.
        let mut path_a: Vec<&VisitNode> = self.ancestors(a);
        path_a.reverse();
        path_a.push(a);
        let mut path_b: Vec<&VisitNode> = self.ancestors(b);
        path_b.reverse();
        path_b.push(b);

        let common = path_a.iter().zip(&path_b).take_while(|(x, y)| x == y).count();
        if common == path_a.len() {
            return Ok(OrderRelation::Contains);
        }
        if common == path_b.len() {
            return Ok(OrderRelation::ContainedBy);
        }
        let (x, y) = (path_a[common], path_b[common]);
        Ok(if self.chain_reaches(x, y) {
            OrderRelation::Before
        } else if self.chain_reaches(y, x) {
            OrderRelation::After
        } else {
            OrderRelation::Incomparable
        })
    }

    /// Parent of every node.
    pub fn parent_assignment(&self) -> BTreeMap<VisitNode, Parent> {
        self.parent.clone()
    }

    /// Successor of every node, `EOS` for chain tails and unchained nodes.
    pub fn successor_assignment(&self) -> BTreeMap<VisitNode, Successor> {
        self.nodes
            .iter()
            .map(|n| {
                let s = self.successor.get(n).map_or(Successor::Eos, |s| Successor::Node(s.clone()));
                (n.clone(), s)
            })
            .collect()
    }

    /// All ⟨parent, child⟩ pairs, including those whose parent is `ROOT`.
    pub fn inclusion_pairs(&self) -> BTreeSet<(Parent, VisitNode)> {
        self.parent.iter().map(|(c, p)| (p.clone(), c.clone())).collect()
    }

    /// All ⟨from, to⟩ transition pairs.
    pub fn transition_pairs(&self) -> BTreeSet<(VisitNode, VisitNode)> {
        self.successor.iter().map(|(a, b)| (a.clone(), b.clone())).collect()
    }

    /// Chains of the sibling group under `parent`, each from head to tail,
    /// ordered by head.
    pub fn chains(&self, parent: &Parent) -> Vec<Vec<VisitNode>> {
        self.children(parent)
            .iter()
            .filter(|n| !self.predecessor.contains_key(*n))
            .map(|head| {
                let mut chain = vec![head.clone()];
                let mut cur = self.successor.get(head);
                while let Some(n) = cur {
                    chain.push(n.clone());
                    cur = self.successor.get(n);
                }
                chain
            })
            .collect()
    }

    /// Raw edge lists that rebuild this graph. `ROOT` parents are implicit.
    pub fn to_input(&self) -> GraphInput {
        GraphInput {
            nodes: self.nodes.iter().cloned().collect(),
            visits: self.visits.clone(),
            inclusion: self
                .parent
                .iter()
                .filter(|(_, p)| **p != Parent::Root)
                .map(|(c, p)| (p.clone(), c.clone()))
                .collect(),
            transition: self.transition_pairs().into_iter().collect(),
            overlap: self.overlap.iter().cloned().collect(),
            excluded: self.excluded.clone(),
        }
    }
}

/// Splits a multiply visited entity into one node per visit episode.
pub fn split_multi_visit(
    entity_id: &str,
    mention_ids: &[String],
    partitions: &[Vec<String>],
) -> Result<Vec<VisitNode>, GraphError> {
    let err = |code, detail: String| GraphError::Partition {
        entity: entity_id.to_string(),
        code,
        detail,
    };
    if partitions.is_empty() {
        return Err(err(ViolationCode::EmptyVisitPartition, "no partitions".into()));
    }
    let own: BTreeSet<&String> = mention_ids.iter().collect();
    let mut seen: BTreeSet<&String> = BTreeSet::new();
    for (k, part) in partitions.iter().enumerate() {
        if part.is_empty() {
            return Err(err(ViolationCode::EmptyVisitPartition, format!("partition {k} is empty")));
        }
        for m in part {
            if !own.contains(m) {
                return Err(err(
                    ViolationCode::DanglingReference,
                    format!("mention `{m}` does not belong to the entity"),
                ));
            }
            if !seen.insert(m) {
                return Err(err(
                    ViolationCode::EmptyVisitPartition,
                    format!("mention `{m}` appears in more than one partition"),
                ));
            }
        }
    }
    Ok((0..partitions.len()).map(|k| VisitNode::new(entity_id, k)).collect())
}
