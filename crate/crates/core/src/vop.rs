//! Visiting order prediction: parent selection (inclusion) and successor
//! selection (transition).
//!
//! Scored systems pick, for each query node, the argmax candidate under a
//! [`PairwiseScorer`]. For transitions, the naive decoder does this
//! independently per node, which can leave a node with several predecessors;
//! [`sequence_sort`] instead greedily accepts the best remaining pair and
//! discards every pair that conflicts with it until one chain remains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::{Document, Mention};
use crate::graph::{Parent, Successor, VisitNode, VisitingOrderGraph, EOS, ROOT};
use crate::label::MentionLabel;
use crate::score::{argmax_first, ScoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    /// The candidate geographically includes the query.
    ParentOf,
    /// The candidate is visited directly after the query.
    SubsequentTo,
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationKind::ParentOf => "parent-of",
            RelationKind::SubsequentTo => "subsequent-to",
        })
    }
}

/// A candidate presented to a pairwise scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target<'a> {
    Root,
    Eos,
    Node(&'a VisitNode),
}

impl fmt::Display for Target<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Root => f.write_str(ROOT),
            Target::Eos => f.write_str(EOS),
            Target::Node(n) => n.fmt(f),
        }
    }
}

impl<'a> From<&'a Parent> for Target<'a> {
    fn from(p: &'a Parent) -> Self {
        match p {
            Parent::Root => Target::Root,
            Parent::Node(n) => Target::Node(n),
        }
    }
}

impl<'a> From<&'a Successor> for Target<'a> {
    fn from(s: &'a Successor) -> Self {
        match s {
            Successor::Eos => Target::Eos,
            Successor::Node(n) => Target::Node(n),
        }
    }
}

/// Pair score provider for parent and successor selection.
pub trait PairwiseScorer {
    fn score(
        &self,
        document: &Document,
        query: &VisitNode,
        candidate: Target<'_>,
        kind: RelationKind,
    ) -> Result<f64, ScoreError>;
}

impl<S: PairwiseScorer + ?Sized> PairwiseScorer for &S {
    fn score(
        &self,
        document: &Document,
        query: &VisitNode,
        candidate: Target<'_>,
        kind: RelationKind,
    ) -> Result<f64, ScoreError> {
        (**self).score(document, query, candidate, kind)
    }
}

pub type ParentAssignment = BTreeMap<VisitNode, Parent>;
pub type SuccessorAssignment = BTreeMap<VisitNode, Successor>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VopError {
    #[error("node `{0}` is not among the input nodes")]
    UnknownNode(VisitNode),
    #[error("node `{0}` has no mentions")]
    NoMentions(VisitNode),
    #[error("scoring ({query}, {candidate}) as {kind} failed: {source}")]
    Score {
        query: VisitNode,
        candidate: String,
        kind: RelationKind,
        #[source]
        source: ScoreError,
    },
}

fn scored(
    scorer: &impl PairwiseScorer,
    document: &Document,
    query: &VisitNode,
    candidate: Target<'_>,
    kind: RelationKind,
) -> Result<f64, VopError> {
    let wrap = |source| VopError::Score {
        query: query.clone(),
        candidate: candidate.to_string(),
        kind,
        source,
    };
    let s = scorer.score(document, query, candidate, kind).map_err(wrap)?;
    if s.is_finite() {
        Ok(s)
    } else {
        Err(wrap(ScoreError::NonFinite {
            query: format!("({query}, {candidate})"),
            value: s,
        }))
    }
}

/// Parent candidates of `query`: every other node, then `ROOT`.
pub fn irp_candidates(nodes: &[VisitNode], query: &VisitNode) -> Result<Vec<Parent>, VopError> {
    if !nodes.contains(query) {
        return Err(VopError::UnknownNode(query.clone()));
    }
    let others: BTreeSet<&VisitNode> = nodes.iter().filter(|n| *n != query).collect();
    Ok(others
        .into_iter()
        .map(|n| Parent::Node(n.clone()))
        .chain(std::iter::once(Parent::Root))
        .collect())
}

/// Successor candidates of `query`: its siblings, then `EOS`. Overlap
/// non-representatives take no part in transitions and are left out.
pub fn trp_candidates(graph: &VisitingOrderGraph, query: &VisitNode) -> Result<Vec<Successor>, VopError> {
    let siblings = graph
        .siblings(query)
        .map_err(|_| VopError::UnknownNode(query.clone()))?;
    let shadows = graph.overlap_shadows();
    Ok(siblings
        .into_iter()
        .filter(|n| !shadows.contains(*n))
        .map(|n| Successor::Node(n.clone()))
        .chain(std::iter::once(Successor::Eos))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepresentativeTask {
    /// Proper-noun mentions first.
    Irp,
    /// `Visit` mentions, then `See` mentions, then the rest.
    Trp,
}

/// Highest-priority mention for the task; earlier mentions win within a
/// priority class.
pub fn representative_mention<'d>(mentions: &[&'d Mention], task: RepresentativeTask) -> Option<&'d Mention> {
    let priority = |m: &Mention| -> u8 {
        match task {
            RepresentativeTask::Irp => u8::from(!m.is_proper_noun),
            RepresentativeTask::Trp => match m.label {
                Some(MentionLabel::Visit) => 0,
                Some(MentionLabel::See) => 1,
                _ => 2,
            },
        }
    };
    mentions
        .iter()
        .copied()
        .min_by(|a, b| (priority(a), a.occurrence_key()).cmp(&(priority(b), b.occurrence_key())))
}

/// Representative mention of a graph node.
pub fn node_representative<'d>(
    document: &'d Document,
    node: &VisitNode,
    task: RepresentativeTask,
) -> Result<&'d Mention, VopError> {
    representative_mention(&document.node_mentions(node), task).ok_or_else(|| VopError::NoMentions(node.clone()))
}

/// Argmax parent per node. Ties prefer entity candidates over `ROOT`, then
/// the candidate whose representative mention occurs first, then node id.
pub fn predict_parents<S: PairwiseScorer>(
    scorer: &S,
    document: &Document,
    nodes: &[VisitNode],
) -> Result<ParentAssignment, VopError> {
    let mut order: Vec<&VisitNode> = nodes.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let mut keys = BTreeMap::new();
    for n in &order {
        let rep = node_representative(document, n, RepresentativeTask::Irp)?;
        keys.insert(*n, (rep.sentence_index, rep.start, rep.end, rep.id.clone()));
    }
    order.sort_by(|a, b| keys[a].cmp(&keys[b]).then_with(|| a.cmp(b)));

    let mut out = ParentAssignment::new();
    for query in nodes.iter().collect::<BTreeSet<_>>() {
        let candidates: Vec<Parent> = order
            .iter()
            .filter(|n| **n != query)
            .map(|n| Parent::Node((*n).clone()))
            .chain(std::iter::once(Parent::Root))
            .collect();
        let scores = candidates
            .iter()
            .map(|c| scored(scorer, document, query, c.into(), RelationKind::ParentOf))
            .collect::<Result<Vec<f64>, _>>()?;
        let best = argmax_first(&scores).expect("ROOT is always a candidate");
        out.insert(query.clone(), candidates[best].clone());
    }
    Ok(out)
}

pub fn flat_baseline(nodes: &[VisitNode]) -> ParentAssignment {
    nodes.iter().map(|n| (n.clone(), Parent::Root)).collect()
}

/// Uniform parent choice from each node's candidate set.
pub fn random_parent_baseline(nodes: &[VisitNode], seed: u64) -> ParentAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sorted: Vec<VisitNode> = nodes.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    sorted
        .iter()
        .map(|q| {
            let candidates = irp_candidates(&sorted, q).expect("query is a member");
            let pick = rng.random_range(0..candidates.len());
            (q.clone(), candidates[pick].clone())
        })
        .collect()
}

/// Members of each sibling group under a parent assignment, minus the
/// excluded nodes, sorted.
pub fn sibling_groups(parents: &ParentAssignment, exclude: &BTreeSet<VisitNode>) -> BTreeMap<Parent, Vec<VisitNode>> {
    let mut groups: BTreeMap<Parent, Vec<VisitNode>> = BTreeMap::new();
    for (n, p) in parents {
        if !exclude.contains(n) {
            groups.entry(p.clone()).or_default().push(n.clone());
        }
    }
    groups
}

/// Successor assignment of a single chain visiting `order` front to back.
pub fn chain_assignment(order: &[VisitNode]) -> SuccessorAssignment {
    let mut out = SuccessorAssignment::new();
    for (i, n) in order.iter().enumerate() {
        let s = order.get(i + 1).map_or(Successor::Eos, |m| Successor::Node(m.clone()));
        out.insert(n.clone(), s);
    }
    out
}

/// Representative choice for occurrence ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OccStrategy {
    /// Earliest mention of the node.
    EarliestMention,
    /// Visit-status priority representative, as used for transitions.
    VisitStatus,
}

/// Chains a sibling group in the order its representative mentions occur.
pub fn occorder(document: &Document, group: &[VisitNode], strategy: OccStrategy) -> Result<SuccessorAssignment, VopError> {
    let mut keyed = Vec::with_capacity(group.len());
    for n in group {
        let rep = match strategy {
            OccStrategy::EarliestMention => document.earliest_mention(n).ok_or_else(|| VopError::NoMentions(n.clone()))?,
            OccStrategy::VisitStatus => node_representative(document, n, RepresentativeTask::Trp)?,
        };
        keyed.push(((rep.sentence_index, rep.start, rep.end, rep.id.clone()), n.clone()));
    }
    keyed.sort();
    let order: Vec<VisitNode> = keyed.into_iter().map(|(_, n)| n).collect();
    Ok(chain_assignment(&order))
}

/// Independent argmax successor per node over its siblings and `EOS`. Ties
/// go to the smallest node id, `EOS` last. May produce non-chains.
pub fn naive_score_decode<S: PairwiseScorer>(
    scorer: &S,
    document: &Document,
    group: &[VisitNode],
) -> Result<SuccessorAssignment, VopError> {
    let members: BTreeSet<&VisitNode> = group.iter().collect();
    let mut out = SuccessorAssignment::new();
    for &query in &members {
        let candidates: Vec<Successor> = members
            .iter()
            .filter(|n| **n != query)
            .map(|n| Successor::Node((*n).clone()))
            .chain(std::iter::once(Successor::Eos))
            .collect();
        let scores = candidates
            .iter()
            .map(|c| scored(scorer, document, query, c.into(), RelationKind::SubsequentTo))
            .collect::<Result<Vec<f64>, _>>()?;
        let best = argmax_first(&scores).expect("EOS is always a candidate");
        out.insert(query.clone(), candidates[best].clone());
    }
    Ok(out)
}

/// Greedy chain construction over a dense score matrix (`scores[i][j]` is
/// the score of `j` directly following `i`; the diagonal is ignored).
///
/// Pairs are taken in descending score order, ties by ascending `(i, j)`. A
/// pair is accepted unless `i` already has a successor, `j` already has a
/// predecessor, or it would close a cycle with accepted pairs. Returns the
/// resulting order, head first.
pub fn sequence_sort(scores: &[Vec<f64>]) -> Vec<usize> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&(a, b), &(c, d)| {
        scores[c][d]
            .partial_cmp(&scores[a][b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((a, b).cmp(&(c, d)))
    });

    let mut succ = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    // Chain membership: every node points at the head of its chain.
    let mut chain_head: Vec<usize> = (0..n).collect();
    let mut chain_tail: Vec<usize> = (0..n).collect();
    let mut accepted = 0;
    for (a, b) in pairs {
        if accepted + 1 == n {
            break;
        }
        if succ[a] != usize::MAX || pred[b] != usize::MAX {
            continue;
        }
        // a is a tail and b a head; they must belong to different chains.
        let head_a = chain_head[a];
        if head_a == b {
            continue;
        }
        succ[a] = b;
        pred[b] = a;
        accepted += 1;
        let tail_b = chain_tail[b];
        let mut cur = b;
        loop {
            chain_head[cur] = head_a;
            if cur == tail_b {
                break;
            }
            cur = succ[cur];
        }
        chain_tail[head_a] = tail_b;
    }

    let mut order = Vec::with_capacity(n);
    let mut cur = (0..n).find(|&i| pred[i] == usize::MAX).expect("a chain has a head");
    loop {
        order.push(cur);
        if succ[cur] == usize::MAX {
            break;
        }
        cur = succ[cur];
    }
    order
}

/// Sequence sorting decoding of one sibling group into a single chain.
/// `EOS` is not scored; the chain tail takes it.
pub fn sequence_sort_decode<S: PairwiseScorer>(
    scorer: &S,
    document: &Document,
    group: &[VisitNode],
) -> Result<SuccessorAssignment, VopError> {
    let members: Vec<VisitNode> = group.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let n = members.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                matrix[i][j] = scored(
                    scorer,
                    document,
                    &members[i],
                    Target::Node(&members[j]),
                    RelationKind::SubsequentTo,
                )?;
            }
        }
    }
    let order: Vec<VisitNode> = sequence_sort(&matrix).into_iter().map(|i| members[i].clone()).collect();
    Ok(chain_assignment(&order))
}

/// Uniformly random chain over the group.
pub fn random_order_baseline(group: &[VisitNode], seed: u64) -> SuccessorAssignment {
    let mut order: Vec<VisitNode> = group.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    chain_assignment(&order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoder {
    Naive,
    SequenceSort,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: &str) -> VisitNode {
        VisitNode::single(id)
    }

    fn mention(id: &str, entity: &str, sentence: usize, proper: bool, label: MentionLabel) -> Mention {
        Mention {
            id: id.into(),
            entity_id: entity.into(),
            sentence_index: sentence,
            start: 0,
            end: 1,
            surface: "x".into(),
            is_proper_noun: proper,
            label: Some(label),
        }
    }

    /// One mention per entity, entity `ids[i]` first mentioned in sentence
    /// `positions[i]`.
    fn doc_with_positions(ids: &[&str], positions: &[usize]) -> Document {
        use crate::document::Entity;
        Document {
            id: "d".into(),
            sentences: vec![],
            mentions: ids
                .iter()
                .zip(positions)
                .map(|(e, p)| mention(&format!("m_{e}"), e, *p, true, MentionLabel::Visit))
                .collect(),
            entities: ids
                .iter()
                .map(|e| Entity {
                    id: e.to_string(),
                    mention_ids: vec![format!("m_{e}")],
                    label: None,
                    unknown_time: false,
                    visits: None,
                })
                .collect(),
            graph: None,
        }
    }

    struct Table(BTreeMap<(String, String), f64>, f64);

    impl PairwiseScorer for Table {
        fn score(&self, _: &Document, q: &VisitNode, c: Target<'_>, _: RelationKind) -> Result<f64, ScoreError> {
            Ok(*self.0.get(&(q.to_string(), c.to_string())).unwrap_or(&self.1))
        }
    }

    fn table(entries: &[(&str, &str, f64)], default: f64) -> Table {
        Table(
            entries.iter().map(|(a, b, s)| ((a.to_string(), b.to_string()), *s)).collect(),
            default,
        )
    }

    #[test]
    fn irp_candidate_sets() {
        let nodes = vec![n("A"), n("B"), n("C")];
        assert_eq!(
            irp_candidates(&nodes, &n("A")).unwrap(),
            vec![Parent::Node(n("B")), Parent::Node(n("C")), Parent::Root]
        );
        assert_eq!(irp_candidates(&[n("A")], &n("A")).unwrap(), vec![Parent::Root]);
        assert!(irp_candidates(&nodes, &n("Z")).is_err());
        let many: Vec<VisitNode> = (0..13).map(|i| n(&format!("e{i}"))).collect();
        assert_eq!(irp_candidates(&many, &many[4]).unwrap().len(), 13);
    }

    #[test]
    fn representative_selection() {
        use MentionLabel::*;
        let general = mention("a", "e", 1, false, Visit);
        let proper = mention("b", "e", 4, true, Visit);
        assert_eq!(representative_mention(&[&general, &proper], RepresentativeTask::Irp).unwrap().id, "b");
        let general2 = mention("c", "e", 0, false, Visit);
        assert_eq!(representative_mention(&[&general, &general2], RepresentativeTask::Irp).unwrap().id, "c");

        let see = mention("a", "e", 1, true, See);
        let visit = mention("b", "e", 5, true, Visit);
        assert_eq!(representative_mention(&[&see, &visit], RepresentativeTask::Trp).unwrap().id, "b");
        let v1 = mention("a", "e", 2, true, Visit);
        let v2 = mention("b", "e", 6, true, Visit);
        assert_eq!(representative_mention(&[&v2, &v1], RepresentativeTask::Trp).unwrap().id, "a");
        let unk = mention("u", "e", 0, true, UnkOrNotVisit);
        assert_eq!(representative_mention(&[&unk, &see], RepresentativeTask::Trp).unwrap().id, "a");
        assert!(representative_mention(&[], RepresentativeTask::Trp).is_none());
    }

    #[test]
    fn parent_argmax_and_ties() {
        let doc = doc_with_positions(&["A", "B", "C"], &[0, 1, 2]);
        let nodes = vec![n("A"), n("B"), n("C")];
        let s = table(&[("A", "B", 0.9), ("A", "ROOT", 0.5)], 0.0);
        let p = predict_parents(&s, &doc, &nodes).unwrap();
        assert_eq!(p[&n("A")], Parent::Node(n("B")));

        // ROOT bonus dominates a constant-zero scorer.
        let s = table(&[("A", "ROOT", 1e-6), ("B", "ROOT", 1e-6), ("C", "ROOT", 1e-6)], 0.0);
        let p = predict_parents(&s, &doc, &nodes).unwrap();
        assert!(p.values().all(|x| *x == Parent::Root));

        // All ties: earliest-mentioned entity wins over ROOT.
        let doc = doc_with_positions(&["A", "B", "C"], &[5, 3, 1]);
        let p = predict_parents(&table(&[], 0.0), &doc, &nodes).unwrap();
        assert_eq!(p[&n("A")], Parent::Node(n("C")));
        assert_eq!(p[&n("C")], Parent::Node(n("B")));
    }

    #[test]
    fn flat_and_random_parents() {
        assert!(flat_baseline(&[]).is_empty());
        let nodes = vec![n("A"), n("B"), n("C"), n("D")];
        assert!(flat_baseline(&nodes).values().all(|p| *p == Parent::Root));
        assert_eq!(random_parent_baseline(&[n("A")], 3)[&n("A")], Parent::Root);
        assert_eq!(random_parent_baseline(&nodes, 3), random_parent_baseline(&nodes, 3));
        for (q, p) in random_parent_baseline(&nodes, 9) {
            assert_ne!(p, Parent::Node(q));
        }
    }

    #[test]
    fn random_parent_choice_is_uniform() {
        // 4 nodes: 4 candidates per query; count choices of node A.
        let nodes = vec![n("A"), n("B"), n("C"), n("D")];
        let mut counts: BTreeMap<Parent, usize> = BTreeMap::new();
        for seed in 0..10_000 {
            let p = random_parent_baseline(&nodes, seed);
            *counts.entry(p[&n("A")].clone()).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            assert!((2350..=2650).contains(c), "{counts:?}");
        }
    }

    #[test]
    fn occorder_early_mention() {
        let doc = doc_with_positions(&["X", "Y", "Z"], &[3, 1, 7]);
        let s = occorder(&doc, &[n("X"), n("Y"), n("Z")], OccStrategy::EarliestMention).unwrap();
        assert_eq!(s[&n("Y")], Successor::Node(n("X")));
        assert_eq!(s[&n("X")], Successor::Node(n("Z")));
        assert_eq!(s[&n("Z")], Successor::Eos);
        let single = occorder(&doc, &[n("X")], OccStrategy::EarliestMention).unwrap();
        assert_eq!(single[&n("X")], Successor::Eos);
    }

    #[test]
    fn occorder_strategies_differ_on_visit_priority() {
        use crate::document::Entity;
        // P: UnkOrNotVisit mention at 0, Visit mention at 5. Q: single Visit mention at 2.
        let doc = Document {
            id: "d".into(),
            sentences: vec![],
            mentions: vec![
                mention("p0", "P", 0, true, MentionLabel::UnkOrNotVisit),
                mention("q0", "Q", 2, true, MentionLabel::Visit),
                mention("p1", "P", 5, true, MentionLabel::Visit),
            ],
            entities: vec![
                Entity { id: "P".into(), mention_ids: vec!["p0".into(), "p1".into()], label: None, unknown_time: false, visits: None },
                Entity { id: "Q".into(), mention_ids: vec!["q0".into()], label: None, unknown_time: false, visits: None },
            ],
            graph: None,
        };
        let group = [n("P"), n("Q")];
        let em = occorder(&doc, &group, OccStrategy::EarliestMention).unwrap();
        let vs = occorder(&doc, &group, OccStrategy::VisitStatus).unwrap();
        assert_eq!(em[&n("P")], Successor::Node(n("Q")));
        assert_eq!(vs[&n("Q")], Successor::Node(n("P")));
        assert_eq!(vs[&n("P")], Successor::Eos);
    }

    #[test]
    fn naive_decoding_is_independent_per_node() {
        let doc = doc_with_positions(&["A", "B", "C"], &[0, 1, 2]);
        let group = [n("A"), n("B"), n("C")];
        let s = table(&[("A", "C", 0.9), ("B", "C", 0.8), ("C", "EOS", 0.7)], 0.0);
        let out = naive_score_decode(&s, &doc, &group).unwrap();
        assert_eq!(out[&n("A")], Successor::Node(n("C")));
        assert_eq!(out[&n("B")], Successor::Node(n("C")));
        assert_eq!(out[&n("C")], Successor::Eos);

        let eos = table(&[("A", "EOS", 1.0), ("B", "EOS", 1.0), ("C", "EOS", 1.0)], 0.0);
        assert!(naive_score_decode(&eos, &doc, &group).unwrap().values().all(|s| *s == Successor::Eos));
    }

    #[test]
    fn sequence_sort_hand_run() {
        // (A,B)=0.9,(B,C)=0.8,(C,A)=0.4,(A,C)=0.3,(C,B)=0.2,(B,A)=0.1
        let m = vec![vec![0.0, 0.9, 0.3], vec![0.1, 0.0, 0.8], vec![0.4, 0.2, 0.0]];
        assert_eq!(sequence_sort(&m), vec![0, 1, 2]);
        assert_eq!(sequence_sort(&[vec![0.0]]), vec![0]);
        assert!(sequence_sort(&[]).is_empty());
    }

    #[test]
    fn sequence_sort_skips_cycle_closing_pairs() {
        // Best pairs form A->B, B->A is excluded, C->A would be fine but
        // after A->B and B->C, C->A closes a cycle.
        let m = vec![vec![0.0, 0.9, 0.0], vec![0.85, 0.0, 0.8], vec![0.7, 0.1, 0.0]];
        assert_eq!(sequence_sort(&m), vec![0, 1, 2]);
        // Equal scores: lexicographic pair order.
        let m = vec![vec![0.0; 3]; 3];
        assert_eq!(sequence_sort(&m), vec![0, 1, 2]);
    }

    #[test]
    fn sequence_sort_decode_on_nodes() {
        let doc = doc_with_positions(&["A", "B", "C"], &[0, 1, 2]);
        let s = table(&[("C", "A", 0.9), ("A", "B", 0.8)], 0.0);
        let out = sequence_sort_decode(&s, &doc, &[n("A"), n("B"), n("C")]).unwrap();
        assert_eq!(out[&n("C")], Successor::Node(n("A")));
        assert_eq!(out[&n("A")], Successor::Node(n("B")));
        assert_eq!(out[&n("B")], Successor::Eos);

        let nan = table(&[("A", "B", f64::NAN)], 0.0);
        assert!(matches!(
            sequence_sort_decode(&nan, &doc, &[n("A"), n("B")]),
            Err(VopError::Score { .. })
        ));
    }

    #[test]
    fn random_order_is_seeded_and_uniform() {
        assert_eq!(random_order_baseline(&[n("A")], 1)[&n("A")], Successor::Eos);
        let group = [n("A"), n("B"), n("C")];
        assert_eq!(random_order_baseline(&group, 5), random_order_baseline(&group, 5));
        let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for seed in 0..12_000 {
            let s = random_order_baseline(&group, seed);
            let head = group.iter().find(|x| !s.values().any(|v| v == &Successor::Node((*x).clone()))).unwrap();
            let mut order = vec![head.to_string()];
            let mut cur = head.clone();
            while let Successor::Node(next) = &s[&cur] {
                order.push(next.to_string());
                cur = next.clone();
            }
            *counts.entry(order).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        // Expected 2000 each; binomial sd is about 41.
        for c in counts.values() {
            assert!((1800..=2200).contains(c), "{counts:?}");
        }
    }

    #[test]
    fn sibling_groups_respect_exclusions() {
        let parents = ParentAssignment::from([
            (n("A"), Parent::Root),
            (n("B"), Parent::Root),
            (n("C"), Parent::Node(n("A"))),
        ]);
        let g = sibling_groups(&parents, &BTreeSet::from([n("B")]));
        assert_eq!(g[&Parent::Root], vec![n("A")]);
        assert_eq!(g[&Parent::Node(n("A"))], vec![n("C")]);
    }
}
