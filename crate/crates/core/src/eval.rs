//! Relation-pair F1 with per-depth, direction, and group-size breakdowns, and
//! agreement measures between two annotations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::ops::{Add, AddAssign};

use serde::Serialize;

use crate::document::Document;
use crate::graph::{Parent, Successor, VisitNode, VisitingOrderGraph};
use crate::vop::{ParentAssignment, SuccessorAssignment};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("predicted node `{0}` is not a gold node")]
    UnknownNode(VisitNode),
    #[error("no prediction for gold node `{0}`")]
    MissingPrediction(VisitNode),
    #[error("predicted successor {from} -> {to} leaves the gold sibling group")]
    OutsideSiblingGroup { from: VisitNode, to: VisitNode },
    #[error("node `{0}` has no mentions")]
    NoMentions(VisitNode),
    #[error("document sets differ: {0}")]
    DocumentMismatch(String),
    #[error("annotations have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no items to compare")]
    Empty,
    #[error("annotated items differ: {0}")]
    ItemMismatch(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PairCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl PairCounts {
    pub fn gold(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn predicted(&self) -> usize {
        self.tp + self.fp
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.predicted())
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.gold())
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    pub fn report(&self) -> PairF1Report {
        PairF1Report {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            breakdowns: BTreeMap::new(),
        }
    }
}

impl Add for PairCounts {
    type Output = PairCounts;

    fn add(self, o: PairCounts) -> PairCounts {
        PairCounts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for PairCounts {
    fn add_assign(&mut self, o: PairCounts) {
        *self = *self + o;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairF1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub breakdowns: BTreeMap<String, PairF1Report>,
}

impl PairF1Report {
    pub fn counts(&self) -> PairCounts {
        PairCounts { tp: self.tp, fp: self.fp, fn_: self.fn_ }
    }
}

pub fn pair_counts<T: Ord>(gold: &BTreeSet<T>, predicted: &BTreeSet<T>) -> PairCounts {
    let tp = gold.intersection(predicted).count();
    PairCounts { tp, fp: predicted.len() - tp, fn_: gold.len() - tp }
}

pub fn pair_f1<T: Ord>(gold: &BTreeSet<T>, predicted: &BTreeSet<T>) -> PairF1Report {
    pair_counts(gold, predicted).report()
}

/// Counts overall and per breakdown key. Adding tallies pools them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairTally {
    pub overall: PairCounts,
    pub groups: BTreeMap<String, PairCounts>,
}

impl PairTally {
    /// Tallies two pair sets; `keys` assigns each pair to breakdown groups.
    pub fn from_sets<T: Ord>(
        gold: &BTreeSet<T>,
        predicted: &BTreeSet<T>,
        mut keys: impl FnMut(&T) -> Vec<String>,
    ) -> Self {
        let mut t = PairTally { overall: pair_counts(gold, predicted), groups: BTreeMap::new() };
        let mut bump = |pair: &T, f: fn(&mut PairCounts)| {
            for k in keys(pair) {
                f(t.groups.entry(k).or_default());
            }
        };
        for p in gold {
            if predicted.contains(p) {
                bump(p, |c| c.tp += 1);
            } else {
                bump(p, |c| c.fn_ += 1);
            }
        }
        for p in predicted.difference(gold) {
            bump(p, |c| c.fp += 1);
        }
        t
    }

    pub fn report(&self) -> PairF1Report {
        let mut r = self.overall.report();
        r.breakdowns = self.groups.iter().map(|(k, c)| (k.clone(), c.report())).collect();
        r
    }
}

impl AddAssign for PairTally {
    fn add_assign(&mut self, o: PairTally) {
        self.overall += o.overall;
        for (k, c) in o.groups {
            *self.groups.entry(k).or_default() += c;
        }
    }
}

impl Add for PairTally {
    type Output = PairTally;

    fn add(mut self, o: PairTally) -> PairTally {
        self += o;
        self
    }
}

pub const DEPTH_SHALLOW: &str = "depth=1";
pub const DEPTH_DEEP: &str = "depth>=2";
pub const FORWARD: &str = "fwd";
pub const REVERSE: &str = "rev";
/// Groups of this size or more share one bucket.
pub const SIZE_CAP: usize = 10;

pub fn depth_key(depth: usize) -> String {
    format!("depth={depth}")
}

pub fn size_key(size: usize) -> String {
    if size >= SIZE_CAP {
        format!("size>={SIZE_CAP}")
    } else {
        format!("size={size}")
    }
}

/// Inclusion pairs `(parent, child)`, `ROOT` pairs included. Breakdown by the
/// child's gold depth: `depth=1`, `depth>=2`, and each `depth=k`.
pub fn irp_tally(gold: &VisitingOrderGraph, predicted: &ParentAssignment) -> Result<PairTally, EvalError> {
    if let Some(n) = predicted.keys().find(|n| !gold.contains(n)) {
        return Err(EvalError::UnknownNode(n.clone()));
    }
    if let Some(n) = gold.nodes().find(|n| !predicted.contains_key(*n)) {
        return Err(EvalError::MissingPrediction(n.clone()));
    }
    let pred: BTreeSet<(Parent, VisitNode)> = predicted.iter().map(|(c, p)| (p.clone(), c.clone())).collect();
    Ok(PairTally::from_sets(&gold.inclusion_pairs(), &pred, |(_, child)| {
        let d = gold.depth(child).expect("child is a gold node");
        let band = if d == 1 { DEPTH_SHALLOW } else { DEPTH_DEEP };
        if d == 1 {
            vec![band.to_string()]
        } else {
            vec![band.to_string(), depth_key(d)]
        }
    }))
}

pub fn evaluate_irp(gold: &VisitingOrderGraph, predicted: &ParentAssignment) -> Result<PairF1Report, EvalError> {
    Ok(irp_tally(gold, predicted)?.report())
}

/// Transition pairs `(from, to)`, `EOS` excluded. Each pair falls into `fwd`
/// or `rev` by the earliest-mention order of its two nodes, and into a size
/// bucket by the size of the source's gold sibling group. Nodes missing from
/// the prediction are taken to precede `EOS`.
pub fn trp_tally(
    gold: &VisitingOrderGraph,
    predicted: &SuccessorAssignment,
    document: &Document,
) -> Result<PairTally, EvalError> {
    let shadows = gold.overlap_shadows();
    let mut pred = BTreeSet::new();
    for (from, succ) in predicted {
        if !gold.contains(from) {
            return Err(EvalError::UnknownNode(from.clone()));
        }
        if let Successor::Node(to) = succ {
            let same_group = gold.contains(to) && to != from && gold.parent(to) == gold.parent(from);
            if !same_group {
                return Err(EvalError::OutsideSiblingGroup { from: from.clone(), to: to.clone() });
            }
            pred.insert((from.clone(), to.clone()));
        }
    }

    let mut first = BTreeMap::new();
    for n in gold.nodes() {
        let m = document.earliest_mention(n).ok_or_else(|| EvalError::NoMentions(n.clone()))?;
        first.insert(n.clone(), (m.sentence_index, m.start, m.end, m.id.clone()));
    }
    let group_size = |n: &VisitNode| -> usize {
        let parent = gold.parent(n).expect("gold node");
        if shadows.contains(n) {
            1
        } else {
            gold.children(parent).iter().filter(|s| !shadows.contains(*s)).count()
        }
    };
    Ok(PairTally::from_sets(&gold.transition_pairs(), &pred, |(a, b)| {
        let dir = if first[a] < first[b] { FORWARD } else { REVERSE };
        vec![dir.to_string(), size_key(group_size(a))]
    }))
}

pub fn evaluate_trp(
    gold: &VisitingOrderGraph,
    predicted: &SuccessorAssignment,
    document: &Document,
) -> Result<PairF1Report, EvalError> {
    Ok(trp_tally(gold, predicted, document)?.report())
}

/// Corpus-level pair F1: pairs pooled over documents, plus the mean of the
/// per-document F1 values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusPairReport {
    pub pooled: PairF1Report,
    pub documents: usize,
    pub document_mean_f1: f64,
}

pub fn pool_tallies(tallies: impl IntoIterator<Item = PairTally>) -> CorpusPairReport {
    let mut total = PairTally::default();
    let mut documents = 0;
    let mut f1_sum = 0.0;
    for t in tallies {
        documents += 1;
        f1_sum += t.overall.f1();
        total += t;
    }
    CorpusPairReport {
        pooled: total.report(),
        documents,
        document_mean_f1: if documents == 0 { 0.0 } else { f1_sum / documents as f64 },
    }
}

/// F1 between two annotations of per-document pair sets, pooling all
/// documents. Symmetric in its arguments.
pub fn iaa_f1<T: Ord + Clone>(
    a: &BTreeMap<String, BTreeSet<T>>,
    b: &BTreeMap<String, BTreeSet<T>>,
) -> Result<f64, EvalError> {
    if let Some(d) = a.keys().find(|d| !b.contains_key(*d)).or_else(|| b.keys().find(|d| !a.contains_key(*d))) {
        return Err(EvalError::DocumentMismatch(format!("`{d}` is annotated only once")));
    }
    let tag = |m: &BTreeMap<String, BTreeSet<T>>| -> BTreeSet<(String, T)> {
        m.iter().flat_map(|(d, s)| s.iter().map(move |p| (d.clone(), p.clone()))).collect()
    };
    Ok(pair_counts(&tag(a), &tag(b)).f1())
}

/// Cohen's kappa for two aligned labelings.
pub fn cohens_kappa<L: Ord>(a: &[L], b: &[L]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut ma: BTreeMap<&L, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&L, usize> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
    }
    let p_o = agree / n;
    let p_e: f64 = ma
        .iter()
        .map(|(l, &ca)| (ca as f64 / n) * (*mb.get(l).unwrap_or(&0) as f64 / n))
        .sum();
    if p_e >= 1.0 {
        // Both annotators used one and the same label throughout.
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub f1: f64,
    /// Absent for relation sets, which have no aligned items.
    pub kappa: Option<f64>,
    pub items: usize,
}

/// Agreement between two labelings of the same items: F1 over the
/// (item, label) sets and Cohen's kappa over the aligned labels.
pub fn label_agreement<K: Ord + Clone + Debug, L: Ord + Clone>(
    a: &BTreeMap<K, L>,
    b: &BTreeMap<K, L>,
) -> Result<AgreementReport, EvalError> {
    if let Some(k) = a.keys().find(|k| !b.contains_key(*k)).or_else(|| b.keys().find(|k| !a.contains_key(*k))) {
        return Err(EvalError::ItemMismatch(format!("{k:?} is labeled only once")));
    }
    let la: Vec<L> = a.values().cloned().collect();
    let lb: Vec<L> = b.values().cloned().collect();
    let kappa = cohens_kappa(&la, &lb)?;
    let sa: BTreeSet<(K, L)> = a.iter().map(|(k, l)| (k.clone(), l.clone())).collect();
    let sb: BTreeSet<(K, L)> = b.iter().map(|(k, l)| (k.clone(), l.clone())).collect();
    Ok(AgreementReport { f1: pair_counts(&sa, &sb).f1(), kappa: Some(kappa), items: a.len() })
}

/// Agreement on relation pairs: pooled F1 and the number of distinct pairs
/// in either annotation.
pub fn relation_agreement<T: Ord + Clone>(
    a: &BTreeMap<String, BTreeSet<T>>,
    b: &BTreeMap<String, BTreeSet<T>>,
) -> Result<AgreementReport, EvalError> {
    let f1 = iaa_f1(a, b)?;
    let items = a.iter().map(|(d, s)| s.union(&b[d]).count()).sum();
    Ok(AgreementReport { f1, kappa: None, items })
}
