//! Reading and writing annotated corpora, deterministic splits, and corpus
//! statistics.
//!
//! Documents are JSON objects, one per line in a collection (JSON-lines).
//! Readers also accept a single pretty-printed object or any sequence of
//! concatenated objects. Writers always emit the canonical form: keys in
//! sorted order, one document per line, LF-terminated.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::{Document, Entity, GraphEdges, Mention, Sentence};
use crate::graph::{is_reserved_id, ChainMode, Parent, Violation, VisitNode, ROOT};
use crate::label::{EntityLabel, Label, MentionLabel};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("document `{document}`: {path}: {message}")]
    Invalid {
        document: String,
        path: String,
        message: String,
    },
    #[error("document `{document}`: gold graph is invalid: {}", join_violations(.violations))]
    Graph {
        document: String,
        violations: Vec<Violation>,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("split needs at least {parts} documents, got {got}")]
    TooFewDocuments { parts: usize, got: usize },
    #[error("invalid split ratio `{0}`: expected positive integers like 7:1:2")]
    BadRatio(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

// Wire schema. Field declaration order is alphabetical so that serialization
// emits sorted keys.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    entities: Vec<RawEntity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<RawGraph>,
    id: String,
    mentions: Vec<RawMention>,
    sentences: Vec<RawSentence>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSentence {
    id: String,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMention {
    end: usize,
    entity_id: String,
    id: String,
    is_proper_noun: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<MentionLabel>,
    sentence_id: String,
    start: usize,
    surface: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntity {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<EntityLabel>,
    mention_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    unknown_time: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    visits: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    #[serde(default)]
    inclusion: Vec<[String; 2]>,
    #[serde(default)]
    overlap: Vec<[String; 2]>,
    #[serde(default)]
    transition: Vec<[String; 2]>,
}

/// Parses one document and checks that its gold graph, if any, is valid.
pub fn parse_document(bytes: &[u8]) -> Result<Document, CorpusError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| invalid("?", "$", e))?;
    document_from_value(value, true)
}

/// Parses one document, checking the schema and cross-references but not the
/// structure of its graph. Used for system predictions and for `validate`.
pub fn parse_document_unchecked(bytes: &[u8]) -> Result<Document, CorpusError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| invalid("?", "$", e))?;
    document_from_value(value, false)
}

/// Parses a collection: JSON-lines or concatenated JSON objects.
pub fn parse_corpus(bytes: &[u8], check_graph: bool) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut ids = BTreeSet::new();
    let stream = serde_json::Deserializer::from_slice(bytes).into_iter::<serde_json::Value>();
    for (i, value) in stream.enumerate() {
        let value = value.map_err(|e| invalid(&format!("#{i}"), "$", e))?;
        let doc = document_from_value(value, check_graph)?;
        if !ids.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateDocument(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: &Path, check_graph: bool) -> Result<Vec<Document>, CorpusError> {
    let bytes = std::fs::read(path)?;
    parse_corpus(&bytes, check_graph)
}

pub fn save_corpus(path: &Path, documents: &[Document]) -> Result<(), CorpusError> {
    std::fs::write(path, serialize_corpus(documents))?;
    Ok(())
}

/// Canonical single-line JSON followed by LF.
pub fn serialize_document(document: &Document) -> Vec<u8> {
    let raw = to_raw(document);
    let mut out = serde_json::to_vec(&raw).expect("document serialization is infallible");
    out.push(b'\n');
    out
}

pub fn serialize_corpus(documents: &[Document]) -> Vec<u8> {
    documents.iter().flat_map(serialize_document).collect()
}

fn invalid(document: &str, path: &str, message: impl fmt::Display) -> CorpusError {
    CorpusError::Invalid {
        document: document.to_string(),
        path: path.to_string(),
        message: message.to_string(),
    }
}

fn document_from_value(value: serde_json::Value, check_graph: bool) -> Result<Document, CorpusError> {
    let doc_id = value
        .get("id")
        .and_then(|v| v.as_str())
        .unwrap_or("?")
        .to_string();
    let raw: RawDocument = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        invalid(&doc_id, &path, e.into_inner())
    })?;
    let doc = from_raw(raw)?;
    if check_graph {
        if let Err(violations) = doc.build_graph(ChainMode::Lenient) {
            return Err(CorpusError::Graph {
                document: doc.id,
                violations,
            });
        }
    }
    Ok(doc)
}

fn from_raw(raw: RawDocument) -> Result<Document, CorpusError> {
    let doc_id = raw.id.clone();
    let err = |path: String, message: String| invalid(&doc_id, &path, message);
    if raw.id.is_empty() {
        return Err(err("id".into(), "document id is empty".into()));
    }

    let mut sentence_index = BTreeMap::new();
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for (i, s) in raw.sentences.into_iter().enumerate() {
        if sentence_index.insert(s.id.clone(), i).is_some() {
            return Err(err(format!("sentences[{i}].id"), format!("duplicate sentence id `{}`", s.id)));
        }
        sentences.push(Sentence { id: s.id, text: s.text });
    }

    let entity_ids: BTreeSet<&str> = raw.entities.iter().map(|e| e.id.as_str()).collect();
    let mut mention_ids = BTreeSet::new();
    let mut mentions = Vec::with_capacity(raw.mentions.len());
    for (i, m) in raw.mentions.into_iter().enumerate() {
        let at = |field: &str| format!("mentions[{i}].{field}");
        if !mention_ids.insert(m.id.clone()) {
            return Err(err(at("id"), format!("duplicate mention id `{}`", m.id)));
        }
        let Some(&si) = sentence_index.get(&m.sentence_id) else {
            return Err(err(at("sentence_id"), format!("unknown sentence `{}`", m.sentence_id)));
        };
        if !entity_ids.contains(m.entity_id.as_str()) {
            return Err(err(at("entity_id"), format!("unknown entity `{}`", m.entity_id)));
        }
        let text = &sentences[si].text;
        let len = text.chars().count();
        if m.start >= m.end {
            return Err(err(at("start"), format!("start {} is not before end {}", m.start, m.end)));
        }
        if m.end > len {
            return Err(err(at("end"), format!("end {} exceeds sentence length {len}", m.end)));
        }
        let slice: String = text.chars().skip(m.start).take(m.end - m.start).collect();
        if slice != m.surface {
            return Err(err(
                at("surface"),
                format!("surface `{}` does not match sentence text `{slice}`", m.surface),
            ));
        }
        mentions.push(Mention {
            id: m.id,
            entity_id: m.entity_id,
            sentence_index: si,
            start: m.start,
            end: m.end,
            surface: m.surface,
            is_proper_noun: m.is_proper_noun,
            label: m.label,
        });
    }
    let mention_by_id: BTreeMap<&str, &Mention> = mentions.iter().map(|m| (m.id.as_str(), m)).collect();

    let mut seen_entities = BTreeSet::new();
    let mut claimed: BTreeMap<&str, usize> = BTreeMap::new();
    let mut entities = Vec::with_capacity(raw.entities.len());
    for (i, e) in raw.entities.into_iter().enumerate() {
        let at = |field: &str| format!("entities[{i}].{field}");
        if is_reserved_id(&e.id) {
            return Err(err(at("id"), format!("`{}` is reserved or contains `#`", e.id)));
        }
        if !seen_entities.insert(e.id.clone()) {
            return Err(err(at("id"), format!("duplicate entity id `{}`", e.id)));
        }
        if e.mention_ids.is_empty() {
            return Err(err(at("mention_ids"), "entity has no mentions".into()));
        }
        let mut members = e.mention_ids.clone();
        for (j, mid) in e.mention_ids.iter().enumerate() {
            let Some(m) = mention_by_id.get(mid.as_str()) else {
                return Err(err(format!("entities[{i}].mention_ids[{j}]"), format!("unknown mention `{mid}`")));
            };
            if m.entity_id != e.id {
                return Err(err(
                    format!("entities[{i}].mention_ids[{j}]"),
                    format!("mention `{mid}` belongs to entity `{}`", m.entity_id),
                ));
            }
            if claimed.insert(m.id.as_str(), i).is_some() {
                return Err(err(format!("entities[{i}].mention_ids[{j}]"), format!("mention `{mid}` listed twice")));
            }
        }
        members.sort_by(|a, b| {
            mention_by_id[a.as_str()]
                .occurrence_key()
                .cmp(&mention_by_id[b.as_str()].occurrence_key())
        });
        if let Some(parts) = &e.visits {
            let member_set: BTreeSet<&String> = e.mention_ids.iter().collect();
            let mut used = BTreeSet::new();
            if parts.is_empty() {
                return Err(err(at("visits"), "visit partition list is empty".into()));
            }
            for (k, part) in parts.iter().enumerate() {
                if part.is_empty() {
                    return Err(err(format!("entities[{i}].visits[{k}]"), "empty visit partition".into()));
                }
                for mid in part {
                    if !member_set.contains(mid) {
                        return Err(err(
                            format!("entities[{i}].visits[{k}]"),
                            format!("mention `{mid}` is not a member of the entity"),
                        ));
                    }
                    if !used.insert(mid) {
                        return Err(err(
                            format!("entities[{i}].visits[{k}]"),
                            format!("mention `{mid}` appears in more than one visit"),
                        ));
                    }
                }
            }
        }
        entities.push(Entity {
            id: e.id,
            mention_ids: members,
            label: e.label,
            unknown_time: e.unknown_time,
            visits: e.visits,
        });
    }
    for (i, m) in mentions.iter().enumerate() {
        if !claimed.contains_key(m.id.as_str()) {
            return Err(err(
                format!("mentions[{i}].entity_id"),
                format!("entity `{}` does not list mention `{}`", m.entity_id, m.id),
            ));
        }
    }

    let graph = match raw.graph {
        None => None,
        Some(g) => {
            let node = |list: &str, i: usize, j: usize, s: &str| -> Result<VisitNode, CorpusError> {
                s.parse::<VisitNode>()
                    .map_err(|e| err(format!("graph.{list}[{i}][{j}]"), e.to_string()))
            };
            let mut edges = GraphEdges::default();
            for (i, [p, c]) in g.inclusion.iter().enumerate() {
                let parent = if p == ROOT { Parent::Root } else { Parent::Node(node("inclusion", i, 0, p)?) };
                edges.inclusion.push((parent, node("inclusion", i, 1, c)?));
            }
            for (i, [a, b]) in g.transition.iter().enumerate() {
                edges.transition.push((node("transition", i, 0, a)?, node("transition", i, 1, b)?));
            }
            for (i, [a, b]) in g.overlap.iter().enumerate() {
                edges.overlap.push((node("overlap", i, 0, a)?, node("overlap", i, 1, b)?));
            }
            Some(edges)
        }
    };

    Ok(Document {
        id: raw.id,
        sentences,
        mentions,
        entities,
        graph,
    })
}

fn to_raw(doc: &Document) -> RawDocument {
    let pair = |a: &dyn ToString, b: &dyn ToString| [a.to_string(), b.to_string()];
    RawDocument {
        entities: doc
            .entities
            .iter()
            .map(|e| RawEntity {
                id: e.id.clone(),
                label: e.label,
                mention_ids: e.mention_ids.clone(),
                unknown_time: e.unknown_time,
                visits: e.visits.clone(),
            })
            .collect(),
        graph: doc.graph.as_ref().map(|g| RawGraph {
            inclusion: g.inclusion.iter().map(|(p, c)| pair(p, c)).collect(),
            overlap: g.overlap.iter().map(|(a, b)| pair(a, b)).collect(),
            transition: g.transition.iter().map(|(a, b)| pair(a, b)).collect(),
        }),
        id: doc.id.clone(),
        mentions: doc
            .mentions
            .iter()
            .map(|m| RawMention {
                end: m.end,
                entity_id: m.entity_id.clone(),
                id: m.id.clone(),
                is_proper_noun: m.is_proper_noun,
                label: m.label,
                sentence_id: doc.sentences[m.sentence_index].id.clone(),
                start: m.start,
                surface: m.surface.clone(),
            })
            .collect(),
        sentences: doc
            .sentences
            .iter()
            .map(|s| RawSentence {
                id: s.id.clone(),
                text: s.text.clone(),
            })
            .collect(),
    }
}

/// Train/dev/test proportions, written `7:1:2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRatio(pub [u32; 3]);

impl Default for SplitRatio {
    fn default() -> Self {
        SplitRatio([7, 1, 2])
    }
}

impl FromStr for SplitRatio {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| CorpusError::BadRatio(s.to_string()))?;
        match parts.as_slice() {
            [a, b, c] if *a > 0 && *b > 0 && *c > 0 => Ok(SplitRatio([*a, *b, *c])),
            _ => Err(CorpusError::BadRatio(s.to_string())),
        }
    }
}

impl fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Largest-remainder allocation of `n` items to the ratio parts. Remainder
/// ties go to the earlier part.
pub fn split_sizes(n: usize, ratio: SplitRatio) -> [usize; 3] {
    let total: u64 = ratio.0.iter().map(|&r| r as u64).sum();
    let mut sizes = [0usize; 3];
    let mut rema = [0u64; 3];
    for i in 0..3 {
        let q = n as u64 * ratio.0[i] as u64;
        sizes[i] = (q / total) as usize;
        rema[i] = q % total;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rema[b].cmp(&rema[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Seeded deterministic split. Membership depends only on the set of ids, the
/// ratio, and the seed; each part is returned sorted.
pub fn split_corpus<S: AsRef<str>>(ids: &[S], ratio: SplitRatio, seed: u64) -> Result<CorpusSplit, CorpusError> {
    if ratio.0.contains(&0) {
        return Err(CorpusError::BadRatio(ratio.to_string()));
    }
    if ids.len() < 3 {
        return Err(CorpusError::TooFewDocuments { parts: 3, got: ids.len() });
    }
    let mut sorted: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(CorpusError::DuplicateDocument(w[0].clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let [a, b, _] = split_sizes(sorted.len(), ratio);
    let mut train = sorted[..a].to_vec();
    let mut dev = sorted[a..a + b].to_vec();
    let mut test = sorted[a + b..].to_vec();
    train.sort();
    dev.sort();
    test.sort();
    Ok(CorpusSplit { train, dev, test })
}

/// Per-label counts, plus items carrying no label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts<L: Ord> {
    pub counts: BTreeMap<L, usize>,
    pub unlabeled: usize,
}

impl<L: Label> Default for LabelCounts<L> {
    fn default() -> Self {
        Self {
            counts: L::ALL.iter().map(|l| (*l, 0)).collect(),
            unlabeled: 0,
        }
    }
}

impl<L: Label> LabelCounts<L> {
    pub fn record(&mut self, label: Option<L>) {
        match label {
            Some(l) => *self.counts.entry(l).or_default() += 1,
            None => self.unlabeled += 1,
        }
    }

    pub fn get(&self, label: L) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum::<usize>() + self.unlabeled
    }
}

impl<L: Label> AddAssign<&LabelCounts<L>> for LabelCounts<L> {
    fn add_assign(&mut self, rhs: &LabelCounts<L>) {
        for (l, c) in &rhs.counts {
            *self.counts.entry(*l).or_default() += c;
        }
        self.unlabeled += rhs.unlabeled;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sentences: usize,
    pub mentions: usize,
    pub entities: usize,
    /// Inclusion edges whose parent is an entity (not `ROOT`).
    pub inclusion: usize,
    pub transition: usize,
    pub overlap: usize,
    pub unknown_time: usize,
    pub multi_visit: usize,
    pub mention_labels: LabelCounts<MentionLabel>,
    pub entity_labels: LabelCounts<EntityLabel>,
}

impl CorpusStats {
    /// Inclusion plus transition relations.
    pub fn relations(&self) -> usize {
        self.inclusion + self.transition
    }
}

impl AddAssign<&CorpusStats> for CorpusStats {
    fn add_assign(&mut self, rhs: &CorpusStats) {
        self.documents += rhs.documents;
        self.sentences += rhs.sentences;
        self.mentions += rhs.mentions;
        self.entities += rhs.entities;
        self.inclusion += rhs.inclusion;
        self.transition += rhs.transition;
        self.overlap += rhs.overlap;
        self.unknown_time += rhs.unknown_time;
        self.multi_visit += rhs.multi_visit;
        self.mention_labels += &rhs.mention_labels;
        self.entity_labels += &rhs.entity_labels;
    }
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(mut self, rhs: CorpusStats) -> CorpusStats {
        self += &rhs;
        self
    }
}

pub fn document_stats(doc: &Document) -> CorpusStats {
    let mut s = CorpusStats {
        documents: 1,
        sentences: doc.sentences.len(),
        mentions: doc.mentions.len(),
        entities: doc.entities.len(),
        ..Default::default()
    };
    for m in &doc.mentions {
        s.mention_labels.record(m.label);
    }
    for e in &doc.entities {
        s.entity_labels.record(e.label);
        s.unknown_time += e.unknown_time as usize;
        s.multi_visit += e.is_multi_visit() as usize;
    }
    if let Some(g) = &doc.graph {
        let inclusion: BTreeSet<_> = g.inclusion.iter().filter(|(p, _)| *p != Parent::Root).collect();
        let transition: BTreeSet<_> = g.transition.iter().collect();
        let overlap: BTreeSet<_> = g
            .overlap
            .iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        s.inclusion = inclusion.len();
        s.transition = transition.len();
        s.overlap = overlap.len();
    }
    s
}

pub fn corpus_stats(documents: &[Document]) -> CorpusStats {
    documents.iter().fold(CorpusStats::default(), |mut acc, d| {
        acc += &document_stats(d);
        acc
    })
}
