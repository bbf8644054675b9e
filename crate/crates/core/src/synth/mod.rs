//! Seeded synthetic corpora with gold visiting order graphs.
//!
//! Each document is generated from its own RNG stream, derived from the
//! corpus seed and the document index, so a document does not depend on how
//! many documents precede it.
//!
//! The gold structure comes first: an inclusion forest over the visited
//! nodes and one random chain per sibling group. First mentions then follow
//! the depth-first visit order, except where a reverse pair swaps two of
//! them. Every other mention is placed after its node's first mention.

mod heuristic;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use heuristic::{HeuristicParentScorer, PlaceLevelLexicon, ProximitySuccessorScorer};
pub use oracle::{OracleError, OracleScorer, OracleScorerConfig};

use crate::corpus::CorpusStats;
use crate::document::{Document, Entity, GraphEdges, Mention, Sentence};
use crate::graph::{Parent, VisitNode};
use crate::label::{EntityLabel, MentionLabel};
use crate::score::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub documents: usize,
    /// Inclusive range of entities per document, before overlap partners.
    pub entities_per_document: (usize, usize),
    pub max_depth: usize,
    /// Largest sibling group the generator builds.
    pub max_group_size: usize,
    /// Probability that a node hangs directly under `ROOT`.
    pub root_attach_rate: f64,
    /// Relative weights of 1, 2, 3, ... mentions per entity.
    pub mentions_per_entity: Vec<f64>,
    pub visit_rate: f64,
    /// Probability that a node's first mention is `PlanToVisit` rather than
    /// `Visit`.
    pub plan_rate: f64,
    /// Labels of later mentions of visited entities.
    pub visited_mention_labels: BTreeMap<MentionLabel, f64>,
    /// Labels of mentions of unvisited entities. `Visit` and `PlanToVisit`
    /// must have weight zero.
    pub other_mention_labels: BTreeMap<MentionLabel, f64>,
    /// Probability that a later mention is a proper noun.
    pub proper_noun_rate: f64,
    /// Probability, per gold transition pair, of swapping the two first
    /// mentions.
    pub reverse_rate: f64,
    pub multi_visit_rate: f64,
    pub unknown_time_rate: f64,
    /// Probability, per visited entity, of an overlapping partner entity.
    pub overlap_rate: f64,
    /// Probability that a mention starts a new sentence.
    pub sentence_break_rate: f64,
    /// Probability of a mention-free sentence after each sentence.
    pub filler_rate: f64,
    /// Probability that a place is named one level finer than its depth
    /// suggests, or more.
    pub level_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Sized like a 100-document travelogue corpus of about 3,350 entities
    /// and 3,370 inclusion plus transition relations.
    fn default() -> Self {
        use MentionLabel::*;
        Self {
            documents: 100,
            entities_per_document: (24, 42),
            max_depth: 5,
            max_group_size: 40,
            root_attach_rate: 0.33,
            mentions_per_entity: vec![0.62, 0.22, 0.09, 0.04, 0.03],
            visit_rate: 0.826,
            plan_rate: 0.12,
            visited_mention_labels: BTreeMap::from([
                (Visit, 0.62),
                (PlanToVisit, 0.1),
                (See, 0.06),
                (VisitPast, 0.004),
                (VisitFuture, 0.003),
                (UnkOrNotVisit, 0.213),
            ]),
            other_mention_labels: BTreeMap::from([
                (See, 0.25),
                (VisitPast, 0.02),
                (VisitFuture, 0.02),
                (UnkOrNotVisit, 0.71),
            ]),
            proper_noun_rate: 0.5,
            reverse_rate: 0.15,
            multi_visit_rate: 0.052,
            unknown_time_rate: 0.019,
            overlap_rate: 0.018,
            sentence_break_rate: 0.85,
            filler_rate: 0.37,
            level_noise: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("infeasible config: {0}")]
    Infeasible(String),
}

fn check_rate(name: &str, p: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} = {p} is not in [0, 1]")))
    }
}

fn check_weights<'a>(name: &str, weights: impl IntoIterator<Item = &'a f64>) -> Result<(), SynthError> {
    let mut total = 0.0;
    for w in weights {
        if !w.is_finite() || *w < 0.0 {
            return Err(SynthError::InvalidConfig(format!("{name} has weight {w}")));
        }
        total += w;
    }
    if total > 0.0 {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} has no positive weight")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, p) in [
            ("root_attach_rate", self.root_attach_rate),
            ("visit_rate", self.visit_rate),
            ("plan_rate", self.plan_rate),
            ("proper_noun_rate", self.proper_noun_rate),
            ("reverse_rate", self.reverse_rate),
            ("multi_visit_rate", self.multi_visit_rate),
            ("unknown_time_rate", self.unknown_time_rate),
            ("overlap_rate", self.overlap_rate),
            ("sentence_break_rate", self.sentence_break_rate),
            ("filler_rate", self.filler_rate),
            ("level_noise", self.level_noise),
        ] {
            check_rate(name, p)?;
        }
        check_weights("mentions_per_entity", &self.mentions_per_entity)?;
        check_weights("visited_mention_labels", self.visited_mention_labels.values())?;
        check_weights("other_mention_labels", self.other_mention_labels.values())?;
        for l in [MentionLabel::Visit, MentionLabel::PlanToVisit] {
            if self.other_mention_labels.get(&l).copied().unwrap_or(0.0) > 0.0 {
                return Err(SynthError::InvalidConfig(format!(
                    "other_mention_labels gives weight to {l}, which would make the entity visited"
                )));
            }
        }
        let (lo, hi) = self.entities_per_document;
        if lo == 0 || lo > hi {
            return Err(SynthError::InvalidConfig(format!("entities_per_document range ({lo}, {hi}) is empty or zero")));
        }
        if self.max_depth == 0 {
            return Err(SynthError::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.max_group_size == 0 {
            return Err(SynthError::InvalidConfig("max_group_size must be at least 1".into()));
        }
        let capacity = (1..=self.max_depth as u32)
            .map(|d| self.max_group_size.saturating_pow(d))
            .fold(0usize, usize::saturating_add);
        if capacity < hi {
            return Err(SynthError::Infeasible(format!(
                "{hi} entities do not fit in groups of at most {} nested {} deep",
                self.max_group_size, self.max_depth
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCorpus {
    pub documents: Vec<Document>,
    /// Statistics tallied while generating, independently of the documents.
    pub stats: CorpusStats,
}

pub fn generate_corpus(config: &SynthConfig) -> Result<GeneratedCorpus, SynthError> {
    config.validate()?;
    let mut documents = Vec::with_capacity(config.documents);
    let mut stats = CorpusStats::default();
    for i in 0..config.documents {
        let (doc, s) = generate_document(config, i)?;
        documents.push(doc);
        stats += &s;
    }
    Ok(GeneratedCorpus { documents, stats })
}

pub fn document_id(index: usize) -> String {
    format!("doc{index:04}")
}

const SYLLABLES: &[&str] = &[
    "aka", "ao", "fuji", "hana", "higashi", "kawa", "kita", "matsu", "mina", "mori", "naka", "nishi", "oka",
    "saka", "shima", "taka", "tsuru", "yama",
];
const FACILITIES: &[&str] = &["Station", "Temple", "Shrine", "Park", "Castle", "Museum", "Tower", "Bridge"];
const TOWNS: &[&str] = &["Town", "District"];
const FILLERS: &[&str] = &[
    "The weather was pleasant all day.",
    "Lunch was a bowl of noodles.",
    "It got quite crowded in the afternoon.",
    "I took plenty of photos.",
    "The autumn leaves were beautiful.",
];

fn clause(label: MentionLabel) -> &'static str {
    match label {
        MentionLabel::Visit => "we arrived at {}",
        MentionLabel::PlanToVisit => "we headed for {}",
        MentionLabel::See => "{} came into view",
        MentionLabel::VisitPast => "years ago I went to {}",
        MentionLabel::VisitFuture => "next time I want to go to {}",
        MentionLabel::UnkOrNotVisit => "the train was bound for {}",
    }
}

struct Place {
    name: String,
    suffix: &'static str,
}

fn suffix_for(level: u8, rng: &mut ChaCha8Rng) -> &'static str {
    match level {
        3 => "Prefecture",
        2 => "City",
        1 => TOWNS.choose(rng).expect("non-empty"),
        _ => FACILITIES.choose(rng).expect("non-empty"),
    }
}

fn make_place(level: u8, used: &mut BTreeSet<String>, rng: &mut ChaCha8Rng) -> Place {
    let suffix = suffix_for(level, rng);
    let mut attempt = 0;
    loop {
        let a = SYLLABLES.choose(rng).expect("non-empty");
        let b = SYLLABLES.choose(rng).expect("non-empty");
        let mut root = format!("{}{}{b}", a[..1].to_uppercase(), &a[1..]);
        if attempt >= 20 {
            root.push_str(&attempt.to_string());
        }
        let name = format!("{root} {suffix}");
        if used.insert(name.clone()) {
            return Place { name, suffix };
        }
        attempt += 1;
    }
}

struct EntityPlan {
    label: EntityLabel,
    unknown_time: bool,
    visits: usize,
    mentions: usize,
    /// Node index of each visit, for entities in the graph.
    nodes: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Slot {
    entity: usize,
    /// Visit episode the mention belongs to.
    visit: usize,
    first: bool,
}

fn weighted<T: Copy>(map: &BTreeMap<T, f64>, rng: &mut ChaCha8Rng) -> T {
    let keys: Vec<T> = map.keys().copied().collect();
    let dist = WeightedIndex::new(map.values().copied()).expect("validated weights");
    keys[dist.sample(rng)]
}

/// Generates document `index` of the corpus described by `config`, with its
/// statistics.
pub fn generate_document(config: &SynthConfig, index: usize) -> Result<(Document, CorpusStats), SynthError> {
    let doc_id = document_id(index);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["document", &index.to_string()]));
    let mention_dist = WeightedIndex::new(&config.mentions_per_entity).expect("validated weights");

    let (lo, hi) = config.entities_per_document;
    let n = rng.random_range(lo..=hi);
    let mut entities: Vec<EntityPlan> = Vec::with_capacity(n);
    // (entity, visit) per node.
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    for k in 0..n {
        let visited = rng.random_bool(config.visit_rate);
        let unknown_time = visited && rng.random_bool(config.unknown_time_rate);
        let visits = if visited && !unknown_time && rng.random_bool(config.multi_visit_rate) { 2 } else { 1 };
        let mentions = (mention_dist.sample(&mut rng) + 1).max(visits);
        let mut plan = EntityPlan {
            label: if visited { EntityLabel::Visit } else { EntityLabel::Other },
            unknown_time,
            visits,
            mentions,
            nodes: Vec::new(),
        };
        if visited && !unknown_time {
            for v in 0..visits {
                plan.nodes.push(nodes.len());
                nodes.push((k, v));
            }
        }
        entities.push(plan);
    }

    // Inclusion forest. `None` is ROOT.
    let cap = config.max_group_size;
    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut depth = vec![0usize; nodes.len()];
    let mut child_count = vec![0usize; nodes.len()];
    let mut root_count = 0;
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.shuffle(&mut rng);
    let mut placed: Vec<usize> = Vec::new();
    for &x in &order {
        let eligible: Vec<usize> = placed
            .iter()
            .copied()
            .filter(|&p| depth[p] < config.max_depth && child_count[p] < cap && nodes[p].0 != nodes[x].0)
            .collect();
        let root_ok = root_count < cap;
        if root_ok && (eligible.is_empty() || rng.random_bool(config.root_attach_rate)) {
            root_count += 1;
            depth[x] = 1;
        } else if let Some(&p) = eligible.choose(&mut rng) {
            parent[x] = Some(p);
            depth[x] = depth[p] + 1;
            child_count[p] += 1;
        } else {
            return Err(SynthError::Infeasible(format!(
                "document {doc_id}: no room for node {} of {}",
                placed.len() + 1,
                nodes.len()
            )));
        }
        placed.push(x);
    }

    // One random chain per sibling group, keyed by parent (ROOT first).
    let mut groups: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for &x in &placed {
        groups.entry(parent[x]).or_default().push(x);
    }
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
    }

    // Depth-first visit order.
    let mut sequence = Vec::with_capacity(nodes.len());
    let mut stack: Vec<usize> = groups.get(&None).map(|g| g.iter().rev().copied().collect()).unwrap_or_default();
    while let Some(x) = stack.pop() {
        sequence.push(x);
        if let Some(children) = groups.get(&Some(x)) {
            stack.extend(children.iter().rev());
        }
    }
    let mut position = vec![0usize; nodes.len()];
    for (i, &x) in sequence.iter().enumerate() {
        position[x] = i;
    }
    for chain in groups.values() {
        for w in chain.windows(2) {
            if rng.random_bool(config.reverse_rate) {
                let (a, b) = (w[0], w[1]);
                sequence.swap(position[a], position[b]);
                position.swap(a, b);
            }
        }
    }

    // Overlap partners: extra visited entities hanging edge-free under ROOT,
    // each paired with a node that carries edges.
    let mut overlaps: Vec<(usize, usize)> = Vec::new();
    let root_group_len = groups.get(&None).map_or(0, Vec::len);
    for k in 0..n {
        let Some(&rep) = entities[k].nodes.first() else { continue };
        if !rng.random_bool(config.overlap_rate) {
            continue;
        }
        let carries_edges = parent[rep].is_some() || child_count[rep] > 0 || root_group_len >= 2;
        if !carries_edges {
            continue;
        }
        let shadow_entity = entities.len();
        let shadow_node = nodes.len();
        entities.push(EntityPlan {
            label: EntityLabel::Visit,
            unknown_time: false,
            visits: 1,
            mentions: mention_dist.sample(&mut rng) + 1,
            nodes: vec![shadow_node],
        });
        nodes.push((shadow_entity, 0));
        parent.push(None);
        depth.push(1);
        child_count.push(0);
        overlaps.push((rep, shadow_node));
    }

    // Mention timeline: first mentions of graph nodes in sequence order, the
    // rest inserted at random later points.
    let mut timeline: Vec<Slot> = sequence
        .iter()
        .map(|&x| Slot { entity: nodes[x].0, visit: nodes[x].1, first: true })
        .collect();
    let first_position = |timeline: &[Slot], entity: usize, visit: usize| {
        timeline
            .iter()
            .position(|s| s.entity == entity && s.visit == visit && s.first)
            .expect("first mention placed")
    };
    for (k, plan) in entities.iter().enumerate() {
        let in_sequence = !plan.nodes.is_empty() && !overlaps.iter().any(|&(_, s)| nodes[s].0 == k);
        if !in_sequence {
            let at = rng.random_range(0..=timeline.len());
            timeline.insert(at, Slot { entity: k, visit: 0, first: true });
        }
        let mut per_visit = vec![0usize; plan.visits];
        for _ in plan.visits..plan.mentions {
            per_visit[rng.random_range(0..plan.visits)] += 1;
        }
        for (v, extra) in per_visit.into_iter().enumerate() {
            for _ in 0..extra {
                let after = first_position(&timeline, k, v);
                let at = rng.random_range(after + 1..=timeline.len());
                timeline.insert(at, Slot { entity: k, visit: v, first: false });
            }
        }
    }

    // Place names: level from depth, occasionally finer.
    let mut used = BTreeSet::new();
    let mut levels = vec![0u8; entities.len()];
    for (k, plan) in entities.iter().enumerate() {
        levels[k] = match plan.nodes.first() {
            Some(&x) => {
                let base = 3u8.saturating_sub((depth[x] - 1).min(3) as u8);
                if base > 0 && rng.random_bool(config.level_noise) {
                    rng.random_range(0..base)
                } else {
                    base
                }
            }
            None => rng.random_range(0..=3),
        };
    }
    for &(rep, shadow) in &overlaps {
        levels[nodes[shadow].0] = levels[nodes[rep].0];
    }
    let places: Vec<Place> = levels.iter().map(|&l| make_place(l, &mut used, &mut rng)).collect();

    // Labels and surfaces per slot.
    struct Planned {
        slot: Slot,
        label: MentionLabel,
        proper: bool,
        surface: String,
    }
    let planned: Vec<Planned> = timeline
        .iter()
        .map(|&slot| {
            let plan = &entities[slot.entity];
            let label = if plan.label == EntityLabel::Other {
                weighted(&config.other_mention_labels, &mut rng)
            } else if slot.first {
                if rng.random_bool(config.plan_rate) {
                    MentionLabel::PlanToVisit
                } else {
                    MentionLabel::Visit
                }
            } else {
                weighted(&config.visited_mention_labels, &mut rng)
            };
            let proper = slot.first || rng.random_bool(config.proper_noun_rate);
            let place = &places[slot.entity];
            let surface = if proper {
                place.name.clone()
            } else if rng.random_bool(0.2) {
                "there".to_string()
            } else {
                format!("the {}", place.suffix.to_lowercase())
            };
            Planned { slot, label, proper, surface }
        })
        .collect();

    // Sentences.
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut mentions: Vec<Mention> = Vec::with_capacity(planned.len());
    let mut i = 0;
    while i < planned.len() {
        let mut j = i + 1;
        while j < planned.len() && !rng.random_bool(config.sentence_break_rate) {
            j += 1;
        }
        let mut text = String::new();
        for (c, p) in planned[i..j].iter().enumerate() {
            let template = clause(p.label);
            let (before, after) = template.split_once("{}").expect("template has a slot");
            let mut prefix = if c == 0 { String::new() } else { ", and ".to_string() };
            prefix.push_str(before);
            if c == 0 {
                prefix = capitalize(&prefix);
            }
            text.push_str(&prefix);
            let start = text.chars().count();
            let surface = if c == 0 && before.is_empty() { capitalize(&p.surface) } else { p.surface.clone() };
            text.push_str(&surface);
            let end = text.chars().count();
            text.push_str(after);
            let idx = mentions.len();
            mentions.push(Mention {
                id: format!("m{idx:03}"),
                entity_id: String::new(),
                sentence_index: sentences.len(),
                start,
                end,
                surface,
                is_proper_noun: p.proper,
                label: Some(p.label),
            });
        }
        text.push('.');
        sentences.push(Sentence { id: format!("s{:03}", sentences.len()), text });
        if rng.random_bool(config.filler_rate) {
            let filler = FILLERS.choose(&mut rng).expect("non-empty");
            sentences.push(Sentence { id: format!("s{:03}", sentences.len()), text: filler.to_string() });
        }
        i = j;
    }

    let entity_id = |k: usize| format!("e{k:03}");
    for (m, p) in mentions.iter_mut().zip(&planned) {
        m.entity_id = entity_id(p.slot.entity);
    }
    let node_of = |x: usize| VisitNode::new(entity_id(nodes[x].0), nodes[x].1);

    let doc_entities: Vec<Entity> = entities
        .iter()
        .enumerate()
        .map(|(k, plan)| {
            let ids = |visit: Option<usize>| -> Vec<String> {
                mentions
                    .iter()
                    .zip(&planned)
                    .filter(|(_, p)| p.slot.entity == k && visit.is_none_or(|v| p.slot.visit == v))
                    .map(|(m, _)| m.id.clone())
                    .collect()
            };
            Entity {
                id: entity_id(k),
                mention_ids: ids(None),
                label: Some(plan.label),
                unknown_time: plan.unknown_time,
                visits: (plan.visits > 1).then(|| (0..plan.visits).map(|v| ids(Some(v))).collect()),
            }
        })
        .collect();

    let mut inclusion: Vec<(Parent, VisitNode)> = (0..nodes.len())
        .filter_map(|x| parent[x].map(|p| (Parent::Node(node_of(p)), node_of(x))))
        .collect();
    inclusion.sort();
    let mut transition: Vec<(VisitNode, VisitNode)> = groups
        .values()
        .flat_map(|g| g.windows(2).map(|w| (node_of(w[0]), node_of(w[1]))).collect::<Vec<_>>())
        .collect();
    transition.sort();
    let overlap: Vec<(VisitNode, VisitNode)> = overlaps.iter().map(|&(a, b)| (node_of(a), node_of(b))).collect();

    let mut stats = CorpusStats {
        documents: 1,
        sentences: sentences.len(),
        mentions: planned.len(),
        entities: entities.len(),
        inclusion: parent.iter().filter(|p| p.is_some()).count(),
        transition: groups.values().map(|g| g.len() - 1).sum(),
        overlap: overlaps.len(),
        unknown_time: entities.iter().filter(|e| e.unknown_time).count(),
        multi_visit: entities.iter().filter(|e| e.visits > 1).count(),
        ..Default::default()
    };
    for p in &planned {
        stats.mention_labels.record(Some(p.label));
    }
    for e in &entities {
        stats.entity_labels.record(Some(e.label));
    }

    let document = Document {
        id: doc_id,
        sentences,
        mentions,
        entities: doc_entities,
        graph: Some(GraphEdges { inclusion, transition, overlap }),
    };
    Ok((document, stats))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
