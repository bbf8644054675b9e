//! Annotated travelogue documents.

use std::collections::BTreeMap;

use crate::graph::{
    split_multi_visit, ChainMode, GraphError, GraphInput, Parent, Violation, VisitNode, VisitingOrderGraph,
};
use crate::label::{EntityLabel, MentionLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub text: String,
}

/// A location mention. Offsets are code-point offsets into its sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub id: String,
    pub entity_id: String,
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub is_proper_noun: bool,
    pub label: Option<MentionLabel>,
}

impl Mention {
    /// Strict total occurrence order within a document.
    pub fn occurrence_key(&self) -> (usize, usize, usize, &str) {
        (self.sentence_index, self.start, self.end, &self.id)
    }
}

/// A geo-entity: a coreference cluster of mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    /// Member mentions in occurrence order.
    pub mention_ids: Vec<String>,
    pub label: Option<EntityLabel>,
    pub unknown_time: bool,
    /// One mention-id partition per visit episode, for multiply visited
    /// entities.
    pub visits: Option<Vec<Vec<String>>>,
}

impl Entity {
    pub fn visit_count(&self) -> usize {
        self.visits.as_ref().map_or(1, Vec::len)
    }

    pub fn is_multi_visit(&self) -> bool {
        self.visit_count() >= 2
    }

    /// Graph nodes for this entity, one per visit episode.
    pub fn visit_nodes(&self) -> Result<Vec<VisitNode>, GraphError> {
        match &self.visits {
            Some(parts) => split_multi_visit(&self.id, &self.mention_ids, parts),
            None => Ok(vec![VisitNode::single(self.id.as_str())]),
        }
    }

    /// Whether the entity becomes a graph node: visited (or unlabeled) and
    /// with a known visit time.
    pub fn is_graph_candidate(&self) -> bool {
        self.label != Some(EntityLabel::Other) && !self.unknown_time
    }
}

/// Raw relation edge lists attached to a document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphEdges {
    pub inclusion: Vec<(Parent, VisitNode)>,
    pub transition: Vec<(VisitNode, VisitNode)>,
    pub overlap: Vec<(VisitNode, VisitNode)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<Mention>,
    pub entities: Vec<Entity>,
    pub graph: Option<GraphEdges>,
}

impl Document {
    pub fn mention(&self, id: &str) -> Option<&Mention> {
        self.mentions.iter().find(|m| m.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Mentions of an entity, in occurrence order.
    pub fn entity_mentions(&self, entity: &Entity) -> Vec<&Mention> {
        let mut out: Vec<&Mention> = entity.mention_ids.iter().filter_map(|id| self.mention(id)).collect();
        out.sort_by(|a, b| a.occurrence_key().cmp(&b.occurrence_key()));
        out
    }

    /// Mentions belonging to one visit node, in occurrence order. For a
    /// sub-entity these are the mentions of its visit partition.
    pub fn node_mentions(&self, node: &VisitNode) -> Vec<&Mention> {
        let Some(entity) = self.entity(&node.entity_id) else {
            return Vec::new();
        };
        let ids: Vec<&String> = match &entity.visits {
            Some(parts) => parts.get(node.visit_index).map(|p| p.iter().collect()).unwrap_or_default(),
            None if node.visit_index == 0 => entity.mention_ids.iter().collect(),
            None => Vec::new(),
        };
        let mut out: Vec<&Mention> = ids.into_iter().filter_map(|id| self.mention(id)).collect();
        out.sort_by(|a, b| a.occurrence_key().cmp(&b.occurrence_key()));
        out
    }

    /// First mention of a node in the document.
    pub fn earliest_mention(&self, node: &VisitNode) -> Option<&Mention> {
        self.node_mentions(node).into_iter().next()
    }

    /// Graph nodes implied by entity labels: every visited entity with a
    /// known visit time, split into its visit episodes. Sorted.
    pub fn graph_nodes(&self) -> Vec<VisitNode> {
        let mut nodes: Vec<VisitNode> = self
            .entities
            .iter()
            .filter(|e| e.is_graph_candidate())
            .flat_map(|e| {
                (0..e.visit_count()).map(move |k| VisitNode::new(e.id.as_str(), k))
            })
            .collect();
        nodes.sort();
        nodes
    }

    /// The graph input implied by this document's edges and entities, or
    /// `None` when the document carries no graph.
    pub fn graph_input(&self) -> Option<GraphInput> {
        let edges = self.graph.as_ref()?;
        Some(GraphInput {
            nodes: self.graph_nodes(),
            visits: self
                .entities
                .iter()
                .filter_map(|e| e.visits.as_ref().map(|v| (e.id.clone(), v.clone())))
                .collect(),
            inclusion: edges.inclusion.clone(),
            transition: edges.transition.clone(),
            overlap: edges.overlap.clone(),
            excluded: self
                .entities
                .iter()
                .filter(|e| e.unknown_time)
                .map(|e| e.id.clone())
                .collect(),
        })
    }

    /// Builds the document's graph, `Ok(None)` when it has none.
    pub fn build_graph(&self, mode: ChainMode) -> Result<Option<VisitingOrderGraph>, Vec<Violation>> {
        self.graph_input().map(|g| g.build(mode)).transpose()
    }

    /// Gold mention labels keyed by mention id; unlabeled mentions omitted.
    pub fn mention_labels(&self) -> BTreeMap<String, MentionLabel> {
        self.mentions
            .iter()
            .filter_map(|m| m.label.map(|l| (m.id.clone(), l)))
            .collect()
    }

    /// Gold entity labels keyed by entity id; unlabeled entities omitted.
    pub fn entity_labels(&self) -> BTreeMap<String, EntityLabel> {
        self.entities
            .iter()
            .filter_map(|e| e.label.map(|l| (e.id.clone(), l)))
            .collect()
    }

    /// Copy of the document with the given labels written in. Items missing
    /// from the maps become unlabeled.
    pub fn with_labels(
        &self,
        mention_labels: &BTreeMap<String, MentionLabel>,
        entity_labels: &BTreeMap<String, EntityLabel>,
    ) -> Document {
        let mut doc = self.clone();
        for m in &mut doc.mentions {
            m.label = mention_labels.get(&m.id).copied();
        }
        for e in &mut doc.entities {
            e.label = entity_labels.get(&e.id).copied();
        }
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mention(id: &str, entity: &str, sentence: usize, start: usize) -> Mention {
        Mention {
            id: id.into(),
            entity_id: entity.into(),
            sentence_index: sentence,
            start,
            end: start + 1,
            surface: "x".into(),
            is_proper_noun: true,
            label: Some(MentionLabel::Visit),
        }
    }

    fn doc() -> Document {
        Document {
            id: "d".into(),
            sentences: vec![],
            mentions: vec![
                mention("m3", "e1", 2, 0),
                mention("m1", "e1", 0, 4),
                mention("m2", "e1", 1, 0),
                mention("m4", "e2", 0, 0),
                mention("m5", "e3", 0, 2),
            ],
            entities: vec![
                Entity {
                    id: "e1".into(),
                    mention_ids: vec!["m1".into(), "m2".into(), "m3".into()],
                    label: Some(EntityLabel::Visit),
                    unknown_time: false,
                    visits: Some(vec![vec!["m1".into()], vec!["m3".into(), "m2".into()]]),
                },
                Entity {
                    id: "e2".into(),
                    mention_ids: vec!["m4".into()],
                    label: Some(EntityLabel::Other),
                    unknown_time: false,
                    visits: None,
                },
                Entity {
                    id: "e3".into(),
                    mention_ids: vec!["m5".into()],
                    label: Some(EntityLabel::Visit),
                    unknown_time: true,
                    visits: None,
                },
            ],
            graph: Some(GraphEdges::default()),
        }
    }

    #[test]
    fn graph_nodes_skip_other_and_unknown_time() {
        let d = doc();
        assert_eq!(d.graph_nodes(), vec![VisitNode::new("e1", 0), VisitNode::new("e1", 1)]);
        let input = d.graph_input().unwrap();
        assert!(input.excluded.contains("e3"));
        assert!(d.build_graph(ChainMode::Lenient).unwrap().is_some());
    }

    #[test]
    fn node_mentions_use_visit_partitions() {
        let d = doc();
        let ids: Vec<&str> = d.node_mentions(&VisitNode::new("e1", 1)).iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, vec!["m2", "m3"]);
        assert_eq!(d.earliest_mention(&VisitNode::new("e1", 0)).unwrap().id, "m1");
        assert!(d.node_mentions(&VisitNode::new("e1", 5)).is_empty());
    }

    #[test]
    fn occurrence_order_is_sentence_then_offset() {
        let d = doc();
        let e1 = d.entity("e1").unwrap();
        let ids: Vec<&str> = d.entity_mentions(e1).iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, vec!["m1", "m2", "m3"]);
    }
}
