use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::document::{Document, Mention};
use crate::graph::VisitNode;
use crate::score::ScoreError;
use crate::vop::{node_representative, PairwiseScorer, RelationKind, RepresentativeTask, Target};

/// Administrative level by name suffix. Larger is coarser; names matching no
/// suffix are at level 0, the finest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceLevelLexicon {
    pub suffixes: BTreeMap<String, u8>,
}

impl Default for PlaceLevelLexicon {
    fn default() -> Self {
        let entries: &[(&str, u8)] = &[
            ("prefecture", 3),
            ("県", 3),
            ("都", 3),
            ("府", 3),
            ("city", 2),
            ("市", 2),
            ("town", 1),
            ("district", 1),
            ("ward", 1),
            ("village", 1),
            ("町", 1),
            ("区", 1),
            ("村", 1),
        ];
        Self { suffixes: entries.iter().map(|(s, l)| (s.to_string(), *l)).collect() }
    }
}

impl PlaceLevelLexicon {
    /// Level of the longest matching suffix, compared case-insensitively.
    pub fn level(&self, surface: &str) -> u8 {
        let lower = surface.trim().to_lowercase();
        self.suffixes
            .iter()
            .filter(|(s, _)| lower.ends_with(&s.to_lowercase()))
            .max_by_key(|(s, _)| s.chars().count())
            .map_or(0, |(_, l)| *l)
    }
}

/// Parent scorer from place levels: a strictly coarser candidate scores
/// `1 / level gap`, `ROOT` scores 0, anything else -1. So the closest
/// coarser level wins and `ROOT` is chosen only when nothing is coarser.
#[derive(Debug, Clone, Default)]
pub struct HeuristicParentScorer {
    pub lexicon: PlaceLevelLexicon,
}

impl HeuristicParentScorer {
    pub fn new(lexicon: PlaceLevelLexicon) -> Self {
        Self { lexicon }
    }

    fn node_level(&self, document: &Document, node: &VisitNode) -> Result<u8, ScoreError> {
        let m = node_representative(document, node, RepresentativeTask::Irp)
            .map_err(|e| ScoreError::OutsideGold(e.to_string()))?;
        Ok(self.lexicon.level(&m.surface))
    }
}

impl PairwiseScorer for HeuristicParentScorer {
    fn score(
        &self,
        document: &Document,
        query: &VisitNode,
        candidate: Target<'_>,
        kind: RelationKind,
    ) -> Result<f64, ScoreError> {
        if kind != RelationKind::ParentOf {
            return Err(ScoreError::Unsupported(format!("{kind} scoring by place level")));
        }
        let c = match candidate {
            Target::Root => return Ok(0.0),
            Target::Eos => return Err(ScoreError::Unsupported("EOS as a parent".into())),
            Target::Node(c) => c,
        };
        let lq = self.node_level(document, query)?;
        let lc = self.node_level(document, c)?;
        Ok(if lc > lq { 1.0 / f64::from(lc - lq) } else { -1.0 })
    }
}

/// Successor scorer from text proximity of visit-status representatives: a
/// candidate mentioned `d` mentions later scores `1 / d`, an earlier one
/// `-1 / d`, and `EOS` 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProximitySuccessorScorer;

impl PairwiseScorer for ProximitySuccessorScorer {
    fn score(
        &self,
        document: &Document,
        query: &VisitNode,
        candidate: Target<'_>,
        kind: RelationKind,
    ) -> Result<f64, ScoreError> {
        if kind != RelationKind::SubsequentTo {
            return Err(ScoreError::Unsupported(format!("{kind} scoring by proximity")));
        }
        let c = match candidate {
            Target::Eos => return Ok(0.0),
            Target::Root => return Err(ScoreError::Unsupported("ROOT as a successor".into())),
            Target::Node(c) => c,
        };
        let rank = |n: &VisitNode| -> Result<usize, ScoreError> {
            let m = node_representative(document, n, RepresentativeTask::Trp)
                .map_err(|e| ScoreError::OutsideGold(e.to_string()))?;
            Ok(document
                .mentions
                .iter()
                .filter(|o: &&Mention| o.occurrence_key() < m.occurrence_key())
                .count())
        };
        let (a, b) = (rank(query)?, rank(c)?);
        Ok(if b > a { 1.0 / (b - a) as f64 } else { -1.0 / (a - b).max(1) as f64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Entity;

    fn doc(names: &[&str]) -> Document {
        Document {
            id: "d".into(),
            sentences: vec![],
            mentions: names
                .iter()
                .enumerate()
                .map(|(i, s)| Mention {
                    id: format!("m{i}"),
                    entity_id: format!("e{i}"),
                    sentence_index: i,
                    start: 0,
                    end: s.chars().count(),
                    surface: s.to_string(),
                    is_proper_noun: true,
                    label: None,
                })
                .collect(),
            entities: (0..names.len())
                .map(|i| Entity {
                    id: format!("e{i}"),
                    mention_ids: vec![format!("m{i}")],
                    label: None,
                    unknown_time: false,
                    visits: None,
                })
                .collect(),
            graph: None,
        }
    }

    fn n(i: usize) -> VisitNode {
        VisitNode::single(format!("e{i}"))
    }

    #[test]
    fn lexicon_levels() {
        let lex = PlaceLevelLexicon::default();
        assert_eq!(lex.level("Nara Prefecture"), 3);
        assert_eq!(lex.level("Nara City"), 2);
        assert_eq!(lex.level("奈良市"), 2);
        assert_eq!(lex.level("Todaiji Temple"), 0);
        assert_eq!(lex.level("somewhere"), 0);
    }

    #[test]
    fn coarser_candidates_score_positive() {
        let d = doc(&["Kyoto Station", "Kyoto City", "Nara City", "Nara Prefecture"]);
        let s = HeuristicParentScorer::default();
        let score = |q, c: Target<'_>| s.score(&d, &n(q), c, RelationKind::ParentOf).unwrap();
        assert!(score(0, Target::Node(&n(1))) > 0.0);
        assert!(score(1, Target::Node(&n(2))) <= 0.0);
        assert!(score(2, Target::Node(&n(1))) <= 0.0);
        assert_eq!(score(1, Target::Root), 0.0);
        assert!(score(1, Target::Node(&n(3))) > score(1, Target::Root));
        assert!(s.score(&d, &n(0), Target::Eos, RelationKind::SubsequentTo).is_err());
    }

    #[test]
    fn heuristic_picks_prefecture_for_city() {
        use crate::vop::predict_parents;
        let d = doc(&["Nara City", "Kyoto City", "Nara Prefecture"]);
        let p = predict_parents(&HeuristicParentScorer::default(), &d, &[n(0), n(1), n(2)]).unwrap();
        assert_eq!(p[&n(0)], crate::graph::Parent::Node(n(2)));
        assert_eq!(p[&n(2)], crate::graph::Parent::Root);
    }

    #[test]
    fn proximity_prefers_next_mention() {
        let d = doc(&["A", "B", "C"]);
        let s = ProximitySuccessorScorer;
        let score = |q, c: Target<'_>| s.score(&d, &n(q), c, RelationKind::SubsequentTo).unwrap();
        assert!(score(0, Target::Node(&n(1))) > score(0, Target::Node(&n(2))));
        assert!(score(2, Target::Eos) > score(2, Target::Node(&n(0))));
    }
}
