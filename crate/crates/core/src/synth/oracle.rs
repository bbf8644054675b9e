use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::document::{Document, Mention};
use crate::graph::{ChainMode, Parent, Successor, Violation, VisitNode, VisitingOrderGraph};
use crate::label::{Label, MentionLabel};
use crate::score::{derive_seed, ScoreError};
use crate::vop::{PairwiseScorer, RelationKind, Target};
use crate::vsp::{LabelWeights, MentionScorer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleScorerConfig {
    /// Standard deviation of the Gaussian noise added to every score.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for OracleScorerConfig {
    fn default() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("noise level {0} is not a finite non-negative number")]
    BadSigma(f64),
    #[error("document `{0}` appears twice")]
    DuplicateDocument(String),
    #[error("gold graph of document `{document}` is invalid: {violations:?}")]
    Graph { document: String, violations: Vec<Violation> },
}

struct Gold {
    mentions: BTreeMap<String, MentionLabel>,
    graph: Option<VisitingOrderGraph>,
}

/// Scores gold targets 1 and everything else 0, plus seeded Gaussian noise.
/// Mention weights are `exp` of those scores.
///
/// The noise for a query is a function of the seed and the query alone, so
/// repeated queries agree and results do not depend on query order.
pub struct OracleScorer {
    gold: BTreeMap<String, Gold>,
    noise: Option<Normal<f64>>,
    seed: u64,
}

impl OracleScorer {
    pub fn new(documents: &[Document], config: OracleScorerConfig) -> Result<Self, OracleError> {
        if !config.sigma.is_finite() || config.sigma < 0.0 {
            return Err(OracleError::BadSigma(config.sigma));
        }
        let noise = (config.sigma > 0.0).then(|| Normal::new(0.0, config.sigma).expect("validated sigma"));
        let mut gold = BTreeMap::new();
        for d in documents {
            let graph = d
                .build_graph(ChainMode::Lenient)
                .map_err(|violations| OracleError::Graph { document: d.id.clone(), violations })?;
            let entry = Gold { mentions: d.mention_labels(), graph };
            if gold.insert(d.id.clone(), entry).is_some() {
                return Err(OracleError::DuplicateDocument(d.id.clone()));
            }
        }
        Ok(Self { gold, noise, seed: config.seed })
    }

    fn jitter(&self, key: &[&str]) -> f64 {
        match &self.noise {
            None => 0.0,
            Some(dist) => dist.sample(&mut ChaCha8Rng::seed_from_u64(derive_seed(self.seed, key))),
        }
    }

    fn document(&self, document: &Document) -> Result<&Gold, ScoreError> {
        self.gold
            .get(&document.id)
            .ok_or_else(|| ScoreError::OutsideGold(format!("document `{}`", document.id)))
    }
}

impl MentionScorer for OracleScorer {
    fn score(&self, document: &Document, mention: &Mention) -> Result<LabelWeights, ScoreError> {
        let gold = self.document(document)?;
        let label = gold
            .mentions
            .get(&mention.id)
            .ok_or_else(|| ScoreError::OutsideGold(format!("mention `{}` of `{}`", mention.id, document.id)))?;
        Ok(MentionLabel::ALL
            .iter()
            .map(|&l| {
                let base = if l == *label { 1.0 } else { 0.0 };
                let s = base + self.jitter(&["vsp", &document.id, &mention.id, l.as_str()]);
                (l, s.exp())
            })
            .collect())
    }
}

impl PairwiseScorer for OracleScorer {
    fn score(
        &self,
        document: &Document,
        query: &VisitNode,
        candidate: Target<'_>,
        kind: RelationKind,
    ) -> Result<f64, ScoreError> {
        let gold = self.document(document)?;
        let graph = gold
            .graph
            .as_ref()
            .ok_or_else(|| ScoreError::OutsideGold(format!("document `{}` has no graph", document.id)))?;
        let outside = |n: &VisitNode| ScoreError::OutsideGold(format!("node `{n}` of `{}`", document.id));
        if !graph.contains(query) {
            return Err(outside(query));
        }
        if let Target::Node(c) = candidate {
            if !graph.contains(c) {
                return Err(outside(c));
            }
        }
        let hit = match kind {
            RelationKind::ParentOf => {
                let p = graph.parent(query).expect("gold node");
                Target::from(p) == candidate
            }
            RelationKind::SubsequentTo => match graph.successor(query) {
                Some(s) => candidate == Target::Node(s),
                None => candidate == Target::Eos,
            },
        };
        let base = if hit { 1.0 } else { 0.0 };
        let kind_s = kind.to_string();
        let (q, c) = (query.to_string(), candidate.to_string());
        Ok(base + self.jitter(&["vop", &document.id, &kind_s, &q, &c]))
    }
}

impl OracleScorer {
    pub fn gold_parents(&self, document: &str) -> Option<BTreeMap<VisitNode, Parent>> {
        self.gold.get(document)?.graph.as_ref().map(|g| g.parent_assignment())
    }

    pub fn gold_successors(&self, document: &str) -> Option<BTreeMap<VisitNode, Successor>> {
        self.gold.get(document)?.graph.as_ref().map(|g| g.successor_assignment())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, SynthConfig};

    fn corpus() -> Vec<Document> {
        generate_corpus(&SynthConfig { documents: 3, seed: 4, ..Default::default() }).unwrap().documents
    }

    #[test]
    fn noise_free_scores_are_indicators() {
        let docs = corpus();
        let o = OracleScorer::new(&docs, OracleScorerConfig::default()).unwrap();
        let d = &docs[0];
        let g = d.build_graph(ChainMode::Lenient).unwrap().unwrap();
        for n in g.nodes() {
            let p = g.parent(n).unwrap();
            assert_eq!(PairwiseScorer::score(&o, d, n, p.into(), RelationKind::ParentOf).unwrap(), 1.0);
            assert_eq!(PairwiseScorer::score(&o, d, n, Target::Node(n), RelationKind::ParentOf).unwrap(), 0.0);
        }
        let m = &d.mentions[0];
        let w = MentionScorer::score(&o, d, m).unwrap();
        assert_eq!(w[&m.label.unwrap()], 1f64.exp());
    }

    #[test]
    fn queries_outside_gold_fail() {
        let docs = corpus();
        let o = OracleScorer::new(&docs[..1], OracleScorerConfig::default()).unwrap();
        let q = VisitNode::single("nowhere");
        assert!(PairwiseScorer::score(&o, &docs[0], &q, Target::Root, RelationKind::ParentOf).is_err());
        assert!(MentionScorer::score(&o, &docs[1], &docs[1].mentions[0]).is_err());
        assert!(OracleScorer::new(&docs, OracleScorerConfig { sigma: -1.0, seed: 0 }).is_err());
    }

    #[test]
    fn noise_is_reproducible() {
        let docs = corpus();
        let cfg = OracleScorerConfig { sigma: 0.5, seed: 7 };
        let a = OracleScorer::new(&docs, cfg).unwrap();
        let b = OracleScorer::new(&docs, cfg).unwrap();
        let d = &docs[0];
        let n = d.graph_nodes()[0].clone();
        let s = |o: &OracleScorer| PairwiseScorer::score(o, d, &n, Target::Root, RelationKind::ParentOf).unwrap();
        assert_eq!(s(&a), s(&b));
        assert_ne!(s(&a), 0.0);
    }
}
