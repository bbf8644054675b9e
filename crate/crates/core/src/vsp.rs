//! Visit status prediction.
//!
//! Mentions are labeled by argmax over a pluggable [`MentionScorer`]; entity
//! labels are then derived with the mention label aggregation (MLA) rule:
//! an entity is `Visit` iff at least one of its mentions is `Visit` or
//! `PlanToVisit`.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::document::{Document, Mention};
use crate::label::{EntityLabel, Label, MentionLabel};
use crate::score::{argmax_first, ScoreError};

/// Non-negative weight per mention label. Need not sum to one.
pub type LabelWeights = BTreeMap<MentionLabel, f64>;

pub trait MentionScorer {
    fn score(&self, document: &Document, mention: &Mention) -> Result<LabelWeights, ScoreError>;
}

impl<S: MentionScorer + ?Sized> MentionScorer for &S {
    fn score(&self, document: &Document, mention: &Mention) -> Result<LabelWeights, ScoreError> {
        (**self).score(document, mention)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VspError {
    #[error("scoring mention `{mention}` failed: {source}")]
    Score {
        mention: String,
        #[source]
        source: ScoreError,
    },
    #[error("scorer gave no weight for {label} on mention `{mention}`")]
    MissingWeight { mention: String, label: MentionLabel },
    #[error("scorer gave invalid weight {value} for {label} on mention `{mention}`")]
    InvalidWeight {
        mention: String,
        label: MentionLabel,
        value: f64,
    },
    #[error("cannot aggregate an empty label list")]
    EmptyLabels,
    #[error("entity `{0}` has no predicted mention labels")]
    EntityWithoutLabels(String),
    #[error("label histogram is empty")]
    EmptyHistogram,
    #[error("gold and predicted items differ: {missing} missing, {extra} unexpected (first: {example})")]
    ItemMismatch {
        missing: usize,
        extra: usize,
        example: String,
    },
}

/// Per-entity labels derived from mention labels, plus the mention labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VspPrediction {
    pub mention_labels: BTreeMap<String, MentionLabel>,
    pub entity_labels: BTreeMap<String, EntityLabel>,
}

impl VspPrediction {
    pub fn apply_to(&self, document: &Document) -> Document {
        document.with_labels(&self.mention_labels, &self.entity_labels)
    }
}

/// Argmax label of one weight vector; ties go to the earlier label in the
/// fixed label order.
pub fn argmax_label(mention: &str, weights: &LabelWeights) -> Result<MentionLabel, VspError> {
    let mut values = Vec::with_capacity(MentionLabel::ALL.len());
    for &label in MentionLabel::ALL {
        let Some(&w) = weights.get(&label) else {
            return Err(VspError::MissingWeight {
                mention: mention.to_string(),
                label,
            });
        };
        if !(w.is_finite() && w >= 0.0) {
            return Err(VspError::InvalidWeight {
                mention: mention.to_string(),
                label,
                value: w,
            });
        }
        values.push(w);
    }
    Ok(MentionLabel::ALL[argmax_first(&values).expect("six labels")])
}

pub fn predict_mention_labels<S: MentionScorer>(
    scorer: &S,
    document: &Document,
) -> Result<BTreeMap<String, MentionLabel>, VspError> {
    document
        .mentions
        .iter()
        .map(|m| {
            let weights = scorer.score(document, m).map_err(|source| VspError::Score {
                mention: m.id.clone(),
                source,
            })?;
            Ok((m.id.clone(), argmax_label(&m.id, &weights)?))
        })
        .collect()
}

/// The MLA rule.
pub fn aggregate_mla(labels: &[MentionLabel]) -> Result<EntityLabel, VspError> {
    if labels.is_empty() {
        return Err(VspError::EmptyLabels);
    }
    Ok(if labels.iter().any(|l| l.implies_visit()) {
        EntityLabel::Visit
    } else {
        EntityLabel::Other
    })
}

/// Entity labels by MLA over the given mention labels.
pub fn aggregate_entities(
    document: &Document,
    mention_labels: &BTreeMap<String, MentionLabel>,
) -> Result<BTreeMap<String, EntityLabel>, VspError> {
    document
        .entities
        .iter()
        .map(|e| {
            let labels: Vec<MentionLabel> = e.mention_ids.iter().filter_map(|m| mention_labels.get(m).copied()).collect();
            let label = aggregate_mla(&labels).map_err(|_| VspError::EntityWithoutLabels(e.id.clone()))?;
            Ok((e.id.clone(), label))
        })
        .collect()
}

/// Two-step prediction: mention argmax, then MLA.
pub fn predict<S: MentionScorer>(scorer: &S, document: &Document) -> Result<VspPrediction, VspError> {
    let mention_labels = predict_mention_labels(scorer, document)?;
    let entity_labels = aggregate_entities(document, &mention_labels)?;
    Ok(VspPrediction {
        mention_labels,
        entity_labels,
    })
}

/// Most frequent label of a histogram; ties go to the earlier label.
pub fn majority_label<L: Label>(histogram: &BTreeMap<L, usize>) -> Option<L> {
    let mut best: Option<(L, usize)> = None;
    for &l in L::ALL {
        let c = histogram.get(&l).copied().unwrap_or(0);
        if c > best.map_or(0, |(_, b)| b) {
            best = Some((l, c));
        }
    }
    best.map(|(l, _)| l)
}

/// Constant predictor of the training-majority label at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub mention: MentionLabel,
    pub entity: EntityLabel,
}

impl MajorityBaseline {
    pub fn from_histograms(
        mentions: &BTreeMap<MentionLabel, usize>,
        entities: &BTreeMap<EntityLabel, usize>,
    ) -> Result<Self, VspError> {
        Ok(Self {
            mention: majority_label(mentions).ok_or(VspError::EmptyHistogram)?,
            entity: majority_label(entities).ok_or(VspError::EmptyHistogram)?,
        })
    }

    /// Learns the majority labels from gold-labeled training documents.
    pub fn from_documents(documents: &[Document]) -> Result<Self, VspError> {
        let mut mentions = BTreeMap::new();
        let mut entities = BTreeMap::new();
        for d in documents {
            for l in d.mentions.iter().filter_map(|m| m.label) {
                *mentions.entry(l).or_insert(0) += 1;
            }
            for l in d.entities.iter().filter_map(|e| e.label) {
                *entities.entry(l).or_insert(0) += 1;
            }
        }
        Self::from_histograms(&mentions, &entities)
    }

    /// Constant labels at both levels; entity labels do not go through MLA.
    pub fn predict(&self, document: &Document) -> VspPrediction {
        VspPrediction {
            mention_labels: document.mentions.iter().map(|m| (m.id.clone(), self.mention)).collect(),
            entity_labels: document.entities.iter().map(|e| (e.id.clone(), self.entity)).collect(),
        }
    }
}

impl MentionScorer for MajorityBaseline {
    fn score(&self, _document: &Document, _mention: &Mention) -> Result<LabelWeights, ScoreError> {
        Ok(MentionLabel::ALL
            .iter()
            .map(|&l| (l, if l == self.mention { 1.0 } else { 0.0 }))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScores<L> {
    pub label: L,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold items with this label.
    pub support: usize,
    /// Predicted items with this label.
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<L> {
    pub items: usize,
    pub accuracy: f64,
    /// Unweighted mean of per-label F1 over the full label set, zero-support
    /// labels included.
    pub macro_f1: f64,
    pub per_label: Vec<LabelScores<L>>,
    /// Rows are gold labels, columns predicted labels, both in label order.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Accuracy, macro-F1, per-label scores, and the confusion matrix of
/// predicted labels against gold labels over the same item set.
pub fn evaluate_vsp<K: Ord + Debug, L: Label>(
    gold: &BTreeMap<K, L>,
    predicted: &BTreeMap<K, L>,
) -> Result<ClassificationReport<L>, VspError> {
    let missing: Vec<&K> = gold.keys().filter(|k| !predicted.contains_key(*k)).collect();
    let extra: Vec<&K> = predicted.keys().filter(|k| !gold.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let example = missing.first().or(extra.first()).map(|k| format!("{k:?}")).unwrap_or_default();
        return Err(VspError::ItemMismatch {
            missing: missing.len(),
            extra: extra.len(),
            example,
        });
    }
    let n = L::ALL.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for (k, g) in gold {
        confusion[g.index()][predicted[k].index()] += 1;
    }
    let items = gold.len();
    let correct: usize = (0..n).map(|i| confusion[i][i]).sum();
    let per_label: Vec<LabelScores<L>> = L::ALL
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let support: usize = confusion[i].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[i]).sum();
            let precision = ratio(confusion[i][i], predicted);
            let recall = ratio(confusion[i][i], support);
            LabelScores {
                label,
                precision,
                recall,
                f1: f1_score(precision, recall),
                support,
                predicted,
            }
        })
        .collect();
    let macro_f1 = per_label.iter().map(|s| s.f1).sum::<f64>() / n as f64;
    Ok(ClassificationReport {
        items,
        accuracy: ratio(correct, items),
        macro_f1,
        per_label,
        confusion,
    })
}

/// Gold-setting helpers keyed by (document id, item id) for pooled
/// corpus-level evaluation.
pub fn pooled_mention_labels(documents: &[Document]) -> BTreeMap<(String, String), MentionLabel> {
    documents
        .iter()
        .flat_map(|d| d.mentions.iter().filter_map(move |m| m.label.map(|l| ((d.id.clone(), m.id.clone()), l))))
        .collect()
}

pub fn pooled_entity_labels(documents: &[Document]) -> BTreeMap<(String, String), EntityLabel> {
    documents
        .iter()
        .flat_map(|d| d.entities.iter().filter_map(move |e| e.label.map(|l| ((d.id.clone(), e.id.clone()), l))))
        .collect()
}
