//! Visit status label sets for mentions and entities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A closed label set that can be enumerated in its fixed tie-break order.
pub trait Label: Copy + Ord + fmt::Debug + fmt::Display + 'static {
    /// Every label, in tie-break order.
    const ALL: &'static [Self];

    fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|l| *l == self)
            .expect("label is a member of its own set")
    }
}

/// Mention-level visit status.
///
/// The declaration order is the tie-break order used by every argmax over
/// labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MentionLabel {
    Visit,
    PlanToVisit,
    See,
    #[serde(rename = "Visit-Past")]
    VisitPast,
    #[serde(rename = "Visit-Future")]
    VisitFuture,
    UnkOrNotVisit,
}

impl Label for MentionLabel {
    const ALL: &'static [Self] = &[
        MentionLabel::Visit,
        MentionLabel::PlanToVisit,
        MentionLabel::See,
        MentionLabel::VisitPast,
        MentionLabel::VisitFuture,
        MentionLabel::UnkOrNotVisit,
    ];
}

impl MentionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MentionLabel::Visit => "Visit",
            MentionLabel::PlanToVisit => "PlanToVisit",
            MentionLabel::See => "See",
            MentionLabel::VisitPast => "Visit-Past",
            MentionLabel::VisitFuture => "Visit-Future",
            MentionLabel::UnkOrNotVisit => "UnkOrNotVisit",
        }
    }

    /// Labels that make the owning entity count as visited.
    pub fn implies_visit(self) -> bool {
        matches!(self, MentionLabel::Visit | MentionLabel::PlanToVisit)
    }
}

impl fmt::Display for MentionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MentionLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MentionLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Entity-level visit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityLabel {
    Visit,
    Other,
}

impl Label for EntityLabel {
    const ALL: &'static [Self] = &[EntityLabel::Visit, EntityLabel::Other];
}

impl EntityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Visit => "Visit",
            EntityLabel::Other => "Other",
        }
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_sets_have_fixed_sizes() {
        assert_eq!(MentionLabel::ALL.len(), 6);
        assert_eq!(EntityLabel::ALL.len(), 2);
    }

    #[test]
    fn order_matches_tie_break_order() {
        let mut sorted = MentionLabel::ALL.to_vec();
        sorted.sort();
        assert_eq!(sorted, MentionLabel::ALL);
        assert!(MentionLabel::Visit < MentionLabel::UnkOrNotVisit);
        assert_eq!(MentionLabel::VisitFuture.index(), 4);
    }

    #[test]
    fn names_round_trip() {
        for l in MentionLabel::ALL {
            assert_eq!(l.as_str().parse::<MentionLabel>().unwrap(), *l);
            let json = serde_json::to_string(l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.as_str()));
        }
        for l in EntityLabel::ALL {
            assert_eq!(l.as_str().parse::<EntityLabel>().unwrap(), *l);
        }
        assert!("Visited".parse::<MentionLabel>().is_err());
    }
}
