//! Shared plumbing for pluggable scorers: errors, deterministic argmax, and
//! seed derivation.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("no gold annotation for {0}")]
    OutsideGold(String),
    #[error("unsupported query: {0}")]
    Unsupported(String),
    #[error("score for {query} is not finite ({value})")]
    NonFinite { query: String, value: f64 },
}

/// Index of the largest score; ties go to the earliest position. `None` for
/// an empty slice.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Stable 64-bit seed derived from a base seed and a sequence of labels.
/// Independent of platform, process, and iteration order elsewhere.
pub fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax_first(&[]), None);
        assert_eq!(argmax_first(&[0.1, 0.8, 0.8]), Some(1));
        assert_eq!(argmax_first(&[1.0; 6]), Some(0));
        assert_eq!(argmax_first(&[-3.0, -1.0]), Some(1));
    }

    #[test]
    fn derived_seeds_are_stable_and_label_sensitive() {
        assert_eq!(derive_seed(7, &["a", "b"]), derive_seed(7, &["a", "b"]));
        assert_ne!(derive_seed(7, &["a", "b"]), derive_seed(7, &["ab"]));
        assert_ne!(derive_seed(7, &["a"]), derive_seed(8, &["a"]));
    }
}
