//! Fingerprint-grounded positive/negative pair selection for contrastive
//! training. Every epoch each anchor gets fresh positives (the most similar
//! pool items above a threshold, always including itself) and negatives
//! (a uniform draw from the items below a dissimilarity threshold).

use rand::seq::IndexedRandom;
use thiserror::Error;

use crate::fingerprint::{tanimoto, FingerprintVector};

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Maximum number of positives, anchor included.
    pub max_positives: usize,
    /// Minimum Tanimoto similarity for a positive.
    pub tau_pos: f64,
    /// Maximum (exclusive) Tanimoto similarity for a negative.
    pub tau_neg: f64,
    /// Number of negatives drawn per anchor.
    pub negatives: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            max_positives: 2,
            tau_pos: 0.7,
            tau_neg: 0.3,
            negatives: 8,
        }
    }
}

impl SamplerConfig {
    /// The plain-contrastive fallback: no fingerprint-based positives, and
    /// negatives drawn uniformly from the whole pool.
    pub fn without_morgan(negatives: usize) -> SamplerConfig {
        SamplerConfig {
            max_positives: 1,
            tau_pos: f64::INFINITY,
            tau_neg: f64::INFINITY,
            negatives,
        }
    }
}

/// One anchor's contrastive sample for an epoch, as pool indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSample {
    pub anchor: usize,
    /// Anchor first, then up to `max_positives - 1` similar items.
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("pool of {pool} items cannot supply {required} positives+negatives")]
    PoolTooSmall { pool: usize, required: usize },
    #[error("fingerprint error: {0}")]
    Fingerprint(#[from] crate::fingerprint::FingerprintError),
}

/// Draw one epoch's positives and negatives for `anchor`.
///
/// Positives are the highest-similarity items with Tanimoto >= `tau_pos`
/// (ties broken by ascending index), at most `max_positives - 1` of them;
/// when nothing reaches the threshold the anchor stands alone. Negatives are
/// drawn uniformly without replacement from items with similarity below
/// `tau_neg`; when fewer than `negatives` qualify, the threshold relaxes
/// upward to the `negatives`-th smallest similarity. Positives and negatives
/// never overlap.
pub fn sample_pairs(
    anchor: usize,
    fingerprints: &[FingerprintVector],
    cfg: &SamplerConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<PairSample, SamplerError> {
    assert!(anchor < fingerprints.len(), "anchor index out of range");
    assert!(cfg.max_positives >= 1, "max_positives must be at least 1");
    let pool = fingerprints.len();
    let required = cfg.negatives + cfg.max_positives;
    if pool < required {
        return Err(SamplerError::PoolTooSmall { pool, required });
    }

    let mut sims: Vec<(usize, f64)> = Vec::with_capacity(pool - 1);
    for (i, fp) in fingerprints.iter().enumerate() {
        if i == anchor {
            continue;
        }
        sims.push((i, tanimoto(&fingerprints[anchor], fp)?));
    }

    let mut positives = vec![anchor];
    if cfg.max_positives > 1 {
        let mut eligible: Vec<(usize, f64)> = sims
            .iter()
            .copied()
            .filter(|&(_, s)| s >= cfg.tau_pos)
            .collect();
        eligible.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        positives.extend(eligible.iter().take(cfg.max_positives - 1).map(|&(i, _)| i));
    }

    let mut eligible_neg: Vec<usize> = sims
        .iter()
        .filter(|&&(i, s)| s < cfg.tau_neg && !positives.contains(&i))
        .map(|&(i, _)| i)
        .collect();
    if eligible_neg.len() < cfg.negatives {
        // relax the threshold to the k-th smallest similarity
        let mut by_sim: Vec<(usize, f64)> = sims
            .iter()
            .copied()
            .filter(|(i, _)| !positives.contains(i))
            .collect();
        by_sim.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let relaxed = by_sim[cfg.negatives.min(by_sim.len()) - 1].1;
        eligible_neg = by_sim
            .iter()
            .filter(|&&(_, s)| s <= relaxed)
            .map(|&(i, _)| i)
            .collect();
    }
    let mut negatives: Vec<usize> = eligible_neg.sample(rng, cfg.negatives).copied().collect();
    negatives.sort_unstable();

    Ok(PairSample {
        anchor,
        positives,
        negatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::morgan_fingerprint;
    use crate::molgraph::parse_smiles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_pool() -> Vec<FingerprintVector> {
        // alkanes and alcohols cluster; benzene derivatives sit apart
        let smiles = [
            "CCCCC",
            "CCCCCC",
            "CCCCCCC",
            "CCCCCCCC",
            "CCCCO",
            "CCCCCO",
            "CCCCCCO",
            "CCCCCCCO",
            "c1ccccc1",
            "c1ccccc1C",
            "c1ccccc1CC",
            "c1ccccc1O",
            "CC(=O)O",
            "CCC(=O)O",
            "CCCC(=O)O",
            "CCN",
            "CCCN",
            "CCCCN",
            "CCS",
            "CCCS",
        ];
        smiles
            .iter()
            .map(|s| morgan_fingerprint(&parse_smiles(s).unwrap(), 2, 2048))
            .collect()
    }

    #[test]
    fn unreachable_tau_pos_leaves_anchor_alone() {
        let pool = toy_pool();
        let cfg = SamplerConfig {
            tau_pos: 1.01,
            ..SamplerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_pairs(0, &pool, &cfg, &mut rng).unwrap();
        assert_eq!(s.positives, vec![0]);
        assert_eq!(s.negatives.len(), cfg.negatives);
    }

    #[test]
    fn duplicate_molecule_is_always_a_positive() {
        let mut pool = toy_pool();
        pool.push(pool[0].clone());
        let cfg = SamplerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sample_pairs(0, &pool, &cfg, &mut rng).unwrap();
        assert!(s.positives.contains(&(pool.len() - 1)));
    }

    #[test]
    fn negatives_come_from_below_the_threshold() {
        let pool = toy_pool();
        // 13 of 19 pool items sit strictly below 0.45 for this anchor
        let cfg = SamplerConfig {
            tau_neg: 0.45,
            negatives: 8,
            ..SamplerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_pairs(0, &pool, &cfg, &mut rng).unwrap();
        for &i in &s.negatives {
            let sim = tanimoto(&pool[0], &pool[i]).unwrap();
            assert!(sim < 0.45, "negative {i} has similarity {sim}");
        }

        // with only 7 items strictly below 0.3, the threshold relaxes to
        // the 8th smallest similarity, which is exactly 0.3 here
        let tight = SamplerConfig {
            tau_neg: 0.3,
            negatives: 8,
            ..SamplerConfig::default()
        };
        let s = sample_pairs(0, &pool, &tight, &mut rng).unwrap();
        assert_eq!(s.negatives.len(), 8);
        let max_sim = s
            .negatives
            .iter()
            .map(|&i| tanimoto(&pool[0], &pool[i]).unwrap())
            .fold(0.0f64, f64::max);
        assert!((max_sim - 0.3).abs() < 1e-12, "max negative sim {max_sim}");
    }

    #[test]
    fn positives_and_negatives_are_disjoint() {
        let pool = toy_pool();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for anchor in 0..pool.len() {
            let s = sample_pairs(anchor, &pool, &SamplerConfig::default(), &mut rng).unwrap();
            for i in &s.negatives {
                assert!(!s.positives.contains(i));
            }
            assert_eq!(s.positives[0], anchor);
        }
    }

    #[test]
    fn same_seed_gives_same_sample() {
        let pool = toy_pool();
        let cfg = SamplerConfig::default();
        let a = sample_pairs(5, &pool, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_pairs(5, &pool, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let c = sample_pairs(5, &pool, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        // different epoch seed, same positives either way
        assert_eq!(c.positives, a.positives);
    }

    #[test]
    fn dense_pool_relaxes_the_negative_threshold() {
        // all items nearly identical: nothing is below tau_neg
        let pool: Vec<FingerprintVector> = (0..12)
            .map(|_| morgan_fingerprint(&parse_smiles("CCO").unwrap(), 2, 2048))
            .collect();
        let cfg = SamplerConfig {
            max_positives: 2,
            tau_pos: 0.7,
            tau_neg: 0.3,
            negatives: 6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sample_pairs(0, &pool, &cfg, &mut rng).unwrap();
        assert_eq!(s.negatives.len(), 6);
        for i in &s.negatives {
            assert!(!s.positives.contains(i));
        }
    }

    #[test]
    fn small_pool_is_rejected() {
        let pool = vec![morgan_fingerprint(&parse_smiles("C").unwrap(), 2, 2048); 5];
        let cfg = SamplerConfig::default(); // needs 8 + 2
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(matches!(
            sample_pairs(0, &pool, &cfg, &mut rng),
            Err(SamplerError::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn without_morgan_matches_plain_contrastive() {
        let pool = toy_pool();
        let cfg = SamplerConfig::without_morgan(8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = sample_pairs(3, &pool, &cfg, &mut rng).unwrap();
        assert_eq!(s.positives, vec![3]);
        assert_eq!(s.negatives.len(), 8);
    }
}
