//! Naive fusion baselines over a whole pool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{BinaryDist, PredictionPool};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorityVote {
    /// Share of members voting yes, used as the probability.
    pub share: BinaryDist,
    pub yes_votes: usize,
    pub voters: usize,
    /// The vote share is exactly one half; the predicted label is then `no`.
    pub tie: bool,
}

impl MajorityVote {
    pub fn predicts_yes(&self) -> bool {
        self.share.p_yes() > 0.5
    }
}

/// Each member votes yes iff `p_yes > threshold`.
pub fn majority_vote(pool: &PredictionPool, threshold: f64) -> Result<MajorityVote> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let voters = pool.len();
    let yes_votes = pool.dists().filter(|d| d.p_yes() > threshold).count();
    Ok(MajorityVote {
        share: BinaryDist::clamped(yes_votes as f64 / voters as f64),
        yes_votes,
        voters,
        tie: 2 * yes_votes == voters,
    })
}

pub fn mean_ensemble(pool: &PredictionPool) -> Result<BinaryDist> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let sum: f64 = pool.dists().map(BinaryDist::p_yes).sum();
    Ok(BinaryDist::clamped(sum / pool.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::{muse_greedy, Aggregation, MuseParams};
    use proptest::prelude::*;

    fn pool(ps: &[f64]) -> PredictionPool {
        PredictionPool::from_probabilities("x", ps).unwrap()
    }

    #[test]
    fn majority_examples() {
        let v = majority_vote(&pool(&[0.9, 0.8, 0.1]), 0.5).unwrap();
        assert_eq!(v.yes_votes, 2);
        assert!((v.share.p_yes() - 2.0 / 3.0).abs() < 1e-15);
        assert!(v.predicts_yes());
        assert_eq!(majority_vote(&pool(&[0.4, 0.3]), 0.5).unwrap().share.p_yes(), 0.0);
        assert_eq!(majority_vote(&pool(&[0.5]), 0.5).unwrap().share.p_yes(), 0.0);
    }

    #[test]
    fn majority_tie_predicts_no() {
        let v = majority_vote(&pool(&[0.9, 0.1]), 0.5).unwrap();
        assert!(v.tie);
        assert!(!v.predicts_yes());
    }

    #[test]
    fn mean_examples() {
        assert!((mean_ensemble(&pool(&[0.2, 0.8])).unwrap().p_yes() - 0.5).abs() < 1e-15);
        assert_eq!(mean_ensemble(&pool(&[0.7])).unwrap().p_yes(), 0.7);
        assert!((mean_ensemble(&pool(&[0.9, 0.6, 0.3])).unwrap().p_yes() - 0.6).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mean_matches_unbounded_greedy(ps in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
            let p = pool(&ps);
            let params = MuseParams {
                eps_tol: f64::INFINITY,
                m_min: ps.len(),
                aggregation: Aggregation::Mean,
                ..Default::default()
            };
            let r = muse_greedy(&p, &params).unwrap();
            prop_assert_eq!(r.chosen.len(), ps.len());
            prop_assert!((r.p_hat_yes - mean_ensemble(&p).unwrap().p_yes()).abs() < 1e-12);
        }

        #[test]
        fn baselines_permutation_invariant(
            ps in proptest::collection::vec(0.0f64..=1.0, 1..20),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = ps.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (a, b) = (pool(&ps), pool(&shuffled));
            prop_assert_eq!(majority_vote(&a, 0.5).unwrap().yes_votes, majority_vote(&b, 0.5).unwrap().yes_votes);
            prop_assert!((mean_ensemble(&a).unwrap().p_yes() - mean_ensemble(&b).unwrap().p_yes()).abs() < 1e-12);
        }
    }
}
