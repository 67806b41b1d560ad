//! Synthetic instance generation for the benchmarks.

use fairsolve_core::{FeatureId, GroupId, JointDistribution, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random distribution with the given shape. Every group keeps
/// positive and negative mass so all three fairness notions are defined.
pub fn synthetic_distribution(
    groups: usize,
    features_per_group: usize,
    seed: u64,
) -> JointDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<(u32, u32)> = Vec::new();
    for _ in 0..groups {
        for i in 0..features_per_group {
            let (mut pos, mut neg) = (rng.gen_range(0..=99), rng.gen_range(0..=99));
            if i == 0 {
                pos = pos.max(1);
            }
            if i == features_per_group - 1 {
                neg = neg.max(1);
            }
            if pos == 0 && neg == 0 {
                neg = 1;
            }
            weights.push((pos, neg));
        }
    }
    let total: u32 = weights.iter().map(|(p, n)| p + n).sum();
    let mut rows = Vec::new();
    let mut idx = 0;
    for g in 0..groups {
        for i in 0..features_per_group {
            let (pos, neg) = weights[idx];
            idx += 1;
            let feature = FeatureId::from(format!("f{g}_{i}"));
            let group = GroupId::from(format!("g{g}"));
            rows.push((feature.clone(), group.clone(), true, Rat::new(pos as i64, total as i64)));
            rows.push((feature, group, false, Rat::new(neg as i64, total as i64)));
        }
    }
    JointDistribution::from_records(rows).expect("synthetic instance is valid")
}
